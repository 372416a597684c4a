#include "blockchol/lasso.hpp"

#include <cmath>
#include <string>

namespace blockchol {

double soft_threshold(double z, double t) {
  if (z > t) return z - t;
  if (z < -t) return z + t;
  return 0.0;
}

LassoGram::LassoGram(const Eigen::Ref<const Matrix>& response,
                     const Eigen::Ref<const Matrix>& design)
    : n_(response.rows()) {
  if (n_ < 1 || design.rows() != n_) {
    throw InvalidInput("lasso: response and design must share n >= 1 rows");
  }
  if (!response.allFinite() || !design.allFinite()) {
    throw InvalidInput("lasso: non-finite data");
  }
  const double inv_n = 1.0 / static_cast<double>(n_);
  sxx_ = (response.transpose() * response) * inv_n;
  cross_ = (response.transpose() * design) * inv_n;
  gram_ = Matrix(design.cols(), design.cols());
  gram_.triangularView<Eigen::Lower>() = (design.transpose() * design) * inv_n;
  gram_ = gram_.selfadjointView<Eigen::Lower>();
}

namespace {

void check_weight(const Matrix& weight, Index pj) {
  if (weight.rows() != pj || weight.cols() != pj) {
    throw InvalidInput("lasso: weight must be p_j x p_j");
  }
  if (!weight.allFinite()) throw InvalidInput("lasso: non-finite weight");
  try {
    spd_cholesky(SymMatrix::from_symmetric(weight, 1e-8));
  } catch (const NotPositiveDefinite&) {
    throw InvalidInput("lasso: weight is not positive definite");
  }
}

// Unpenalized fit A = C G^{-1}, independent of W. False when G is (near) singular.
bool least_squares(const LassoGram& gram, Matrix& coef) {
  if (gram.predictors() >= gram.n()) return false;
  Eigen::LLT<Matrix> llt(gram.design_gram());
  if (llt.info() != Eigen::Success) return false;
  const Matrix& l = llt.matrixLLT();
  for (Index i = 0; i < l.rows(); ++i) {
    if (!(l(i, i) > 1e-7 * std::sqrt(gram.design_gram()(i, i)))) return false;
  }
  coef = llt.solve(gram.cross().transpose()).transpose();
  return coef.allFinite();
}

}  // namespace

double residual_pivot(const LassoGram& gram, const Matrix& coef) {
  const Vector scale = gram.response_gram().diagonal().cwiseSqrt().cwiseInverse();
  if (!scale.allFinite()) return 0.0;
  const Matrix ca = gram.cross() * coef.transpose();
  const Matrix rr = gram.response_gram() - ca - ca.transpose() +
                    coef * gram.design_gram() * coef.transpose();
  Eigen::LLT<Matrix> llt(scale.asDiagonal() * rr * scale.asDiagonal());
  if (llt.info() != Eigen::Success) return 0.0;
  return llt.matrixLLT().diagonal().cwiseAbs2().minCoeff();
}

double lasso_objective(const LassoGram& gram, const Matrix& weight, const Matrix& coef,
                       double lambda1) {
  // R'R/n = Sxx - C A' - A C' + A G A'
  const Matrix ca = gram.cross() * coef.transpose();
  const Matrix rr = gram.response_gram() - ca - ca.transpose() +
                    coef * gram.design_gram() * coef.transpose();
  return (weight.cwiseProduct(rr)).sum() + lambda1 * coef.cwiseAbs().sum();
}

Matrix lasso_gradient(const LassoGram& gram, const Matrix& weight, const Matrix& coef) {
  return -2.0 * weight * (gram.cross() - coef * gram.design_gram());
}

double lasso_kkt_violation(const LassoGram& gram, const Matrix& weight, const Matrix& coef,
                           double lambda1) {
  const Matrix g = lasso_gradient(gram, weight, coef);
  double worst = 0.0;
  for (Index l = 0; l < coef.cols(); ++l) {
    for (Index k = 0; k < coef.rows(); ++k) {
      const double a = coef(k, l);
      const double v = a == 0.0 ? std::max(0.0, std::abs(g(k, l)) - lambda1)
                                : std::abs(g(k, l) + lambda1 * (a > 0 ? 1.0 : -1.0));
      worst = std::max(worst, v);
    }
  }
  return worst;
}

double lasso_lambda_max(const LassoGram& gram, const Matrix& weight) {
  if (gram.predictors() == 0) return 0.0;
  return (2.0 * weight * gram.cross()).cwiseAbs().maxCoeff();
}

double lasso_lambda_max(const LassoProblem& problem) {
  LassoGram gram(problem.response, problem.design);
  check_weight(problem.weight, gram.responses());
  return lasso_lambda_max(gram, problem.weight);
}

LassoSolution solve_lasso(const LassoGram& gram, const Matrix& weight, double lambda1,
                          const LassoOptions& options, const Matrix* warm_start) {
  const Index pj = gram.responses();
  const Index q = gram.predictors();
  check_weight(weight, pj);
  if (!(lambda1 >= 0.0) || !std::isfinite(lambda1)) {
    throw InvalidInput("lasso: lambda1 must be finite and >= 0");
  }

  LassoSolution sol;
  sol.coef = Matrix::Zero(pj, q);
  if (q == 0 || pj == 0) {
    sol.converged = true;
    sol.objective = lasso_objective(gram, weight, sol.coef, lambda1);
    return sol;
  }
  if (lambda1 == 0.0 && least_squares(gram, sol.coef)) {
    sol.converged = true;
    sol.iterations = 1;
    sol.objective = lasso_objective(gram, weight, sol.coef, lambda1);
    if (options.record_objective) sol.objective_trace.push_back(sol.objective);
    return sol;
  }
  if (warm_start != nullptr) {
    if (warm_start->rows() != pj || warm_start->cols() != q) {
      throw InvalidInput("lasso: warm start has wrong dimensions");
    }
    sol.coef = *warm_start;
  }

  const Matrix& g = gram.design_gram();
  Matrix& a = sol.coef;
  // mt = (C - A G)', kept transposed so per-response updates touch a contiguous column.
  Matrix mt = gram.cross().transpose() - g * a.transpose();

  auto update = [&](Index k, Index l) -> double {
    const double h = 2.0 * weight(k, k) * g(l, l);
    if (h <= 0.0) {
      const double old = a(k, l);
      if (old != 0.0) {
        a(k, l) = 0.0;
        mt.col(k) += old * g.col(l);
      }
      return std::abs(old);
    }
    // gradient entry -2 (W M)_{kl}
    const double grad = -2.0 * mt.row(l).dot(weight.row(k));
    const double old = a(k, l);
    const double next = soft_threshold(h * old - grad, lambda1) / h;
    const double delta = next - old;
    if (delta != 0.0) {
      a(k, l) = next;
      mt.col(k) -= delta * g.col(l);
    }
    return std::abs(delta);
  };

  auto record = [&] {
    if (options.record_objective) {
      sol.objective_trace.push_back(lasso_objective(gram, weight, a, lambda1));
    }
    if (options.singular_residual_tol > 0.0 && sol.iterations % options.guard_interval == 0 &&
        !(residual_pivot(gram, a) > options.singular_residual_tol)) {
      throw NotPositiveDefinite("lasso: residual covariance became singular after " +
                                std::to_string(sol.iterations) + " sweeps");
    }
  };

  // Full sweeps alternate with sweeps over the current nonzero set; convergence
  // is only declared on a full sweep.
  std::vector<std::pair<Index, Index>> active;
  while (sol.iterations < options.max_sweeps) {
    double max_change = 0.0;
    for (Index k = 0; k < pj; ++k)
      for (Index l = 0; l < q; ++l) max_change = std::max(max_change, update(k, l));
    ++sol.iterations;
    record();
    if (max_change < options.tolerance) {
      sol.converged = true;
      break;
    }
    active.clear();
    for (Index k = 0; k < pj; ++k)
      for (Index l = 0; l < q; ++l)
        if (a(k, l) != 0.0) active.emplace_back(k, l);
    while (sol.iterations < options.max_sweeps) {
      double active_change = 0.0;
      for (auto [k, l] : active) active_change = std::max(active_change, update(k, l));
      ++sol.iterations;
      record();
      if (active_change < options.tolerance) break;
    }
  }
  sol.objective = lasso_objective(gram, weight, a, lambda1);
  return sol;
}

LassoSolution solve_lasso(const LassoProblem& problem, const LassoOptions& options) {
  LassoGram gram(problem.response, problem.design);
  return solve_lasso(gram, problem.weight, problem.lambda1, options);
}

}  // namespace blockchol
