#include "blockchol/glasso.hpp"

#include <cmath>
#include <string>

#include "blockchol/lasso.hpp"

namespace blockchol {

double glasso_lambda_max(const SymMatrix& s) {
  double best = 0.0;
  for (Index j = 0; j < s.dim(); ++j)
    for (Index i = j + 1; i < s.dim(); ++i) best = std::max(best, std::abs(s(i, j)));
  return best;
}

double glasso_objective(const SymMatrix& s, const SymMatrix& theta, double lambda2) {
  const double logdet = spd_logdet(spd_cholesky(theta));
  double off = 0.0;
  for (Index j = 0; j < theta.dim(); ++j)
    for (Index i = j + 1; i < theta.dim(); ++i) off += std::abs(theta(i, j));
  return -logdet + (s.dense().cwiseProduct(theta.dense())).sum() + lambda2 * 2.0 * off;
}

double glasso_kkt_violation(const SymMatrix& s, const SymMatrix& theta, double lambda2) {
  const SymMatrix w = spd_inverse(spd_cholesky(theta));
  double worst = 0.0;
  for (Index j = 0; j < s.dim(); ++j) {
    worst = std::max(worst, std::abs(w(j, j) - s(j, j)));
    for (Index i = j + 1; i < s.dim(); ++i) {
      const double r = w(i, j) - s(i, j);
      const double t = theta(i, j);
      const double v = t == 0.0 ? std::max(0.0, std::abs(r) - lambda2)
                                : std::abs(r - lambda2 * (t > 0 ? 1.0 : -1.0));
      worst = std::max(worst, v);
    }
  }
  return worst;
}

namespace {

void validate(const SymMatrix& s, double lambda2) {
  if (s.dim() < 1) throw InvalidInput("glasso: empty covariance");
  if (!s.dense().allFinite()) throw InvalidInput("glasso: non-finite covariance");
  if (!(lambda2 >= 0.0) || !std::isfinite(lambda2)) {
    throw InvalidInput("glasso: lambda2 must be finite and >= 0");
  }
  for (Index i = 0; i < s.dim(); ++i) {
    if (!(s(i, i) > 0.0)) {
      throw InvalidInput("glasso: diagonal entry " + std::to_string(i) + " of S is not positive");
    }
  }
}

GlassoSolution finish(const SymMatrix& s, double lambda2, SymMatrix theta, SymMatrix w,
                      int iterations, bool converged, std::vector<double> trace) {
  GlassoSolution out;
  out.objective = glasso_objective(s, theta, lambda2);
  out.theta = std::move(theta);
  out.covariance = std::move(w);
  out.iterations = iterations;
  out.converged = converged;
  out.objective_trace = std::move(trace);
  return out;
}

}  // namespace

GlassoSolution solve_glasso(const SymMatrix& s, double lambda2, const GlassoOptions& options,
                            const SymMatrix* warm_start) {
  validate(s, lambda2);
  const Index p = s.dim();
  std::vector<double> trace;

  // Closed-form cases.
  if (p == 1) {
    auto theta = SymMatrix::identity(1);
    theta.set(0, 0, 1.0 / s(0, 0));
    if (options.record_objective) trace.push_back(glasso_objective(s, theta, lambda2));
    return finish(s, lambda2, std::move(theta), s, 1, true, std::move(trace));
  }
  if (lambda2 == 0.0) {
    auto theta = spd_inverse(spd_cholesky(s));
    if (options.record_objective) trace.push_back(glasso_objective(s, theta, lambda2));
    return finish(s, lambda2, std::move(theta), s, 1, true, std::move(trace));
  }
  if (lambda2 >= glasso_lambda_max(s)) {
    auto theta = SymMatrix::diagonal(s.dense().diagonal().cwiseInverse());
    if (options.record_objective) trace.push_back(glasso_objective(s, theta, lambda2));
    return finish(s, lambda2, std::move(theta), SymMatrix::diagonal(s.dense().diagonal()), 1,
                  true, std::move(trace));
  }

  Matrix theta;
  Matrix w;
  if (warm_start != nullptr) {
    if (warm_start->dim() != p) throw InvalidInput("glasso: warm start has wrong dimension");
    theta = warm_start->dense();
    w = spd_inverse(spd_cholesky(*warm_start)).dense();
  } else {
    w = s.dense() + lambda2 * Matrix::Identity(p, p);
    theta = spd_inverse(spd_cholesky(SymMatrix::from_lower(w))).dense();
  }

  const double mean_diag = s.dense().diagonal().mean();
  const double outer_tol = options.tolerance * mean_diag;
  const double inner_tol = options.inner_tolerance / mean_diag;

  Matrix v(p, p);
  Vector beta(p);
  Vector grad(p);
  Vector u(p);
  int sweeps = 0;
  bool converged = false;
  while (sweeps < options.max_sweeps) {
    const Matrix w_prev = w;
    for (Index j = 0; j < p; ++j) {
      const double sjj = s(j, j);
      // v = (Theta_11)^{-1} embedded in p x p with row/col j zero.
      v.noalias() = w - w.col(j) * (w.row(j) / w(j, j));
      v.row(j).setZero();
      v.col(j).setZero();

      beta = theta.col(j);
      beta(j) = 0.0;
      // gradient of 0.5 b'Qb + s12'b with Q = sjj * v
      grad.noalias() = sjj * (v * beta);
      grad += s.dense().col(j);
      grad(j) = 0.0;

      for (int inner = 0; inner < options.max_inner_sweeps; ++inner) {
        double max_change = 0.0;
        for (Index i = 0; i < p; ++i) {
          if (i == j) continue;
          const double qii = sjj * v(i, i);
          const double old = beta(i);
          const double next = soft_threshold(qii * old - grad(i), lambda2) / qii;
          const double delta = next - old;
          if (delta != 0.0) {
            beta(i) = next;
            grad.noalias() += (delta * sjj) * v.col(i);
            max_change = std::max(max_change, std::abs(delta));
          }
        }
        if (max_change < inner_tol) break;
      }

      u.noalias() = v * beta;
      const double theta_jj = 1.0 / sjj + beta.dot(u);
      theta.col(j) = beta;
      theta.row(j) = beta.transpose();
      theta(j, j) = theta_jj;

      // W = Theta^{-1} after the column update.
      w.noalias() = v + sjj * (u * u.transpose());
      w.col(j) = -sjj * u;
      w.row(j) = -sjj * u.transpose();
      w(j, j) = sjj;
    }
    ++sweeps;

    auto theta_sym = SymMatrix::from_lower(theta);
    theta = theta_sym.dense();
    w = spd_inverse(spd_cholesky(theta_sym)).dense();
    if (options.record_objective) trace.push_back(glasso_objective(s, theta_sym, lambda2));

    const double change = (w - w_prev).cwiseAbs().mean();
    if (change < outer_tol) {
      converged = true;
      break;
    }
  }
  auto theta_sym = SymMatrix::from_lower(theta);
  auto w_sym = SymMatrix::from_lower(w);
  return finish(s, lambda2, std::move(theta_sym), std::move(w_sym), sweeps, converged,
                std::move(trace));
}

GlassoSolution solve_glasso(const GlassoProblem& problem, const GlassoOptions& options) {
  return solve_glasso(problem.s, problem.lambda2, options);
}

}  // namespace blockchol
