#include "blockchol/bcd.hpp"

#include <charconv>
#include <cmath>
#include <string>

#include "blockchol/parallel.hpp"

namespace blockchol {

MethodMode MethodMode::parse(std::string_view text) {
  if (text == "prop" || text == "bcd") return {MethodKind::bcd, 0};
  if (text == "mcd") return {MethodKind::mcd, 0};
  if (text == "glasso") return {MethodKind::glasso_only, 0};
  if (text == "block-diag") return {MethodKind::block_diagonal, 0};
  constexpr std::string_view prefix = "banded:";
  if (text.substr(0, prefix.size()) == prefix) {
    const std::string_view num = text.substr(prefix.size());
    long long k = 0;
    auto [ptr, ec] = std::from_chars(num.data(), num.data() + num.size(), k);
    if (ec == std::errc() && ptr == num.data() + num.size() && k >= 1) {
      return {MethodKind::banded, static_cast<Index>(k)};
    }
  }
  throw InvalidInput("unknown method '" + std::string(text) +
                     "' (expected prop, mcd, glasso, block-diag or banded:K)");
}

std::string MethodMode::name() const {
  switch (kind) {
    case MethodKind::bcd: return "prop";
    case MethodKind::mcd: return "mcd";
    case MethodKind::glasso_only: return "glasso";
    case MethodKind::block_diagonal: return "block-diag";
    case MethodKind::banded: return "banded:" + std::to_string(band);
  }
  return "?";
}

void FitConfig::validate() const {
  auto finite_nonneg = [](double v) { return std::isfinite(v) && v >= 0.0; };
  if (!finite_nonneg(lambda1) || !finite_nonneg(lambda2)) {
    throw InvalidInput("fit: lambda1 and lambda2 must be finite and >= 0");
  }
  if (!(tau1 > 0.0) || !(tau2 > 0.0)) throw InvalidInput("fit: tau1 and tau2 must be > 0");
  if (!(singular_residual_tol >= 0.0)) throw InvalidInput("fit: singular_residual_tol must be >= 0");
  if (max_outer_iterations < 1) throw InvalidInput("fit: max_outer_iterations must be >= 1");
  if (method.kind == MethodKind::banded && method.band < 1) {
    throw InvalidInput("fit: banded mode needs k >= 1");
  }
}

Dataset Dataset::make(Matrix data, GroupPartition partition) {
  if (data.rows() < 2) throw InvalidInput("dataset needs at least 2 rows");
  if (partition.total() != data.cols()) {
    throw InvalidInput("partition total " + std::to_string(partition.total()) +
                       " != p = " + std::to_string(data.cols()));
  }
  if (!data.allFinite()) throw InvalidInput("dataset contains non-finite values");
  return Dataset{std::move(data), std::move(partition), false};
}

Dataset center_columns(const Dataset& d) {
  if (d.n() < 2) throw InvalidInput("center_columns: need n >= 2");
  Dataset out = d;
  const Eigen::RowVectorXd mean = d.data.colwise().mean();
  out.data.rowwise() -= mean;
  out.centered = true;
  return out;
}

SymMatrix sample_covariance(const Dataset& d) {
  const Dataset c = d.centered ? d : center_columns(d);
  Matrix s(c.p(), c.p());
  s.triangularView<Eigen::Lower>() =
      (c.data.transpose() * c.data) / static_cast<double>(c.n());
  return SymMatrix::from_lower(s);
}

Matrix banded_design(const Dataset& d, Index j, Index k) {
  const GroupPartition& part = d.partition;
  if (j < 0 || j >= part.groups()) throw InvalidInput("banded_design: group out of range");
  const Index first = std::max<Index>(0, j - k);
  const Index start = part.offset(first);
  return d.data.middleCols(start, part.offset(j) - start);
}

double group_objective(const SymMatrix& residual_cov, const Matrix& coef, const Matrix& dinv,
                       double lambda1, double lambda2) {
  const SymMatrix theta = SymMatrix::from_lower(dinv);
  double off = 0.0;
  for (Index j = 0; j < theta.dim(); ++j)
    for (Index i = j + 1; i < theta.dim(); ++i) off += 2.0 * std::abs(theta(i, j));
  return -spd_logdet(spd_cholesky(theta)) +
         residual_cov.dense().cwiseProduct(theta.dense()).sum() +
         lambda1 * coef.cwiseAbs().sum() + lambda2 * off;
}

namespace {

struct GroupFit {
  Matrix coef;
  Matrix dinv;
  int iterations = 0;
  bool converged = false;
  std::vector<double> trace;
};

Index first_predecessor(const MethodMode& mode, Index j) {
  switch (mode.kind) {
    case MethodKind::block_diagonal: return j;
    case MethodKind::banded: return std::max<Index>(0, j - mode.band);
    default: return 0;
  }
}

SymMatrix residual_covariance(const Eigen::Ref<const Matrix>& x,
                              const Eigen::Ref<const Matrix>& z, const Matrix& coef) {
  Matrix r = x;
  if (coef.size() > 0) r.noalias() -= z * coef.transpose();
  Matrix s(r.cols(), r.cols());
  s.triangularView<Eigen::Lower>() = (r.transpose() * r) / static_cast<double>(r.rows());
  return SymMatrix::from_lower(s);
}

GroupFit fit_group(const Dataset& d, Index j, Index first, const FitConfig& config,
                   const Matrix& dinv_start) {
  const GroupPartition& part = d.partition;
  const Index off = part.offset(j);
  const Index pj = part.size(j);
  const Index z_start = part.offset(first);
  const auto x = d.data.middleCols(off, pj);
  const auto z = d.data.middleCols(z_start, off - z_start);

  GroupFit out;
  out.coef = Matrix::Zero(pj, z.cols());
  SymMatrix dinv = SymMatrix::from_lower(dinv_start);

  auto step2 = [&](const SymMatrix& s_eps) {
    try {
      return solve_glasso(s_eps, config.lambda2, config.glasso, &dinv);
    } catch (const NotPositiveDefinite& e) {
      throw NotPositiveDefinite("group " + std::to_string(j + 1) +
                                ": residual covariance is singular (" + e.what() + ")");
    } catch (const InvalidInput& e) {
      throw InvalidInput("group " + std::to_string(j + 1) + ": " + e.what());
    }
  };

  if (z.cols() == 0) {
    // No predecessors: A_j = 0 and a single noise-precision step is final.
    const SymMatrix s_eps = residual_covariance(x, z, out.coef);
    GlassoSolution g = step2(s_eps);
    out.dinv = g.theta.dense();
    out.iterations = 1;
    out.converged = true;
    if (config.record_objective) {
      out.trace.push_back(group_objective(s_eps, out.coef, out.dinv, config.lambda1,
                                          config.lambda2));
    }
    return out;
  }

  const LassoGram gram(x, z);
  LassoOptions lasso = config.lasso;
  lasso.singular_residual_tol = config.singular_residual_tol;
  auto degenerate = [&](int t) {
    return NotPositiveDefinite("group " + std::to_string(j + 1) + ", outer iteration " +
                               std::to_string(t) +
                               ": residual covariance is singular; the penalized "
                               "likelihood is unbounded at these penalties");
  };
  Matrix d_prev = spd_inverse(spd_cholesky(dinv)).dense();
  for (int t = 1; t <= config.max_outer_iterations; ++t) {
    LassoSolution a;
    try {
      a = solve_lasso(gram, dinv.dense(), config.lambda1, lasso, &out.coef);
    } catch (const NotPositiveDefinite&) {
      throw degenerate(t);
    }
    if (!(residual_pivot(gram, a.coef) > config.singular_residual_tol)) throw degenerate(t);
    const SymMatrix s_eps = residual_covariance(x, z, a.coef);
    GlassoSolution g = step2(s_eps);

    const double change_a = (a.coef - out.coef).squaredNorm();
    const double change_d = (g.covariance.dense() - d_prev).squaredNorm();
    out.coef = std::move(a.coef);
    dinv = std::move(g.theta);
    d_prev = g.covariance.dense();
    out.iterations = t;
    if (config.record_objective) {
      out.trace.push_back(group_objective(s_eps, out.coef, dinv.dense(), config.lambda1,
                                          config.lambda2));
    }
    if (change_a < config.tau1 && change_d < config.tau2) {
      out.converged = true;
      break;
    }
  }
  out.dinv = dinv.dense();
  return out;
}

}  // namespace

PrecisionEstimate fit(const Dataset& d, const FitConfig& config, const BlockDiagSpd* warm_dinv) {
  config.validate();
  if (d.partition.total() != d.p()) {
    throw InvalidInput("partition total " + std::to_string(d.partition.total()) +
                       " != p = " + std::to_string(d.p()));
  }
  if (d.n() < 2) throw InvalidInput("fit: need n >= 2");
  if (!d.data.allFinite()) throw InvalidInput("fit: dataset contains non-finite values");

  if (config.method.kind == MethodKind::mcd || config.method.kind == MethodKind::glasso_only) {
    Dataset reshaped = d;
    reshaped.partition = config.method.kind == MethodKind::mcd
                             ? GroupPartition::singletons(d.p())
                             : GroupPartition::from_sizes({d.p()});
    FitConfig inner = config;
    inner.method = MethodMode{};
    return fit(reshaped, inner, warm_dinv);
  }

  const Dataset centered = d.centered ? d : center_columns(d);
  const GroupPartition& part = centered.partition;
  if (warm_dinv != nullptr && !(warm_dinv->partition() == part)) {
    throw InvalidInput("fit: warm start partition does not match the dataset");
  }

  const Index m = part.groups();
  std::vector<GroupFit> groups(static_cast<std::size_t>(m));
  parallel_for(static_cast<std::size_t>(m), config.workers, [&](std::size_t idx) {
    const Index j = static_cast<Index>(idx);
    const Matrix start = warm_dinv != nullptr
                             ? warm_dinv->block(j)
                             : Matrix::Identity(part.size(j), part.size(j));
    groups[idx] = fit_group(centered, j, first_predecessor(config.method, j), config, start);
  });

  BlockLowerUnit t(part);
  std::vector<Matrix> dinv_blocks;
  std::vector<int> iterations;
  std::vector<bool> converged;
  std::vector<std::vector<double>> traces;
  for (Index j = 0; j < m; ++j) {
    GroupFit& g = groups[static_cast<std::size_t>(j)];
    const Index first = first_predecessor(config.method, j);
    if (g.coef.size() > 0) {
      // Structural zeros stay implicit; only blocks with a nonzero entry are stored.
      for (Index i = first; i < j; ++i) {
        const Matrix blk =
            g.coef.middleCols(part.offset(i) - part.offset(first), part.size(i));
        if ((blk.array() != 0.0).any()) t.set_block(j, i, -blk);
      }
    }
    dinv_blocks.push_back(std::move(g.dinv));
    iterations.push_back(g.iterations);
    converged.push_back(g.converged);
    traces.push_back(std::move(g.trace));
  }
  PrecisionEstimate est = make_estimate(std::move(t), BlockDiagSpd(part, std::move(dinv_blocks)),
                                        config.lambda1, config.lambda2, std::move(iterations),
                                        std::move(converged));
  est.objective_traces = std::move(traces);
  return est;
}

}  // namespace blockchol
