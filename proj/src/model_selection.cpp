#include "blockchol/model_selection.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "blockchol/io.hpp"
#include "blockchol/parallel.hpp"

namespace blockchol {

TuningGrid TuningGrid::from_values(std::vector<double> lambda1, std::vector<double> lambda2) {
  if (lambda1.empty() || lambda2.empty()) throw InvalidInput("tuning grid axes must be non-empty");
  for (const auto* axis : {&lambda1, &lambda2}) {
    for (double v : *axis) {
      if (!std::isfinite(v) || v < 0.0) throw InvalidInput("tuning values must be finite and >= 0");
    }
  }
  std::sort(lambda1.begin(), lambda1.end(), std::greater<>());
  std::sort(lambda2.begin(), lambda2.end(), std::greater<>());
  TuningGrid g;
  g.lambda1_values = std::move(lambda1);
  g.lambda2_values = std::move(lambda2);
  return g;
}

Index count_lower_nonzeros(const SymMatrix& omega, double threshold) {
  Index nu = 0;
  for (Index j = 0; j < omega.dim(); ++j)
    for (Index i = j + 1; i < omega.dim(); ++i)
      if (std::abs(omega(i, j)) > threshold) ++nu;
  return nu;
}

double bic(const SymMatrix& omega, const SymMatrix& s, Index n) {
  if (omega.dim() != s.dim()) throw InvalidInput("bic: dimension mismatch");
  if (n < 2) throw InvalidInput("bic: need n >= 2");
  double logdet = 0.0;
  try {
    logdet = spd_logdet(spd_cholesky(omega));
  } catch (const NotPositiveDefinite&) {
    throw InvalidInput("bic: estimate is not positive definite");
  }
  const double nn = static_cast<double>(n);
  return -logdet + omega.dense().cwiseProduct(s.dense()).sum() +
         std::log(nn) / nn * static_cast<double>(count_lower_nonzeros(omega));
}

double bic(const PrecisionEstimate& est, const SymMatrix& s, Index n) {
  return bic(est.omega, s, n);
}

namespace {

std::vector<double> log_axis(double top, int size, double min_ratio) {
  std::vector<double> out;
  if (top <= 0.0) return {0.0};
  const double step = std::log(min_ratio) / static_cast<double>(size - 1);
  for (int k = 0; k < size; ++k) {
    out.push_back(k == 0 ? top : top * std::exp(step * static_cast<double>(k)));
  }
  return out;
}

}  // namespace

TuningGrid auto_grid(const Dataset& d, int grid_size, double min_ratio, const MethodMode& method) {
  if (grid_size < 2) throw InvalidInput("auto_grid: grid_size must be >= 2");
  if (!(min_ratio > 0.0 && min_ratio < 1.0)) throw InvalidInput("auto_grid: need 0 < min_ratio < 1");
  const Dataset c = d.centered ? d : center_columns(d);
  if (c.data.cwiseAbs().maxCoeff() == 0.0) throw InvalidInput("auto_grid: all-zero data");

  GroupPartition part = c.partition;
  if (method.kind == MethodKind::mcd) part = GroupPartition::singletons(c.p());
  if (method.kind == MethodKind::glasso_only) part = GroupPartition::from_sizes({c.p()});

  const SymMatrix s = sample_covariance(c);
  double l1_max = 0.0;
  double l2_max = 0.0;
  for (Index j = 0; j < part.groups(); ++j) {
    const Index off = part.offset(j);
    const Index pj = part.size(j);
    const SymMatrix sjj = s.block(off, pj);
    l2_max = std::max(l2_max, glasso_lambda_max(sjj));
    if (method.ignores_lambda1()) continue;
    const Index first = method.kind == MethodKind::banded ? std::max<Index>(0, j - method.band) : 0;
    const Index zs = part.offset(first);
    if (off == zs) continue;
    const LassoGram gram(c.data.middleCols(off, pj), c.data.middleCols(zs, off - zs));
    Vector inv_diag = sjj.dense().diagonal();
    for (Index k = 0; k < pj; ++k) inv_diag(k) = inv_diag(k) > 0 ? 1.0 / inv_diag(k) : 1.0;
    l1_max = std::max({l1_max, lasso_lambda_max(gram, Matrix::Identity(pj, pj)),
                       lasso_lambda_max(gram, inv_diag.asDiagonal().toDenseMatrix())});
  }
  TuningGrid g;
  g.lambda1_values = log_axis(l1_max, grid_size, min_ratio);
  g.lambda2_values = log_axis(l2_max, grid_size, min_ratio);
  g.source = TuningGrid::Source::automatic;
  g.grid_size = grid_size;
  g.min_ratio = min_ratio;
  return g;
}

Selection select(const Dataset& d, const TuningGrid& grid, const FitConfig& config,
                 const SelectOptions& options) {
  if (grid.lambda1_values.empty() || grid.lambda2_values.empty()) {
    throw InvalidInput("select: empty tuning grid");
  }
  const Dataset c = d.centered ? d : center_columns(d);
  const SymMatrix s = sample_covariance(c);

  // An axis the method ignores collapses to its smallest value.
  const std::vector<double> l1_axis =
      config.method.ignores_lambda1() ? std::vector<double>{grid.lambda1_values.back()}
                                      : grid.lambda1_values;
  const std::vector<double> l2_axis =
      config.method.ignores_lambda2() ? std::vector<double>{grid.lambda2_values.back()}
                                      : grid.lambda2_values;
  const std::size_t rows = l1_axis.size();
  const std::size_t cols = l2_axis.size();

  std::vector<BicCell> table(rows * cols);
  std::vector<std::optional<PrecisionEstimate>> fits(rows * cols);

  parallel_for(rows, options.workers, [&](std::size_t r) {
    std::optional<BlockDiagSpd> warm;
    for (std::size_t k = 0; k < cols; ++k) {
      const std::size_t idx = r * cols + k;
      BicCell& cell = table[idx];
      cell.lambda1 = l1_axis[r];
      cell.lambda2 = l2_axis[k];
      FitConfig cfg = config;
      cfg.lambda1 = cell.lambda1;
      cfg.lambda2 = cell.lambda2;
      cfg.workers = 1;
      try {
        PrecisionEstimate est =
            fit(c, cfg, options.warm_start && warm ? &*warm : nullptr);
        cell.bic = bic(est, s, c.n());
        cell.nnz = count_lower_nonzeros(est.omega);
        cell.converged = est.all_converged();
        if (options.warm_start) warm = est.dinv;
        fits[idx] = std::move(est);
      } catch (const std::exception& e) {
        cell.bic = std::numeric_limits<double>::infinity();
        cell.error = e.what();
        warm.reset();
      }
    }
  });

  std::optional<std::size_t> best;
  for (std::size_t idx = 0; idx < table.size(); ++idx) {
    if (!fits[idx] || !std::isfinite(table[idx].bic)) continue;
    if (!best) {
      best = idx;
      continue;
    }
    const BicCell& a = table[idx];
    const BicCell& b = table[*best];
    if (a.bic < b.bic - 1e-12) {
      best = idx;
    } else if (std::abs(a.bic - b.bic) <= 1e-12) {
      if (a.lambda1 < b.lambda1 || (a.lambda1 == b.lambda1 && a.lambda2 < b.lambda2)) best = idx;
    }
  }
  if (!best) {
    throw InvalidInput("select: every grid cell failed (first error: " + table.front().error + ")");
  }
  Selection out{std::move(*fits[*best]), std::move(table), *best};
  return out;
}

std::string bic_table_csv(const std::vector<BicCell>& table) {
  std::string out = "lambda1,lambda2,bic,nnz,converged\n";
  for (const BicCell& c : table) {
    out += format_double(c.lambda1) + ',' + format_double(c.lambda2) + ',' + format_double(c.bic) +
           ',' + std::to_string(c.nnz) + ',' + (c.converged ? "true" : "false") + '\n';
  }
  return out;
}

}  // namespace blockchol
