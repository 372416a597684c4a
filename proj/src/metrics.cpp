#include "blockchol/metrics.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace blockchol {

LossReport LossReport::from_values(const std::array<double, 6>& v) {
  LossReport r;
  r.l1 = v[0];
  r.l2 = v[1];
  r.fnorm = v[2];
  r.kl = v[3];
  r.ql = v[4];
  r.fsl_percent = v[5];
  return r;
}

LossReport losses(const GeneratedTruth& truth, const SymMatrix& est) {
  const Index p = truth.omega.dim();
  if (est.dim() != p || truth.sigma.dim() != p || truth.support.rows() != p ||
      truth.support.cols() != p) {
    throw InvalidInput("losses: dimension mismatch (truth " + std::to_string(p) + ", estimate " +
                       std::to_string(est.dim()) + ")");
  }
  if (!all_finite(est.dense())) throw InvalidInput("losses: estimate has non-finite entries");

  const Matrix e = est.dense();
  const Matrix diff = e - truth.omega.dense();
  const double dp = static_cast<double>(p);

  LossReport r;
  r.l1 = diff.cwiseAbs().colwise().sum().maxCoeff();
  r.l2 = sym_eigenvalues(SymMatrix::from_lower(diff)).cwiseAbs().maxCoeff();
  r.fnorm = diff.norm();

  const Matrix prod = truth.sigma.dense() * e;
  const Matrix centered = prod - Matrix::Identity(p, p);
  r.ql = (centered * centered).trace() / dp;

  r.estimate_pd = is_positive_definite(est);
  if (r.estimate_pd) {
    // log|Sigma Omega_hat| = logdet(Omega_hat) - logdet(Omega).
    const double logdet = spd_logdet(spd_cholesky(est)) - spd_logdet(spd_cholesky(truth.omega));
    r.kl = (prod.trace() - logdet - dp) / dp;
  } else {
    r.kl = std::numeric_limits<double>::infinity();
  }

  Index errors = 0;
  for (Index j = 0; j < p; ++j) {
    for (Index i = 0; i < p; ++i) {
      const bool hat = std::abs(e(i, j)) > 1e-6;
      if (hat != truth.support(i, j)) ++errors;
    }
  }
  r.fsl_percent = 100.0 * static_cast<double>(errors) / (dp * dp);
  return r;
}

LossSummary aggregate(const std::vector<LossReport>& reports) {
  if (reports.size() < 2) throw InvalidInput("aggregate: need at least two reports");
  const double count = static_cast<double>(reports.size());
  std::array<double, 6> mean{};
  for (const auto& r : reports) {
    const auto v = r.values();
    for (std::size_t k = 0; k < v.size(); ++k) mean[k] += v[k];
  }
  for (double& m : mean) m /= count;
  std::array<double, 6> se{};
  for (const auto& r : reports) {
    const auto v = r.values();
    for (std::size_t k = 0; k < v.size(); ++k) se[k] += (v[k] - mean[k]) * (v[k] - mean[k]);
  }
  for (double& s : se) s = std::sqrt(s / (count - 1.0)) / std::sqrt(count);

  LossSummary out;
  out.mean = LossReport::from_values(mean);
  out.se = LossReport::from_values(se);
  out.replicates = static_cast<Index>(reports.size());
  return out;
}

}  // namespace blockchol
