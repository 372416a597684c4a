#pragma once

#include <array>
#include <string_view>
#include <vector>

#include "blockchol/scenario.hpp"

namespace blockchol {

/// Estimate-vs-truth losses. kl is +inf when the estimate is not PD.
struct LossReport {
  double l1 = 0.0;
  double l2 = 0.0;
  double fnorm = 0.0;
  double kl = 0.0;
  double ql = 0.0;
  double fsl_percent = 0.0;
  bool estimate_pd = true;

  static constexpr std::array<std::string_view, 6> kNames{"L1", "L2", "Fnorm", "KL", "QL", "FSL"};
  std::array<double, 6> values() const { return {l1, l2, fnorm, kl, ql, fsl_percent}; }
  static LossReport from_values(const std::array<double, 6>& v);
};

LossReport losses(const GeneratedTruth& truth, const SymMatrix& est);

struct LossSummary {
  LossReport mean;
  LossReport se;  // sample standard deviation / sqrt(R)
  Index replicates = 0;
};

/// Requires at least two reports.
LossSummary aggregate(const std::vector<LossReport>& reports);

}  // namespace blockchol
