#pragma once

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "blockchol/bcd.hpp"

namespace blockchol {

/// Entries with |value| above this count as nonzero (BIC degrees of freedom and FSL).
inline constexpr double kNonzeroThreshold = 1e-6;

struct TuningGrid {
  enum class Source { explicit_values, automatic };

  std::vector<double> lambda1_values;  // descending
  std::vector<double> lambda2_values;  // descending
  Source source = Source::explicit_values;
  int grid_size = 0;
  double min_ratio = 0.0;

  /// Sorts both axes descending; rejects empty axes and negative or non-finite values.
  static TuningGrid from_values(std::vector<double> lambda1, std::vector<double> lambda2);
};

/// Strictly-lower-triangle entries with |value| > kNonzeroThreshold.
Index count_lower_nonzeros(const SymMatrix& omega, double threshold = kNonzeroThreshold);

/// -log|Omega| + tr(Omega S) + (log n / n) * nu(Omega).
double bic(const PrecisionEstimate& est, const SymMatrix& s, Index n);
double bic(const SymMatrix& omega, const SymMatrix& s, Index n);

/// Log-spaced axes from lambda_max down to min_ratio * lambda_max.
///
/// lambda1_max covers the first outer iteration (W = I) and the weight the
/// top lambda2 produces (W = diag(S_jj)^{-1}), so the top corner has A = 0.
/// lambda2_max is the largest within-group |S_ik| (A = 0 residuals).
TuningGrid auto_grid(const Dataset& d, int grid_size, double min_ratio,
                     const MethodMode& method = {});

struct BicCell {
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  double bic = std::numeric_limits<double>::infinity();
  Index nnz = 0;
  bool converged = false;
  std::string error;  // non-empty when the fit failed
};

struct SelectOptions {
  /// Start each cell from the previous cell's D^{-1} along the lambda2 axis.
  bool warm_start = true;
  unsigned workers = 1;
};

struct Selection {
  PrecisionEstimate best;
  std::vector<BicCell> table;  // row-major over (lambda1 index, lambda2 index)
  std::size_t best_index = 0;
};

/// Fits every grid cell and returns the BIC minimizer. Ties within 1e-12 go to
/// the smallest lambda1, then the smallest lambda2. Failed cells score +inf;
/// throws only when every cell fails.
Selection select(const Dataset& d, const TuningGrid& grid, const FitConfig& config,
                 const SelectOptions& options = {});

std::string bic_table_csv(const std::vector<BicCell>& table);

}  // namespace blockchol
