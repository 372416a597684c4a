#pragma once

#include <string>
#include <string_view>

#include "blockchol/block_model.hpp"
#include "blockchol/glasso.hpp"
#include "blockchol/lasso.hpp"

namespace blockchol {

enum class MethodKind {
  bcd,             // groups regressed on all preceding groups
  mcd,             // bcd with every variable its own group
  glasso_only,     // one group: plain graphical lasso on S
  block_diagonal,  // T = I, graphical lasso within each group
  banded,          // groups regressed on the `band` nearest preceding groups
};

struct MethodMode {
  MethodKind kind = MethodKind::bcd;
  Index band = 0;

  /// Accepts prop | bcd | mcd | glasso | block-diag | banded:K.
  static MethodMode parse(std::string_view text);
  std::string name() const;
  /// True when the fitted T is fixed at I, so lambda1 has no effect.
  bool ignores_lambda1() const {
    return kind == MethodKind::glasso_only || kind == MethodKind::block_diagonal;
  }
  /// True when every noise block is 1 x 1, so lambda2 has no effect.
  bool ignores_lambda2() const { return kind == MethodKind::mcd; }
};

struct FitConfig {
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  double tau1 = 1e-6;
  double tau2 = 1e-6;
  int max_outer_iterations = 100;
  /// A residual covariance whose Cholesky pivots, relative to the response
  /// variances, fall below this is treated as singular: the group likelihood is unbounded below there
  /// (possible once predecessors outnumber observations) and the fit throws
  /// NotPositiveDefinite instead of following the iterate to -infinity.
  double singular_residual_tol = 1e-10;
  MethodMode method;
  LassoOptions lasso;
  GlassoOptions glasso;
  /// Worker threads for the independent per-group fits.
  unsigned workers = 1;
  bool record_objective = false;

  void validate() const;
};

/// n x p observations with the group structure of the columns.
struct Dataset {
  Matrix data;
  GroupPartition partition;
  bool centered = false;

  /// Validates n >= 2, partition total == p and finite entries.
  static Dataset make(Matrix data, GroupPartition partition);

  Index n() const { return data.rows(); }
  Index p() const { return data.cols(); }
};

Dataset center_columns(const Dataset& d);

/// Sample covariance X'X / n of centered data.
SymMatrix sample_covariance(const Dataset& d);

/// Columns of groups max(0, j - k) .. j - 1 (0-based group indices).
Matrix banded_design(const Dataset& d, Index j, Index k);

/// Block Cholesky fit: for each group alternate the weighted Lasso for A_j
/// and the graphical lasso for D_j^{-1}, starting from D_j = I, until
/// ||A_t - A_{t-1}||_F^2 < tau1 and ||D_t - D_{t-1}||_F^2 < tau2 or the
/// iteration cap. The estimate is assembled as T' D^{-1} T.
///
/// Throws NotPositiveDefinite when a group's residual covariance degenerates.
/// Uncentered data is centered first. `warm_dinv`, when given, replaces the
/// identity as the starting D^{-1}.
PrecisionEstimate fit(const Dataset& d, const FitConfig& config,
                      const BlockDiagSpd* warm_dinv = nullptr);

/// Penalized objective of one group at (A_j, D_j^{-1}) given its residual covariance.
double group_objective(const SymMatrix& residual_cov, const Matrix& coef, const Matrix& dinv,
                       double lambda1, double lambda2);

}  // namespace blockchol
