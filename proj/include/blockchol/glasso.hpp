#pragma once

#include <vector>

#include "blockchol/core_linalg.hpp"

namespace blockchol {

/// minimize  -log|Theta| + tr(S Theta) + lambda2 * sum_{i != k} |Theta_ik|
/// The diagonal is not penalized.
struct GlassoProblem {
  SymMatrix s;
  double lambda2 = 0.0;
};

struct GlassoOptions {
  /// Outer stop: mean |change of W = Theta^{-1}| over a sweep < tolerance * mean diag(S).
  double tolerance = 1e-12;
  int max_sweeps = 500;
  /// Column subproblem stop: max coefficient change < inner_tolerance / mean diag(S).
  double inner_tolerance = 1e-10;
  int max_inner_sweeps = 10000;
  bool record_objective = false;
};

struct GlassoSolution {
  SymMatrix theta;
  SymMatrix covariance;  // theta^{-1}
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> objective_trace;
};

/// Column-block coordinate descent on Theta. Updating column j with the rest
/// fixed is a Lasso in theta_12 with quadratic form s_jj * (Theta_11)^{-1},
/// read off the maintained W = Theta^{-1}; theta_jj then follows in closed
/// form, so every column step keeps Theta positive definite and does not
/// increase the objective.
///
/// Without a warm start the iterate begins at W = S + lambda2 I.
GlassoSolution solve_glasso(const SymMatrix& s, double lambda2, const GlassoOptions& options = {},
                            const SymMatrix* warm_start = nullptr);
GlassoSolution solve_glasso(const GlassoProblem& problem, const GlassoOptions& options = {});

/// max_{i != k} |s_ik|; above it the solution is diag(1 / s_ii).
double glasso_lambda_max(const SymMatrix& s);

double glasso_objective(const SymMatrix& s, const SymMatrix& theta, double lambda2);
/// Largest violation of the stationarity conditions of the objective at theta.
double glasso_kkt_violation(const SymMatrix& s, const SymMatrix& theta, double lambda2);

}  // namespace blockchol
