#pragma once

#include <vector>

#include "blockchol/core_linalg.hpp"

namespace blockchol {

/// Weighted multivariate-regression Lasso
///
///   f(A) = (1/n) tr[(X - Z A') W (X - Z A')'] + lambda1 * sum |A_kl|
///
/// with X the n x p_j response block, Z the n x q_j design block (both
/// column-centered) and W a p_j x p_j SPD weight.
struct LassoProblem {
  Matrix response;
  Matrix design;
  Matrix weight;
  double lambda1 = 0.0;
};

struct LassoOptions {
  /// Stop when a full sweep changes no coefficient by more than this. Tight
  /// enough that fits of column-permuted data agree to 1e-8.
  double tolerance = 1e-10;
  int max_sweeps = 10000;
  bool record_objective = false;
  /// When > 0, every `guard_interval` sweeps the residual covariance is
  /// checked with residual_pivot; below this the solve throws NotPositiveDefinite.
  double singular_residual_tol = 0.0;
  int guard_interval = 25;
};

struct LassoSolution {
  Matrix coef;  // p_j x q_j
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> objective_trace;  // after every sweep, when recorded
};

/// Sufficient statistics of a (response, design) pair. Coordinate descent runs
/// on these p_j x q_j and q_j x q_j blocks; the Kronecker-vectorized design
/// (W^{1/2} (x) Z) is never formed.
class LassoGram {
 public:
  LassoGram(const Eigen::Ref<const Matrix>& response, const Eigen::Ref<const Matrix>& design);

  Index n() const { return n_; }
  Index responses() const { return cross_.rows(); }
  Index predictors() const { return cross_.cols(); }
  const Matrix& response_gram() const { return sxx_; }  // X'X / n
  const Matrix& cross() const { return cross_; }        // X'Z / n
  const Matrix& design_gram() const { return gram_; }   // Z'Z / n

 private:
  Index n_;
  Matrix sxx_;
  Matrix cross_;
  Matrix gram_;
};

LassoSolution solve_lasso(const LassoProblem& problem, const LassoOptions& options = {});

/// Cyclic coordinate descent over entries of A in row-major order of A.
/// `warm_start` (p_j x q_j) seeds the iterate when non-null.
LassoSolution solve_lasso(const LassoGram& gram, const Matrix& weight, double lambda1,
                          const LassoOptions& options = {}, const Matrix* warm_start = nullptr);

/// Smallest lambda1 with an all-zero solution: max |(2/n) W X' Z|.
double lasso_lambda_max(const LassoProblem& problem);
double lasso_lambda_max(const LassoGram& gram, const Matrix& weight);

double lasso_objective(const LassoGram& gram, const Matrix& weight, const Matrix& coef,
                       double lambda1);
/// Gradient of the smooth part: -(2/n) W (X - Z A')' Z.
Matrix lasso_gradient(const LassoGram& gram, const Matrix& weight, const Matrix& coef);
/// Largest violation of the subgradient optimality conditions.
double lasso_kkt_violation(const LassoGram& gram, const Matrix& weight, const Matrix& coef,
                           double lambda1);

/// Smallest squared Cholesky pivot of the residual covariance R'R/n at `coef`,
/// with rows and columns scaled by the response variances; 0 when not PD.
double residual_pivot(const LassoGram& gram, const Matrix& coef);

double soft_threshold(double z, double t);

}  // namespace blockchol
