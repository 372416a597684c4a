#pragma once

#include <functional>

#include "blockchol/bcd.hpp"

namespace blockchol {

/// Conditional-mean prediction of the trailing coordinates from the leading
/// `split` ones under N(mean, omega^{-1}).
struct PredictTask {
  Index split = 0;
  Vector mean;
  SymMatrix omega;
  GroupPartition partition;

  /// 1 <= split < p, split on a group boundary, dimensions consistent.
  void validate() const;
};

/// Rows of `early` (n x split) map to rows of the result (n x (p - split)):
/// mu_2 - Omega_22^{-1} Omega_12' (y_E - mu_1).
Matrix predict_late(const PredictTask& task, const Matrix& early);

/// Elementwise sqrt(N + 1/4); negative entries throw InvalidInput.
Matrix sqrt_transform(const Matrix& counts);

struct ApeReport {
  Vector ape;  // per predicted coordinate: mean |y_hat - y|
  Vector se;   // sample standard deviation / sqrt(m); zero when m = 1
  Index held_out = 0;
  Matrix predictions;
};

ApeReport absolute_prediction_error(const Matrix& predicted, const Matrix& actual);

/// Maps a training set to a precision estimate.
using PrecisionFitter = std::function<SymMatrix(const Dataset& train)>;

/// Each row held out in turn; mean and precision come from the other rows.
ApeReport predict_leave_one_out(const Dataset& d, Index split, const PrecisionFitter& fitter,
                                unsigned workers = 1);
ApeReport predict_holdout(const Dataset& train, const Matrix& test, Index split,
                          const PrecisionFitter& fitter);

}  // namespace blockchol
