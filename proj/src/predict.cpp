#include "blockchol/predict.hpp"

#include <cmath>
#include <string>

#include "blockchol/parallel.hpp"

namespace blockchol {

void PredictTask::validate() const {
  const Index p = omega.dim();
  if (partition.total() != p || mean.size() != p) {
    throw InvalidInput("predict: mean, precision and partition dimensions disagree");
  }
  if (split < 1 || split >= p) {
    throw InvalidInput("predict: split must be in [1, " + std::to_string(p - 1) + "]");
  }
  if (!partition.is_boundary(split)) {
    throw InvalidInput("predict: split " + std::to_string(split) +
                       " is not on a group boundary of " + partition.to_string());
  }
}

Matrix predict_late(const PredictTask& task, const Matrix& early) {
  task.validate();
  const Index p = task.omega.dim();
  const Index s = task.split;
  const Index late = p - s;
  if (early.cols() != s) throw InvalidInput("predict: early block must have split columns");
  const Matrix om = task.omega.dense();
  const SpdFactor f22 = spd_cholesky(task.omega.block(s, late));
  // B = Omega_22^{-1} Omega_21, so y_L = mu_2 - B (y_E - mu_1).
  const Matrix b = f22.solve(om.block(s, 0, late, s));
  const Matrix dev = early.rowwise() - task.mean.head(s).transpose();
  Matrix out = -(dev * b.transpose());
  out.rowwise() += task.mean.tail(late).transpose();
  return out;
}

Matrix sqrt_transform(const Matrix& counts) {
  if ((counts.array() < 0.0).any() || !all_finite(counts)) {
    throw InvalidInput("sqrt transform needs finite non-negative values");
  }
  return (counts.array() + 0.25).sqrt().matrix();
}

ApeReport absolute_prediction_error(const Matrix& predicted, const Matrix& actual) {
  if (predicted.rows() != actual.rows() || predicted.cols() != actual.cols() ||
      predicted.rows() < 1) {
    throw InvalidInput("prediction error: shape mismatch or no rows");
  }
  const Matrix err = (predicted - actual).cwiseAbs();
  const double m = static_cast<double>(err.rows());
  ApeReport r;
  r.held_out = err.rows();
  r.ape = err.colwise().mean().transpose();
  r.se = Vector::Zero(err.cols());
  if (err.rows() > 1) {
    const Matrix centered = err.rowwise() - r.ape.transpose();
    r.se = (centered.colwise().squaredNorm().array() / (m - 1.0)).sqrt().transpose() / std::sqrt(m);
  }
  r.predictions = predicted;
  return r;
}

namespace {

PredictTask task_from(const Dataset& train, Index split, const PrecisionFitter& fitter) {
  PredictTask task;
  task.split = split;
  task.mean = train.data.colwise().mean().transpose();
  task.omega = fitter(train);
  task.partition = train.partition;
  return task;
}

}  // namespace

ApeReport predict_holdout(const Dataset& train, const Matrix& test, Index split,
                          const PrecisionFitter& fitter) {
  if (test.cols() != train.p()) throw InvalidInput("predict: test and train widths differ");
  const PredictTask task = task_from(train, split, fitter);
  const Matrix pred = predict_late(task, test.leftCols(split));
  return absolute_prediction_error(pred, test.rightCols(train.p() - split));
}

ApeReport predict_leave_one_out(const Dataset& d, Index split, const PrecisionFitter& fitter,
                                unsigned workers) {
  const Index n = d.n();
  const Index p = d.p();
  if (n < 3) throw InvalidInput("leave-one-out needs at least 3 rows");
  if (split < 1 || split >= p || !d.partition.is_boundary(split)) {
    throw InvalidInput("predict: split " + std::to_string(split) +
                       " is not on a group boundary of " + d.partition.to_string());
  }
  Matrix pred(n, p - split);
  parallel_for(static_cast<std::size_t>(n), workers, [&](std::size_t k) {
    const auto i = static_cast<Index>(k);
    Matrix rest(n - 1, p);
    rest.topRows(i) = d.data.topRows(i);
    rest.bottomRows(n - 1 - i) = d.data.bottomRows(n - 1 - i);
    const Dataset train = Dataset::make(std::move(rest), d.partition);
    const PredictTask task = task_from(train, split, fitter);
    pred.row(i) = predict_late(task, d.data.row(i).head(split));
  });
  return absolute_prediction_error(pred, d.data.rightCols(p - split));
}

}  // namespace blockchol
