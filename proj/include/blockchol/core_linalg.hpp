#pragma once

#include <Eigen/Dense>

#include "blockchol/errors.hpp"

namespace blockchol {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Dense symmetric matrix. Symmetry is exact: the lower triangle is the
/// source of truth and is mirrored into the upper triangle on every ingest.
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(Index dim);

  /// Mirrors the lower triangle of `m`. Throws InvalidInput if `m` is not square or empty.
  static SymMatrix from_lower(const Matrix& m);
  /// Requires |m(i,j) - m(j,i)| <= tol * max(1, max|m|) before mirroring.
  static SymMatrix from_symmetric(const Matrix& m, double tol = 1e-10);
  static SymMatrix identity(Index dim);
  static SymMatrix diagonal(const Vector& d);

  Index dim() const { return values_.rows(); }
  double operator()(Index i, Index j) const { return values_(i, j); }
  void set(Index i, Index j, double v) {
    values_(i, j) = v;
    values_(j, i) = v;
  }
  const Matrix& dense() const { return values_; }

  /// Principal submatrix over the contiguous index range [start, start + len).
  SymMatrix block(Index start, Index len) const;

 private:
  Matrix values_;
};

/// Lower Cholesky factor of an SPD matrix; only spd_cholesky constructs one.
class SpdFactor {
 public:
  Index dim() const { return lower_.rows(); }
  const Matrix& lower() const { return lower_; }

  /// Solves (L L^T) x = rhs.
  Matrix solve(const Matrix& rhs) const;

 private:
  friend SpdFactor spd_cholesky(const SymMatrix& m);
  explicit SpdFactor(Matrix lower) : lower_(std::move(lower)) {}
  Matrix lower_;
};

struct EigenDecomposition {
  Vector values;   // descending
  Matrix vectors;  // columns are orthonormal eigenvectors, same order as values
};

EigenDecomposition sym_eigendecomp(const SymMatrix& m);
Vector sym_eigenvalues(const SymMatrix& m);

/// Throws NotPositiveDefinite on the first pivot <= 0 (or non-finite).
SpdFactor spd_cholesky(const SymMatrix& m);
bool is_positive_definite(const SymMatrix& m);

double spd_logdet(const SpdFactor& f);
SymMatrix spd_inverse(const SpdFactor& f);

bool all_finite(const Matrix& m);

}  // namespace blockchol
