#include "blockchol/core_linalg.hpp"

#include <cmath>
#include <string>

namespace blockchol {

SymMatrix::SymMatrix(Index dim) : values_(Matrix::Zero(dim, dim)) {
  if (dim < 1) throw InvalidInput("SymMatrix: dim must be >= 1");
}

SymMatrix SymMatrix::from_lower(const Matrix& m) {
  if (m.rows() != m.cols() || m.rows() < 1) {
    throw InvalidInput("SymMatrix: expected a non-empty square matrix, got " +
                       std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
  }
  SymMatrix out;
  out.values_ = m;
  for (Index j = 0; j < m.cols(); ++j) {
    for (Index i = 0; i < j; ++i) out.values_(i, j) = m(j, i);
  }
  return out;
}

SymMatrix SymMatrix::from_symmetric(const Matrix& m, double tol) {
  if (m.rows() != m.cols() || m.rows() < 1) {
    throw InvalidInput("SymMatrix: expected a non-empty square matrix");
  }
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  for (Index j = 0; j < m.cols(); ++j) {
    for (Index i = 0; i < j; ++i) {
      if (!(std::abs(m(i, j) - m(j, i)) <= tol * scale)) {
        throw InvalidInput("SymMatrix: input is not symmetric at (" + std::to_string(i) +
                           "," + std::to_string(j) + ")");
      }
    }
  }
  return from_lower(m);
}

SymMatrix SymMatrix::identity(Index dim) {
  SymMatrix out(dim);
  out.values_.setIdentity();
  return out;
}

SymMatrix SymMatrix::diagonal(const Vector& d) {
  SymMatrix out(d.size());
  out.values_.diagonal() = d;
  return out;
}

SymMatrix SymMatrix::block(Index start, Index len) const {
  SymMatrix out;
  out.values_ = values_.block(start, start, len, len);
  return out;
}

Matrix SpdFactor::solve(const Matrix& rhs) const {
  Matrix x = lower_.triangularView<Eigen::Lower>().solve(rhs);
  lower_.transpose().triangularView<Eigen::Upper>().solveInPlace(x);
  return x;
}

bool all_finite(const Matrix& m) { return m.allFinite(); }

EigenDecomposition sym_eigendecomp(const SymMatrix& m) {
  if (!m.dense().allFinite()) throw InvalidInput("sym_eigendecomp: non-finite entries");
  // Householder tridiagonalization followed by implicit symmetric QR.
  Eigen::SelfAdjointEigenSolver<Matrix> solver(m.dense(), Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success) throw InvalidInput("sym_eigendecomp: no convergence");
  const Index n = m.dim();
  EigenDecomposition out{Vector(n), Matrix(n, n)};
  // Eigen returns ascending order.
  for (Index k = 0; k < n; ++k) {
    out.values(k) = solver.eigenvalues()(n - 1 - k);
    out.vectors.col(k) = solver.eigenvectors().col(n - 1 - k);
  }
  return out;
}

Vector sym_eigenvalues(const SymMatrix& m) {
  if (!m.dense().allFinite()) throw InvalidInput("sym_eigenvalues: non-finite entries");
  Eigen::SelfAdjointEigenSolver<Matrix> solver(m.dense(), Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw InvalidInput("sym_eigenvalues: no convergence");
  return solver.eigenvalues().reverse();
}

SpdFactor spd_cholesky(const SymMatrix& m) {
  const Index n = m.dim();
  if (n < 1) throw InvalidInput("spd_cholesky: empty matrix");
  if (!m.dense().allFinite()) throw NotPositiveDefinite("spd_cholesky: non-finite entries");
  Eigen::LLT<Matrix, Eigen::Lower> llt(m.dense());
  if (llt.info() != Eigen::Success) {
    throw NotPositiveDefinite("spd_cholesky: non-positive pivot");
  }
  Matrix lower = llt.matrixL();
  for (Index i = 0; i < n; ++i) {
    if (!(lower(i, i) > 0.0) || !std::isfinite(lower(i, i))) {
      throw NotPositiveDefinite("spd_cholesky: non-positive pivot at " + std::to_string(i));
    }
  }
  return SpdFactor(std::move(lower));
}

bool is_positive_definite(const SymMatrix& m) {
  try {
    spd_cholesky(m);
    return true;
  } catch (const NotPositiveDefinite&) {
    return false;
  }
}

double spd_logdet(const SpdFactor& f) {
  double acc = 0.0;
  for (Index i = 0; i < f.dim(); ++i) acc += std::log(f.lower()(i, i));
  return 2.0 * acc;
}

SymMatrix spd_inverse(const SpdFactor& f) {
  const Index n = f.dim();
  Matrix linv = f.lower().triangularView<Eigen::Lower>().solve(Matrix::Identity(n, n));
  Matrix inv(n, n);
  inv.triangularView<Eigen::Lower>() = linv.transpose() * linv;
  return SymMatrix::from_lower(inv);
}

}  // namespace blockchol
