#pragma once

#include <map>
#include <string_view>
#include <utility>
#include <vector>

#include "blockchol/core_linalg.hpp"

namespace blockchol {

/// Ordered group sizes (p_1, ..., p_M). Groups are ordered; variables inside
/// a group are not.
class GroupPartition {
 public:
  GroupPartition() = default;

  static GroupPartition from_sizes(std::vector<Index> sizes);
  /// Every variable in its own group: the fully ordered case.
  static GroupPartition singletons(Index p);
  /// Parses "p1,p2,...,pM".
  static GroupPartition parse(std::string_view text);

  Index groups() const { return static_cast<Index>(sizes_.size()); }
  Index total() const { return total_; }
  Index size(Index j) const { return sizes_[static_cast<std::size_t>(j)]; }
  Index offset(Index j) const { return offsets_[static_cast<std::size_t>(j)]; }
  const std::vector<Index>& sizes() const { return sizes_; }
  const std::vector<Index>& offsets() const { return offsets_; }

  /// True when `split` (a count of leading variables) falls between two groups.
  bool is_boundary(Index split) const;
  std::string to_string() const;

  friend bool operator==(const GroupPartition&, const GroupPartition&) = default;

 private:
  std::vector<Index> sizes_;
  std::vector<Index> offsets_;
  Index total_ = 0;
};

/// The factor T: unit block lower triangular. Only strictly lower blocks are
/// stored (as the T entries, i.e. -A_ji); diagonal blocks are implicitly I.
class BlockLowerUnit {
 public:
  BlockLowerUnit() = default;
  explicit BlockLowerUnit(GroupPartition partition) : partition_(std::move(partition)) {}

  static BlockLowerUnit identity(const GroupPartition& partition) {
    return BlockLowerUnit(partition);
  }

  const GroupPartition& partition() const { return partition_; }

  void set_block(Index j, Index i, Matrix block);
  bool has_block(Index j, Index i) const;
  /// Block (j, i) of T; zero when not stored.
  Matrix block(Index j, Index i) const;

  /// Stores -coef as the blocks (j, first), ..., (j, j-1), where coef is
  /// p_j x (sum of the sizes of groups first..j-1).
  void set_regression(Index j, Index first, const Matrix& coef);

  Matrix to_dense() const;
  const std::map<std::pair<Index, Index>, Matrix>& blocks() const { return blocks_; }

 private:
  GroupPartition partition_;
  std::map<std::pair<Index, Index>, Matrix> blocks_;
};

/// The factor D^{-1}: block diagonal with SPD blocks.
class BlockDiagSpd {
 public:
  BlockDiagSpd() = default;
  /// Validates dimensions, symmetry and positive definiteness of every block.
  BlockDiagSpd(GroupPartition partition, std::vector<Matrix> blocks);

  static BlockDiagSpd identity(const GroupPartition& partition);

  const GroupPartition& partition() const { return partition_; }
  const Matrix& block(Index j) const { return blocks_[static_cast<std::size_t>(j)]; }
  const std::vector<Matrix>& blocks() const { return blocks_; }
  Matrix to_dense() const;

 private:
  GroupPartition partition_;
  std::vector<Matrix> blocks_;
};

struct PrecisionEstimate {
  GroupPartition partition;
  BlockLowerUnit t;
  BlockDiagSpd dinv;
  SymMatrix omega;
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  std::vector<int> per_group_iterations;
  std::vector<bool> converged_flags;
  /// Per-group penalized objective after each outer iteration (may be empty).
  std::vector<std::vector<double>> objective_traces;

  bool all_converged() const;
};

/// Omega = T' D^{-1} T, computed as R'R with R = L_j' T_j blockwise
/// (L_j the lower Cholesky factor of D_j^{-1}); exactly symmetric.
SymMatrix assemble(const BlockLowerUnit& t, const BlockDiagSpd& dinv);

/// Block Cholesky factors of sigma^{-1}: population regression coefficients
/// of each group on its predecessors and the Schur-complement noise blocks.
std::pair<BlockLowerUnit, BlockDiagSpd> population_decompose(const SymMatrix& sigma,
                                                             const GroupPartition& partition);

/// The eigenvalues of a block diagonal matrix are the union of its blocks'.
bool block_diag_eigen_union_check(const BlockDiagSpd& dinv);

PrecisionEstimate make_estimate(BlockLowerUnit t, BlockDiagSpd dinv, double lambda1,
                                double lambda2, std::vector<int> iterations,
                                std::vector<bool> converged);

/// Simultaneous row/column permutation: out(i, j) = m(perm[i], perm[j]).
SymMatrix permute(const SymMatrix& m, const std::vector<Index>& perm);
/// Inverse of `permute`: out(perm[i], perm[j]) = m(i, j).
SymMatrix unpermute(const SymMatrix& m, const std::vector<Index>& perm);

}  // namespace blockchol
