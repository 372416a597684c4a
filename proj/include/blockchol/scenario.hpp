#pragma once

#include <cstdint>
#include <vector>

#include "blockchol/bcd.hpp"

namespace blockchol {

using BoolMatrix = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// Simulation truth: one of seven precision-matrix structures.
///   1  AR(0.8)
///   2  block diagonal, AR(0.5) blocks (blocks follow the partition)
///   3  MA(0.5,0.4,0.3) diagonal blocks, padded AR(0.5) off-diagonal blocks, + alpha I
///   4  AR(0.5) diagonal blocks, padded MA off-diagonal blocks, permuted within groups, + alpha I
///   5  B'HB, H block-diag AR(0.5), B unit lower with -0.8 at lag 20
///   6  B'HB, H block-diag MA, B with -0.8 at lag 20 and 0.5 at lag 21
///   7  sparse random: Bernoulli(0.15) * Unif(-1, 1) off the diagonal, + alpha I
struct ScenarioSpec {
  int id = 1;
  Index p = 0;
  GroupPartition partition;
  std::uint64_t seed = 0;
  double alpha_step = 0.05;
  double alpha_floor = 0.05;
  Index shift_block = 20;  // H block size in scenarios 5 and 6
};

struct GeneratedTruth {
  SymMatrix omega;
  SymMatrix sigma;
  BoolMatrix support;  // |omega_ij| > 1e-12
  GroupPartition partition;
  double alpha = 0.0;
};

/// (i, j) entry rho^|i-j|.
SymMatrix ar_matrix(Index dim, double rho);
/// Unit diagonal with bands 0.5, 0.4, 0.3.
SymMatrix ma_matrix(Index dim);

struct BandSpec {
  enum class Kind { ar, ma };
  Kind kind = Kind::ar;
  double rho = 0.5;
};

/// rows x cols matrix whose leading min(rows, cols) square is the banded
/// generator and whose remaining entries are zero.
Matrix rect_embed(const BandSpec& band, Index rows, Index cols);

GeneratedTruth generate(const ScenarioSpec& spec);

/// n rows of N(0, sigma): x = L z with L the Cholesky factor of sigma and z
/// standard normals from the counter stream keyed by `seed`.
Dataset sample_mvn(const GeneratedTruth& truth, Index n, std::uint64_t seed);

/// Uniformly random permutation that maps every group onto itself.
std::vector<Index> within_group_permutation(const GroupPartition& partition, std::uint64_t seed,
                                            std::uint32_t stream);

/// Smallest alpha = k * step with lambda_min + alpha >= floor.
double inflation_alpha(double lambda_min, double step, double floor);

}  // namespace blockchol
