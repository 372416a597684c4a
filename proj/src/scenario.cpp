#include "blockchol/scenario.hpp"

#include <cmath>
#include <functional>
#include <string>

#include "blockchol/rng.hpp"

namespace blockchol {

namespace {

// Stream ids keep independent uses of one seed apart.
constexpr std::uint32_t kSampleStream = 1;
constexpr std::uint32_t kSparseStream = 7;
constexpr std::uint32_t kScenario4Stream = 4;

Matrix block_diag(const GroupPartition& part, const std::function<Matrix(Index)>& block) {
  const Index p = part.total();
  Matrix out = Matrix::Zero(p, p);
  for (Index j = 0; j < part.groups(); ++j) {
    out.block(part.offset(j), part.offset(j), part.size(j), part.size(j)) = block(part.size(j));
  }
  return out;
}

Matrix block_pattern(const GroupPartition& part, const BandSpec& diag_kind,
                     const BandSpec& off_kind) {
  const Index p = part.total();
  Matrix out(p, p);
  for (Index j = 0; j < part.groups(); ++j) {
    for (Index i = 0; i < part.groups(); ++i) {
      const BandSpec& kind = i == j ? diag_kind : off_kind;
      out.block(part.offset(j), part.offset(i), part.size(j), part.size(i)) =
          rect_embed(kind, part.size(j), part.size(i));
    }
  }
  return out;
}

Matrix shifted_product(Index p, Index block, bool ma, bool second_lag) {
  const GroupPartition hpart = [&] {
    std::vector<Index> sizes;
    for (Index start = 0; start < p; start += block) sizes.push_back(std::min(block, p - start));
    return GroupPartition::from_sizes(std::move(sizes));
  }();
  const Matrix h = block_diag(hpart, [&](Index d) {
    return ma ? ma_matrix(d).dense() : ar_matrix(d, 0.5).dense();
  });
  Matrix b = Matrix::Identity(p, p);
  for (Index i = 0; i + 20 < p; ++i) b(i + 20, i) = -0.8;
  if (second_lag)
    for (Index i = 0; i + 21 < p; ++i) b(i + 21, i) = 0.5;
  return b.transpose() * h * b;
}

}  // namespace

SymMatrix ar_matrix(Index dim, double rho) {
  if (dim < 1) throw InvalidInput("ar_matrix: dim must be >= 1");
  if (!(std::abs(rho) < 1.0)) throw InvalidInput("ar_matrix: need |rho| < 1");
  SymMatrix out(dim);
  for (Index j = 0; j < dim; ++j)
    for (Index i = j; i < dim; ++i) out.set(i, j, std::pow(rho, static_cast<double>(i - j)));
  return out;
}

SymMatrix ma_matrix(Index dim) {
  if (dim < 1) throw InvalidInput("ma_matrix: dim must be >= 1");
  static constexpr double kBands[] = {1.0, 0.5, 0.4, 0.3};
  SymMatrix out(dim);
  for (Index j = 0; j < dim; ++j)
    for (Index i = j; i < dim && i - j < 4; ++i) out.set(i, j, kBands[i - j]);
  return out;
}

Matrix rect_embed(const BandSpec& band, Index rows, Index cols) {
  if (rows < 1 || cols < 1) throw InvalidInput("rect_embed: rows and cols must be >= 1");
  const Index m = std::min(rows, cols);
  Matrix out = Matrix::Zero(rows, cols);
  out.topLeftCorner(m, m) =
      band.kind == BandSpec::Kind::ar ? ar_matrix(m, band.rho).dense() : ma_matrix(m).dense();
  return out;
}

double inflation_alpha(double lambda_min, double step, double floor) {
  if (!(step > 0.0) || !std::isfinite(lambda_min)) throw InvalidInput("inflation_alpha: bad input");
  double alpha = 0.0;
  while (lambda_min + alpha < floor) alpha += step;
  return alpha;
}

std::vector<Index> within_group_permutation(const GroupPartition& partition, std::uint64_t seed,
                                            std::uint32_t stream) {
  const RandomStream rng(seed, stream);
  std::vector<Index> perm(static_cast<std::size_t>(partition.total()));
  std::uint64_t draw = 0;
  for (Index j = 0; j < partition.groups(); ++j) {
    const Index off = partition.offset(j);
    const Index len = partition.size(j);
    for (Index k = 0; k < len; ++k) perm[off + k] = off + k;
    // Fisher-Yates within the group.
    for (Index k = len - 1; k > 0; --k) {
      const auto r = static_cast<Index>(rng.uniform(draw++) * static_cast<double>(k + 1));
      std::swap(perm[off + k], perm[off + std::min(r, k)]);
    }
  }
  return perm;
}

GeneratedTruth generate(const ScenarioSpec& spec) {
  if (spec.id < 1 || spec.id > 7) throw InvalidInput("scenario id must be in 1..7");
  if (spec.p < 1) throw InvalidInput("scenario: p must be >= 1");
  if (spec.partition.total() != spec.p) {
    throw InvalidInput("scenario: partition total " + std::to_string(spec.partition.total()) +
                       " != p = " + std::to_string(spec.p));
  }
  if ((spec.id == 5 || spec.id == 6) && spec.p < 22) {
    throw InvalidInput("scenarios 5 and 6 need p >= 22");
  }
  const Index p = spec.p;
  const GroupPartition& part = spec.partition;
  const BandSpec ar05{BandSpec::Kind::ar, 0.5};
  const BandSpec ma{BandSpec::Kind::ma, 0.0};

  Matrix base;
  bool inflate = false;
  switch (spec.id) {
    case 1:
      base = ar_matrix(p, 0.8).dense();
      break;
    case 2:
      base = block_diag(part, [](Index d) { return ar_matrix(d, 0.5).dense(); });
      break;
    case 3:
      base = block_pattern(part, ma, ar05);
      inflate = true;
      break;
    case 4: {
      const SymMatrix unpermuted = SymMatrix::from_lower(block_pattern(part, ar05, ma));
      base = permute(unpermuted, within_group_permutation(part, spec.seed, kScenario4Stream)).dense();
      inflate = true;
      break;
    }
    case 5:
      base = shifted_product(p, spec.shift_block, false, false);
      break;
    case 6:
      base = shifted_product(p, spec.shift_block, true, true);
      break;
    case 7: {
      const RandomStream rng(spec.seed, kSparseStream);
      base = Matrix::Zero(p, p);
      for (Index i = 0; i < p; ++i) {
        for (Index j = i + 1; j < p; ++j) {
          const auto idx = 2 * static_cast<std::uint64_t>(i * p + j);
          if (rng.uniform(idx) < 0.15) {
            const double v = 2.0 * rng.uniform(idx + 1) - 1.0;
            base(i, j) = v;
            base(j, i) = v;
          }
        }
      }
      inflate = true;
      break;
    }
  }

  GeneratedTruth truth;
  truth.partition = part;
  SymMatrix omega = SymMatrix::from_lower(base);
  if (inflate) {
    truth.alpha =
        inflation_alpha(sym_eigenvalues(omega).minCoeff(), spec.alpha_step, spec.alpha_floor);
    Matrix shifted = omega.dense();
    shifted.diagonal().array() += truth.alpha;
    omega = SymMatrix::from_lower(shifted);
  }
  truth.sigma = spd_inverse(spd_cholesky(omega));
  truth.support = (omega.dense().array().abs() > 1e-12).matrix();
  truth.omega = std::move(omega);
  return truth;
}

Dataset sample_mvn(const GeneratedTruth& truth, Index n, std::uint64_t seed) {
  if (n < 1) throw InvalidInput("sample_mvn: n must be >= 1");
  const Index p = truth.sigma.dim();
  const Matrix l = spd_cholesky(truth.sigma).lower();
  const RandomStream rng(seed, kSampleStream);
  Matrix z(p, n);
  for (Index i = 0; i < n; ++i)
    for (Index k = 0; k < p; ++k)
      z(k, i) = rng.normal(static_cast<std::uint64_t>(i) * static_cast<std::uint64_t>(p) +
                           static_cast<std::uint64_t>(k));
  Matrix x = (l.triangularView<Eigen::Lower>() * z).transpose();
  Dataset d;
  d.data = std::move(x);
  d.partition = truth.partition;
  d.centered = false;
  return d;
}

}  // namespace blockchol
