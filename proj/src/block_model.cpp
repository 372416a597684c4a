#include "blockchol/block_model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <string>

namespace blockchol {

GroupPartition GroupPartition::from_sizes(std::vector<Index> sizes) {
  if (sizes.empty()) throw InvalidInput("partition must have at least one group");
  GroupPartition out;
  out.offsets_.reserve(sizes.size());
  Index acc = 0;
  for (Index s : sizes) {
    if (s < 1) throw InvalidInput("partition group sizes must be >= 1");
    out.offsets_.push_back(acc);
    acc += s;
  }
  out.sizes_ = std::move(sizes);
  out.total_ = acc;
  return out;
}

GroupPartition GroupPartition::singletons(Index p) {
  if (p < 1) throw InvalidInput("partition dimension must be >= 1");
  return from_sizes(std::vector<Index>(static_cast<std::size_t>(p), 1));
}

GroupPartition GroupPartition::parse(std::string_view text) {
  std::vector<Index> sizes;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t comma = text.find(',', pos);
    if (comma == std::string_view::npos) comma = text.size();
    std::string_view tok = text.substr(pos, comma - pos);
    while (!tok.empty() && tok.front() == ' ') tok.remove_prefix(1);
    while (!tok.empty() && tok.back() == ' ') tok.remove_suffix(1);
    long long v = 0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (tok.empty() || ec != std::errc() || ptr != tok.data() + tok.size()) {
      throw InvalidInput("cannot parse group sizes '" + std::string(text) + "'");
    }
    sizes.push_back(static_cast<Index>(v));
    pos = comma + 1;
  }
  return from_sizes(std::move(sizes));
}

bool GroupPartition::is_boundary(Index split) const {
  if (split <= 0 || split >= total_) return false;
  return std::find(offsets_.begin(), offsets_.end(), split) != offsets_.end();
}

std::string GroupPartition::to_string() const {
  std::string out;
  for (std::size_t k = 0; k < sizes_.size(); ++k) {
    if (k) out += ',';
    out += std::to_string(sizes_[k]);
  }
  return out;
}

void BlockLowerUnit::set_block(Index j, Index i, Matrix block) {
  if (!(j > i && i >= 0 && j < partition_.groups())) {
    throw InvalidInput("BlockLowerUnit: only strictly lower blocks (j > i) may be set");
  }
  if (block.rows() != partition_.size(j) || block.cols() != partition_.size(i)) {
    throw InvalidInput("BlockLowerUnit: block has wrong dimensions");
  }
  blocks_[{j, i}] = std::move(block);
}

bool BlockLowerUnit::has_block(Index j, Index i) const { return blocks_.count({j, i}) > 0; }

Matrix BlockLowerUnit::block(Index j, Index i) const {
  if (j == i) return Matrix::Identity(partition_.size(j), partition_.size(j));
  auto it = blocks_.find({j, i});
  if (it == blocks_.end()) return Matrix::Zero(partition_.size(j), partition_.size(i));
  return it->second;
}

void BlockLowerUnit::set_regression(Index j, Index first, const Matrix& coef) {
  if (first < 0 || first > j) throw InvalidInput("set_regression: bad predecessor range");
  const Index width = partition_.offset(j) - partition_.offset(first);
  if (coef.rows() != partition_.size(j) || coef.cols() != width) {
    throw InvalidInput("set_regression: coefficient block has wrong dimensions");
  }
  for (Index i = first; i < j; ++i) {
    const Index col = partition_.offset(i) - partition_.offset(first);
    set_block(j, i, -coef.middleCols(col, partition_.size(i)));
  }
}

Matrix BlockLowerUnit::to_dense() const {
  const Index p = partition_.total();
  Matrix t = Matrix::Identity(p, p);
  for (const auto& [key, blk] : blocks_) {
    t.block(partition_.offset(key.first), partition_.offset(key.second), blk.rows(),
            blk.cols()) = blk;
  }
  return t;
}

BlockDiagSpd::BlockDiagSpd(GroupPartition partition, std::vector<Matrix> blocks)
    : partition_(std::move(partition)), blocks_(std::move(blocks)) {
  if (static_cast<Index>(blocks_.size()) != partition_.groups()) {
    throw InvalidInput("BlockDiagSpd: block count does not match partition");
  }
  for (Index j = 0; j < partition_.groups(); ++j) {
    const Matrix& b = blocks_[static_cast<std::size_t>(j)];
    if (b.rows() != partition_.size(j) || b.cols() != partition_.size(j)) {
      throw InvalidInput("BlockDiagSpd: block " + std::to_string(j) + " has wrong dimensions");
    }
    // Mirror the lower triangle so every stored block is exactly symmetric.
    auto sym = SymMatrix::from_symmetric(b, 1e-8);
    spd_cholesky(sym);
    blocks_[static_cast<std::size_t>(j)] = sym.dense();
  }
}

BlockDiagSpd BlockDiagSpd::identity(const GroupPartition& partition) {
  std::vector<Matrix> blocks;
  for (Index j = 0; j < partition.groups(); ++j) {
    blocks.push_back(Matrix::Identity(partition.size(j), partition.size(j)));
  }
  return BlockDiagSpd(partition, std::move(blocks));
}

Matrix BlockDiagSpd::to_dense() const {
  const Index p = partition_.total();
  Matrix d = Matrix::Zero(p, p);
  for (Index j = 0; j < partition_.groups(); ++j) {
    d.block(partition_.offset(j), partition_.offset(j), partition_.size(j),
            partition_.size(j)) = block(j);
  }
  return d;
}

bool PrecisionEstimate::all_converged() const {
  return std::all_of(converged_flags.begin(), converged_flags.end(), [](bool b) { return b; });
}

SymMatrix assemble(const BlockLowerUnit& t, const BlockDiagSpd& dinv) {
  if (!(t.partition() == dinv.partition())) {
    throw InvalidInput("assemble: partitions of T and D^{-1} differ");
  }
  const GroupPartition& part = t.partition();
  const Index p = part.total();
  // R's block row j is L_j' [T_j1 ... T_jj 0 ...]; rows never extend past group j.
  Matrix r = Matrix::Zero(p, p);
  for (Index j = 0; j < part.groups(); ++j) {
    const Index off = part.offset(j);
    const Index pj = part.size(j);
    const SpdFactor chol = spd_cholesky(SymMatrix::from_lower(dinv.block(j)));
    const Matrix lt = chol.lower().transpose();
    r.block(off, off, pj, pj) = lt;
    for (Index i = 0; i < j; ++i) {
      if (!t.has_block(j, i)) continue;
      r.block(off, part.offset(i), pj, part.size(i)) = lt * t.block(j, i);
    }
  }
  Matrix omega(p, p);
  omega.triangularView<Eigen::Lower>() = r.transpose() * r;
  return SymMatrix::from_lower(omega);
}

std::pair<BlockLowerUnit, BlockDiagSpd> population_decompose(const SymMatrix& sigma,
                                                             const GroupPartition& partition) {
  if (sigma.dim() != partition.total()) {
    throw InvalidInput("population_decompose: partition total != dimension");
  }
  spd_cholesky(sigma);
  BlockLowerUnit t(partition);
  std::vector<Matrix> dinv_blocks;
  const Matrix& s = sigma.dense();
  for (Index j = 0; j < partition.groups(); ++j) {
    const Index off = partition.offset(j);
    const Index pj = partition.size(j);
    Matrix d = s.block(off, off, pj, pj);
    if (off > 0) {
      const SpdFactor szz = spd_cholesky(SymMatrix::from_lower(s.topLeftCorner(off, off)));
      const Matrix szx = s.block(0, off, off, pj);
      // A_j' = Cov(Z)^{-1} Cov(Z, X_j)
      const Matrix coef = szz.solve(szx).transpose();
      d -= coef * szx;
      t.set_regression(j, 0, coef);
    }
    dinv_blocks.push_back(spd_inverse(spd_cholesky(SymMatrix::from_lower(d))).dense());
  }
  return {std::move(t), BlockDiagSpd(partition, std::move(dinv_blocks))};
}

bool block_diag_eigen_union_check(const BlockDiagSpd& dinv) {
  std::vector<double> parts;
  for (const Matrix& b : dinv.blocks()) {
    const Vector ev = sym_eigenvalues(SymMatrix::from_lower(b));
    parts.insert(parts.end(), ev.data(), ev.data() + ev.size());
  }
  const Vector full = sym_eigenvalues(SymMatrix::from_lower(dinv.to_dense()));
  if (static_cast<Index>(parts.size()) != full.size()) return false;
  std::sort(parts.begin(), parts.end());
  std::vector<double> whole(full.data(), full.data() + full.size());
  std::sort(whole.begin(), whole.end());
  for (std::size_t k = 0; k < whole.size(); ++k) {
    if (std::abs(whole[k] - parts[k]) > 1e-8) return false;
  }
  return true;
}

PrecisionEstimate make_estimate(BlockLowerUnit t, BlockDiagSpd dinv, double lambda1,
                                double lambda2, std::vector<int> iterations,
                                std::vector<bool> converged) {
  PrecisionEstimate est;
  est.partition = t.partition();
  est.omega = assemble(t, dinv);
  est.t = std::move(t);
  est.dinv = std::move(dinv);
  est.lambda1 = lambda1;
  est.lambda2 = lambda2;
  est.per_group_iterations = std::move(iterations);
  est.converged_flags = std::move(converged);
  return est;
}

SymMatrix permute(const SymMatrix& m, const std::vector<Index>& perm) {
  const Index p = m.dim();
  if (static_cast<Index>(perm.size()) != p) throw InvalidInput("permute: size mismatch");
  Matrix out(p, p);
  for (Index j = 0; j < p; ++j)
    for (Index i = 0; i < p; ++i) out(i, j) = m(perm[i], perm[j]);
  return SymMatrix::from_lower(out);
}

SymMatrix unpermute(const SymMatrix& m, const std::vector<Index>& perm) {
  const Index p = m.dim();
  if (static_cast<Index>(perm.size()) != p) throw InvalidInput("unpermute: size mismatch");
  Matrix out(p, p);
  for (Index j = 0; j < p; ++j)
    for (Index i = 0; i < p; ++i) out(perm[i], perm[j]) = m(i, j);
  return SymMatrix::from_lower(out);
}

}  // namespace blockchol
