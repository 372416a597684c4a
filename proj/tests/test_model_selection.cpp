#include <cmath>
#include <numeric>
#include <random>

#include "blockchol/errors.hpp"
#include "blockchol/metrics.hpp"
#include "blockchol/model_selection.hpp"
#include "blockchol/scenario.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace blockchol;

namespace {

Dataset random_dataset(std::mt19937_64& gen, Index n, const GroupPartition& part) {
  const Index p = part.total();
  const Matrix l = Eigen::LLT<Matrix>(oracle::random_spd(gen, p, 0.3, 3.0)).matrixL();
  return Dataset::make(oracle::random_matrix(gen, n, p) * l.transpose(), part);
}

}  // namespace

TEST_CASE("bic examples") {
  CHECK(bic(SymMatrix::identity(4), SymMatrix::identity(4), 50) == doctest::Approx(4.0));
  Vector two(2);
  two << 2.0, 2.0;
  CHECK(bic(SymMatrix::diagonal(two), SymMatrix::identity(2), 100) ==
        doctest::Approx(-2.0 * std::log(2.0) + 4.0).epsilon(1e-14));

  SymMatrix om = SymMatrix::identity(3);
  const Index before = count_lower_nonzeros(om);
  om.set(2, 0, 1e-3);
  CHECK(count_lower_nonzeros(om) == before + 1);
  om.set(1, 0, 1e-7);
  CHECK(count_lower_nonzeros(om) == before + 1);
  const double expected = -spd_logdet(spd_cholesky(om)) + om.dense().trace() + std::log(10.0) / 10.0;
  CHECK(bic(om, SymMatrix::identity(3), 10) == doctest::Approx(expected).epsilon(1e-14));

  Matrix bad(2, 2);
  bad << 1, 2, 2, 1;
  CHECK_THROWS_AS(bic(SymMatrix::from_symmetric(bad), SymMatrix::identity(2), 10), InvalidInput);
}

TEST_CASE("property: bic is invariant under within-group conjugation") {
  std::mt19937_64 gen(1);
  for (int trial = 0; trial < 10; ++trial) {
    const SymMatrix om = SymMatrix::from_symmetric(oracle::random_spd(gen, 6), 1e-12);
    const SymMatrix s = SymMatrix::from_symmetric(oracle::random_spd(gen, 6), 1e-12);
    std::vector<Index> perm{2, 0, 1, 5, 3, 4};
    CHECK(bic(permute(om, perm), permute(s, perm), 30) == doctest::Approx(bic(om, s, 30)).epsilon(1e-12));
  }
}

TEST_CASE("explicit grids are sorted descending and validated") {
  const TuningGrid g = TuningGrid::from_values({0.1, 1.0, 0.5}, {0.2});
  CHECK(g.lambda1_values == std::vector<double>{1.0, 0.5, 0.1});
  CHECK_THROWS_AS(TuningGrid::from_values({}, {0.1}), InvalidInput);
  CHECK_THROWS_AS(TuningGrid::from_values({-1.0}, {0.1}), InvalidInput);
}

TEST_CASE("automatic grid endpoints and spacing") {
  std::mt19937_64 gen(2);
  const Dataset d = random_dataset(gen, 50, GroupPartition::parse("2,3,2"));
  const TuningGrid two = auto_grid(d, 2, 0.05);
  REQUIRE(two.lambda1_values.size() == 2);
  CHECK(two.lambda1_values[1] == doctest::Approx(0.05 * two.lambda1_values[0]).epsilon(1e-12));
  CHECK(two.lambda2_values[1] == doctest::Approx(0.05 * two.lambda2_values[0]).epsilon(1e-12));

  const TuningGrid g = auto_grid(d, 10, 0.01);
  CHECK(g.grid_size == 10);
  for (const auto* axis : {&g.lambda1_values, &g.lambda2_values}) {
    REQUIRE(axis->size() == 10);
    const double ratio = (*axis)[1] / (*axis)[0];
    for (std::size_t k = 1; k < axis->size(); ++k) {
      CHECK(std::abs((*axis)[k] / (*axis)[k - 1] - ratio) < 1e-12);
    }
  }
  CHECK_THROWS_AS(auto_grid(d, 1, 0.1), InvalidInput);
  CHECK_THROWS_AS(auto_grid(d, 5, 1.0), InvalidInput);
  const Dataset zero = Dataset::make(Matrix::Zero(5, 7), d.partition);
  CHECK_THROWS_AS(auto_grid(zero, 5, 0.1), InvalidInput);
}

TEST_CASE("top grid corner gives zero regression blocks") {
  std::mt19937_64 gen(3);
  for (int trial = 0; trial < 10; ++trial) {
    const Dataset d = random_dataset(gen, 40, GroupPartition::parse("2,3,2"));
    const TuningGrid g = auto_grid(d, 5, 0.1);
    FitConfig c;
    c.lambda1 = g.lambda1_values.front();
    c.lambda2 = g.lambda2_values.front();
    const PrecisionEstimate est = fit(d, c);
    for (const auto& [key, block] : est.t.blocks()) CHECK(block.isZero(0.0));
    CHECK(count_lower_nonzeros(est.omega) == 0);
  }
}

TEST_CASE("single cell grid returns that fit") {
  std::mt19937_64 gen(4);
  const Dataset d = random_dataset(gen, 40, GroupPartition::parse("2,2"));
  FitConfig c;
  const Selection sel = select(d, TuningGrid::from_values({0.1}, {0.2}), c);
  c.lambda1 = 0.1;
  c.lambda2 = 0.2;
  CHECK(sel.table.size() == 1);
  CHECK(sel.best.omega.dense() == fit(d, c).omega.dense());
}

TEST_CASE("huge penalties give a diagonal estimate with finite bic") {
  std::mt19937_64 gen(5);
  const Dataset d = random_dataset(gen, 40, GroupPartition::parse("2,2"));
  const Selection sel = select(d, TuningGrid::from_values({1e6, 0.01}, {1e6, 0.01}), FitConfig{});
  const BicCell& top = sel.table.front();
  CHECK(top.lambda1 == 1e6);
  CHECK(top.lambda2 == 1e6);
  CHECK(std::isfinite(top.bic));
  CHECK(top.nnz == 0);
}

TEST_CASE("property: best cell is the table minimum, ties go to small penalties") {
  std::mt19937_64 gen(6);
  for (int trial = 0; trial < 5; ++trial) {
    const Dataset d = random_dataset(gen, 30, GroupPartition::parse("2,2,2"));
    const Selection sel = select(d, auto_grid(d, 4, 0.05), FitConfig{});
    double min_bic = INFINITY;
    for (const auto& c : sel.table) min_bic = std::min(min_bic, c.bic);
    CHECK(sel.table[sel.best_index].bic == min_bic);
    CHECK(sel.best.lambda1 == sel.table[sel.best_index].lambda1);
    CHECK(sel.best.lambda2 == sel.table[sel.best_index].lambda2);
  }
  // Identical cells: every lambda pair gives T = I, D^{-1} = I on identity data.
  Matrix x(4, 2);
  x << 1, 1, -1, 1, 1, -1, -1, -1;
  const Dataset iso = Dataset::make(x, GroupPartition::parse("1,1"));
  const Selection sel = select(iso, TuningGrid::from_values({0.3, 0.2}, {0.5, 0.4}), FitConfig{});
  CHECK(sel.best.lambda1 == 0.2);
  CHECK(sel.best.lambda2 == 0.4);
}

TEST_CASE("failed cells score infinity; all failing throws") {
  std::mt19937_64 gen(7);
  const Dataset d = random_dataset(gen, 4, GroupPartition::parse("6"));
  const Selection sel = select(d, TuningGrid::from_values({0.0}, {0.5, 0.0}), FitConfig{});
  CHECK(std::isinf(sel.table[1].bic));
  CHECK_FALSE(sel.table[1].error.empty());
  CHECK(sel.best.lambda2 == 0.5);
  CHECK_THROWS_AS(select(d, TuningGrid::from_values({0.0}, {0.0}), FitConfig{}), InvalidInput);
}

TEST_CASE("warm starts and workers leave results within solver tolerance") {
  std::mt19937_64 gen(8);
  const Dataset d = random_dataset(gen, 40, GroupPartition::parse("3,3"));
  const TuningGrid g = auto_grid(d, 4, 0.05);
  // Tight outer stopping so both runs reach the same fixed point.
  FitConfig tight;
  tight.tau1 = 1e-16;
  tight.tau2 = 1e-16;
  tight.max_outer_iterations = 1000;
  const Selection warm = select(d, g, tight);
  SelectOptions cold_opts;
  cold_opts.warm_start = false;
  const Selection cold = select(d, g, tight, cold_opts);
  for (std::size_t k = 0; k < warm.table.size(); ++k) {
    CHECK(std::abs(warm.table[k].bic - cold.table[k].bic) < 1e-6);
  }
  SelectOptions par;
  par.workers = 3;
  const Selection threaded = select(d, g, tight, par);
  for (std::size_t k = 0; k < warm.table.size(); ++k) CHECK(warm.table[k].bic == threaded.table[k].bic);
}

TEST_CASE("property: nonzeros shrink along lambda2 at the largest lambda1") {
  std::mt19937_64 gen(9);
  for (int trial = 0; trial < 5; ++trial) {
    const Dataset d = random_dataset(gen, 30, GroupPartition::parse("3,3"));
    const TuningGrid g = auto_grid(d, 6, 0.05);
    const Selection sel = select(d, TuningGrid::from_values({g.lambda1_values.front()}, g.lambda2_values), FitConfig{});
    // Table runs from the largest lambda2 down: nonzero counts must not fall.
    for (std::size_t k = 1; k < sel.table.size(); ++k) CHECK(sel.table[k].nnz >= sel.table[k - 1].nnz);
  }
}

TEST_CASE("selection beats maximal shrinkage on scenario 2 data") {
  ScenarioSpec spec;
  spec.id = 2;
  spec.p = 20;
  spec.partition = GroupPartition::parse("5,5,5,5");
  spec.seed = 3;
  const GeneratedTruth truth = generate(spec);
  const Dataset d = sample_mvn(truth, 400, 3);
  const TuningGrid g = auto_grid(d, 6, 0.01);
  const Selection sel = select(d, g, FitConfig{});
  FitConfig top;
  top.lambda1 = g.lambda1_values.front();
  top.lambda2 = g.lambda2_values.front();
  CHECK(losses(truth, sel.best.omega).kl <= losses(truth, fit(d, top).omega).kl);
}

TEST_CASE("bic table csv") {
  std::vector<BicCell> t(1);
  t[0].lambda1 = 0.5;
  t[0].lambda2 = 0.25;
  t[0].bic = 1.5;
  t[0].nnz = 3;
  t[0].converged = true;
  CHECK(bic_table_csv(t) == "lambda1,lambda2,bic,nnz,converged\n0.5,0.25,1.5,3,true\n");
}
