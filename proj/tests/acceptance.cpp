// Prints one PASS/FAIL line per acceptance criterion; exits nonzero if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "blockchol/bcd.hpp"
#include "blockchol/io.hpp"
#include "blockchol/metrics.hpp"
#include "blockchol/model_selection.hpp"
#include "blockchol/predict.hpp"
#include "blockchol/scenario.hpp"
#include "cli.hpp"
#include "oracles.hpp"

using namespace blockchol;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double max_abs(const Matrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

Dataset gaussian_dataset(std::mt19937_64& gen, Index n, const GroupPartition& part) {
  const Index p = part.total();
  const Matrix l = Eigen::LLT<Matrix>(oracle::random_spd(gen, p)).matrixL();
  return Dataset::make(oracle::random_matrix(gen, n, p) * l.transpose(), part);
}

double log_uniform(std::mt19937_64& gen, double lo, double hi) {
  return std::exp(std::uniform_real_distribution<double>(std::log(lo), std::log(hi))(gen));
}

Outcome mle_identity() {
  std::mt19937_64 gen(101);
  const Dataset d = gaussian_dataset(gen, 500, GroupPartition::parse("2,2,2"));
  const PrecisionEstimate est = fit(d, FitConfig{});
  const SymMatrix s_inv = spd_inverse(spd_cholesky(sample_covariance(d)));
  const double err = max_abs(est.omega.dense() - s_inv.dense());
  return {err < 1e-8, "max |Omega - S^-1| = " + fmt("%.2e", err)};
}

Outcome glasso_reduction() {
  std::mt19937_64 gen(202);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const Index p = 2 + static_cast<Index>(gen() % 14);
    const Index n = 10 + static_cast<Index>(gen() % 60);
    const Dataset d = gaussian_dataset(gen, n, GroupPartition::from_sizes({p}));
    const SymMatrix s = sample_covariance(d);
    FitConfig c;
    c.method = MethodMode::parse("glasso");
    c.lambda2 = glasso_lambda_max(s) * std::uniform_real_distribution<double>(0.05, 0.9)(gen);
    const SymMatrix via_fit = fit(d, c).omega;
    const SymMatrix direct = solve_glasso(s, c.lambda2).theta;
    worst = std::max(worst, (via_fit.dense() - direct.dense()).norm());
  }
  return {worst < 1e-6, "worst Frobenius gap " + fmt("%.2e", worst) + " over 20 data sets"};
}

Outcome kkt_suites() {
  std::mt19937_64 gen(303);
  double lasso_worst = 0.0;
  double glasso_worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const Index n = 10 + static_cast<Index>(gen() % 50);
    const Index pj = 1 + static_cast<Index>(gen() % 5);
    const Index q = 1 + static_cast<Index>(gen() % 10);
    const Matrix x = oracle::random_matrix(gen, n, pj);
    const Matrix z = oracle::random_matrix(gen, n, q);
    const Matrix w = oracle::random_spd(gen, pj);
    const LassoGram gram(x, z);
    const double l1 = lasso_lambda_max(gram, w) * std::uniform_real_distribution<double>(0.01, 1.0)(gen);
    const LassoSolution a = solve_lasso(gram, w, l1);
    lasso_worst =
        std::max(lasso_worst, lasso_kkt_violation(gram, w, a.coef, l1) / std::max(1.0, l1));

    const Index p = 2 + static_cast<Index>(gen() % 14);
    const Index m = 5 + static_cast<Index>(gen() % 50);  // m < p gives a singular S
    const Matrix y = oracle::random_matrix(gen, m, p);
    const SymMatrix s = SymMatrix::from_symmetric(y.transpose() * y / static_cast<double>(m));
    const double l2 = glasso_lambda_max(s) * std::uniform_real_distribution<double>(0.02, 1.0)(gen);
    const GlassoSolution g = solve_glasso(s, l2);
    glasso_worst = std::max(glasso_worst, glasso_kkt_violation(s, g.theta, l2));
  }
  return {lasso_worst <= 1e-4 && glasso_worst <= 1e-4,
          "lasso residual/max(1,lambda1) " + fmt("%.2e", lasso_worst) + ", glasso residual " +
              fmt("%.2e", glasso_worst)};
}

Outcome positive_definiteness() {
  std::mt19937_64 gen(404);
  const GroupPartition part = GroupPartition::parse("10,10,10");
  int passed = 0;
  int total = 0;
  std::string first_error;
  for (int scenario = 1; scenario <= 7; ++scenario) {
    const int fits = scenario <= 3 ? 72 : 71;  // 500 in all
    for (int k = 0; k < fits; ++k) {
      ++total;
      try {
        ScenarioSpec spec;
        spec.id = scenario;
        spec.p = 30;
        spec.partition = part;
        spec.seed = gen();
        const GeneratedTruth truth = generate(spec);
        const Dataset d = sample_mvn(truth, 35 + static_cast<Index>(gen() % 100), spec.seed);
        FitConfig c;
        c.method = MethodMode::parse(k % 5 == 0 ? "mcd" : "prop");
        c.lambda1 = log_uniform(gen, 1e-3, 2.0);
        c.lambda2 = log_uniform(gen, 1e-3, 2.0);
        spd_cholesky(fit(d, c).omega);
        ++passed;
      } catch (const std::exception& e) {
        if (first_error.empty()) first_error = e.what();
      }
    }
  }
  std::string detail = std::to_string(passed) + "/" + std::to_string(total) + " estimates SPD";
  if (!first_error.empty()) detail += " (first failure: " + first_error + ")";
  return {passed == total, detail};
}

Outcome permutation_invariance() {
  std::mt19937_64 gen(505);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    ScenarioSpec spec;
    spec.id = 2 + trial % 6;
    spec.p = 24;
    spec.partition = GroupPartition::parse("8,8,8");
    spec.seed = gen();
    const GeneratedTruth truth = generate(spec);
    const Dataset d = sample_mvn(truth, 40 + static_cast<Index>(gen() % 40), spec.seed);
    const std::vector<Index> perm = within_group_permutation(spec.partition, gen(), 99);
    Dataset shuffled = d;
    for (Index k = 0; k < d.p(); ++k) shuffled.data.col(k) = d.data.col(perm[static_cast<std::size_t>(k)]);
    FitConfig c;
    c.lambda1 = log_uniform(gen, 0.05, 0.5);
    c.lambda2 = log_uniform(gen, 0.05, 0.5);
    const SymMatrix a = fit(d, c).omega;
    const SymMatrix b = unpermute(fit(shuffled, c).omega, perm);
    worst = std::max(worst, max_abs(a.dense() - b.dense()));
  }
  return {worst < 1e-8, "worst max-abs gap " + fmt("%.2e", worst) + " over 20 data sets"};
}

Outcome consistency_trend() {
  const GroupPartition part = GroupPartition::parse("10,10,10,10");
  ScenarioSpec spec;
  spec.id = 2;
  spec.p = 40;
  spec.partition = part;
  spec.seed = 606;
  const GeneratedTruth truth = generate(spec);
  std::vector<double> medians;
  for (Index n : {100, 400, 1600}) {
    std::vector<double> errs;
    for (std::uint64_t rep = 0; rep < 10; ++rep) {
      const Dataset d = sample_mvn(truth, n, 606 ^ (rep + 1) ^ (static_cast<std::uint64_t>(n) << 20));
      const Selection sel = select(d, auto_grid(d, 10, 0.01), FitConfig{});
      errs.push_back(losses(truth, sel.best.omega).fnorm);
    }
    std::nth_element(errs.begin(), errs.begin() + 5, errs.end());
    const double hi = errs[5];
    const double lo = *std::max_element(errs.begin(), errs.begin() + 5);
    medians.push_back(0.5 * (lo + hi));
  }
  const bool pass = medians[0] > medians[1] && medians[1] > medians[2];
  return {pass, "median Fnorm " + fmt("%.4f", medians[0]) + " > " + fmt("%.4f", medians[1]) +
                    " > " + fmt("%.4f", medians[2]) + " for n = 100, 400, 1600"};
}

struct MethodMeans {
  std::map<std::string, double> kl;
  std::map<std::string, double> ql;
};

MethodMeans raw_means(const std::string& raw_csv) {
  std::istringstream in(raw_csv);
  std::string line;
  std::getline(in, line);
  std::map<std::string, int> count;
  MethodMeans m;
  while (std::getline(in, line)) {
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    // replicate,method,lambda1,lambda2,L1,L2,Fnorm,KL,QL,FSL
    m.kl[f[1]] += std::stod(f[7]);
    m.ql[f[1]] += std::stod(f[8]);
    ++count[f[1]];
  }
  for (auto& [k, v] : m.kl) v /= count[k];
  for (auto& [k, v] : m.ql) v /= count[k];
  return m;
}

Outcome table_ordering() {
  const fs::path dir = fs::temp_directory_path() / "blockchol_acceptance_c7";
  fs::remove_all(dir);
  std::ostringstream out, err;
  // Penalty floor 0.1 of the maximum: below it, groups with more predecessors
  // than observations degenerate and every such cell is rejected anyway.
  const int code = cli::run_cli({"simulate", "--scenario", "2", "--n", "50", "--p", "100",
                                 "--groups", "20,20,20,20,20", "--reps", "20", "--seed", "2024",
                                 "--methods", "prop,glasso", "--grid-size", "10", "--min-ratio",
                                 "0.1", "--out-dir", dir.string()},
                                out, err);
  if (code != 0) return {false, "simulate exited with " + std::to_string(code) + ": " + err.str()};
  const MethodMeans m = raw_means(read_text_file((dir / "raw.csv").string()));
  const double kp = m.kl.at("prop"), kg = m.kl.at("glasso");
  const double qp = m.ql.at("prop"), qg = m.ql.at("glasso");
  return {kp < kg && qp < qg, "mean KL prop " + fmt("%.4f", kp) + " vs glasso " + fmt("%.4f", kg) +
                                  ", mean QL prop " + fmt("%.4f", qp) + " vs glasso " +
                                  fmt("%.4f", qg)};
}

Outcome oracle_equivalence() {
  std::mt19937_64 gen(808);
  double lasso_worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const Index n = 8 + static_cast<Index>(gen() % 13);
    const Index pj = 1 + static_cast<Index>(gen() % 3);
    const Index q = 1 + static_cast<Index>(gen() % 4);
    const Matrix x = oracle::random_matrix(gen, n, pj);
    const Matrix z = oracle::random_matrix(gen, n, q);
    const Matrix w = oracle::random_spd(gen, pj);
    const LassoGram gram(x, z);
    const double l1 = lasso_lambda_max(gram, w) * std::uniform_real_distribution<double>(0.05, 0.8)(gen);
    const Matrix cd = solve_lasso(gram, w, l1).coef;
    lasso_worst = std::max(lasso_worst, max_abs(cd - oracle::kronecker_lasso(x, z, w, l1)));
  }
  double glasso_worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const Index p = 2 + trial % 2;
    const Matrix y = oracle::random_matrix(gen, 12, p);
    const SymMatrix s = SymMatrix::from_symmetric(y.transpose() * y / 12.0);
    const double l2 = glasso_lambda_max(s) * std::uniform_real_distribution<double>(0.05, 1.2)(gen);
    const Matrix ref = p == 2 ? oracle::glasso_2x2(s.dense(), l2) : oracle::proximal_glasso(s.dense(), l2);
    glasso_worst = std::max(glasso_worst, max_abs(solve_glasso(s, l2).theta.dense() - ref));
  }
  return {lasso_worst < 1e-6 && glasso_worst < 1e-5,
          "lasso vs Kronecker " + fmt("%.2e", lasso_worst) + " (< 1e-6), glasso vs 2-3 dim oracle " +
              fmt("%.2e", glasso_worst) + " (< 1e-5)"};
}

Outcome prediction_sanity() {
  double closed_form = 0.0;
  for (double rho : {-0.8, -0.2, 0.3, 0.9}) {
    PredictTask t;
    t.split = 1;
    t.mean = Vector(2);
    t.mean << 0.7, -1.3;
    Matrix sigma(2, 2);
    sigma << 1.0, rho, rho, 1.0;
    t.omega = SymMatrix::from_symmetric(sigma.inverse(), 1e-12);
    t.partition = GroupPartition::parse("1,1");
    Matrix early(3, 1);
    early << -2.0, 0.7, 4.5;
    const Matrix late = predict_late(t, early);
    for (Index i = 0; i < 3; ++i)
      closed_form = std::max(closed_form, std::abs(late(i, 0) - (-1.3 + rho * (early(i, 0) - 0.7))));
  }

  // Late coordinates are linear in the early ones plus 1e-3 noise; an exactly
  // singular covariance has no precision matrix to fit.
  std::mt19937_64 gen(909);
  std::normal_distribution<double> z(0.0, 1.0);
  const Index n = 200;
  Matrix data(n, 6);
  for (Index i = 0; i < n; ++i) {
    const double a = z(gen), b = z(gen), c = z(gen);
    data.row(i) << a, b, c, a - 0.5 * b + 1e-3 * z(gen), 2.0 * c + b + 1e-3 * z(gen),
        0.3 * a + 1e-3 * z(gen);
  }
  const Dataset d = Dataset::make(data, GroupPartition::parse("3,3"));
  const PrecisionFitter fitter = [](const Dataset& train) {
    FitConfig c;
    c.lambda1 = 1e-6;
    c.lambda2 = 1e-6;
    return fit(train, c).omega;
  };
  const double ape = predict_leave_one_out(d, 3, fitter).ape.maxCoeff();
  return {closed_form < 1e-8 && ape < 0.05,
          "bivariate gap " + fmt("%.2e", closed_form) + ", linear panel max APE " + fmt("%.4f", ape)};
}

Outcome determinism() {
  const fs::path base = fs::temp_directory_path() / "blockchol_acceptance_c10";
  fs::remove_all(base);
  std::string raws[2];
  const char* workers[2] = {"1", "8"};
  for (int k = 0; k < 2; ++k) {
    const fs::path dir = base / workers[k];
    std::ostringstream out, err;
    const int code = cli::run_cli(
        {"simulate", "--scenario", "4", "--n", "50", "--p", "20", "--groups", "5,5,5,5", "--reps",
         "4", "--seed", "77", "--methods", "prop,glasso,mcd,prop*", "--grid-size", "5",
         "--workers", workers[k], "--out-dir", dir.string()},
        out, err);
    if (code != 0) return {false, "simulate exited with " + std::to_string(code) + ": " + err.str()};
    raws[k] = read_text_file((dir / "raw.csv").string());
  }
  return {raws[0] == raws[1] && !raws[0].empty(),
          raws[0] == raws[1] ? "raw.csv identical (" + std::to_string(raws[0].size()) + " bytes)"
                             : "raw.csv differs between 1 and 8 workers"};
}

struct Criterion {
  int id;
  const char* name;
  double budget_seconds;  // 0 when no runtime bound applies
  std::function<Outcome()> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "exact MLE identity", 1.0, mle_identity},
      {2, "glasso-reduction equivalence", 10.0, glasso_reduction},
      {3, "KKT suites", 60.0, kkt_suites},
      {4, "positive definiteness", 0.0, positive_definiteness},
      {5, "within-group permutation invariance", 0.0, permutation_invariance},
      {6, "consistency trend", 300.0, consistency_trend},
      {7, "scaled table ordering", 1800.0, table_ordering},
      {8, "brute-force oracle equivalence", 0.0, oracle_equivalence},
      {9, "prediction sanity", 0.0, prediction_sanity},
      {10, "determinism across worker counts", 0.0, determinism},
  };
  int failures = 0;
  for (const Criterion& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::string timing = fmt("%.2f s", secs);
    if (c.budget_seconds > 0.0) {
      timing += " of " + fmt("%.0f s", c.budget_seconds) + " budget";
      if (secs >= c.budget_seconds) {
        o.pass = false;
        timing += ", over budget";
      }
    }
    if (!o.pass) ++failures;
    std::printf("%s criterion %d (%s): %s [%s]\n", o.pass ? "PASS" : "FAIL", c.id, c.name,
                o.detail.c_str(), timing.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
