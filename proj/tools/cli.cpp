#include "cli.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <ostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "blockchol/io.hpp"
#include "blockchol/metrics.hpp"
#include "blockchol/model_selection.hpp"
#include "blockchol/parallel.hpp"
#include "blockchol/predict.hpp"
#include "blockchol/scenario.hpp"

namespace blockchol::cli {

namespace {

namespace fs = std::filesystem;

constexpr std::uint32_t kShuffleStream = 11;

struct TuningFlags {
  std::optional<double> lambda1;
  std::optional<double> lambda2;
  bool auto_bic = false;
  int grid_size = 10;
  double min_ratio = 0.01;
  std::string method = "prop";
  std::optional<unsigned> workers;
};

void add_tuning_flags(CLI::App* sub, TuningFlags& t) {
  sub->add_option("--lambda1", t.lambda1, "Lasso penalty on the regression blocks");
  sub->add_option("--lambda2", t.lambda2, "Graphical lasso penalty on the noise blocks");
  sub->add_flag("--auto-bic", t.auto_bic, "Choose both penalties by BIC over an automatic grid");
  sub->add_option("--grid-size", t.grid_size, "Grid points per penalty axis")->capture_default_str();
  sub->add_option("--min-ratio", t.min_ratio, "Smallest penalty as a fraction of the largest")
      ->capture_default_str();
  sub->add_option("--method", t.method, "prop | mcd | glasso | block-diag | banded:K")
      ->capture_default_str();
  sub->add_option("--workers", t.workers, "Worker threads (BLOCKCHOL_WORKERS overrides)");
}

unsigned resolve_workers(const std::optional<unsigned>& flag) {
  if (const char* env = std::getenv("BLOCKCHOL_WORKERS"); env != nullptr && *env != '\0') {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (*end != '\0' || v < 1) throw InvalidInput("BLOCKCHOL_WORKERS must be a positive integer");
    return static_cast<unsigned>(v);
  }
  if (flag) {
    if (*flag < 1) throw InvalidInput("--workers must be >= 1");
    return *flag;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void check_tuning(const TuningFlags& t) {
  if (t.auto_bic) {
    if (t.lambda1 || t.lambda2) throw InvalidInput("--auto-bic excludes --lambda1/--lambda2");
    return;
  }
  const MethodMode mode = MethodMode::parse(t.method);
  if ((!t.lambda2 && !mode.ignores_lambda2()) || (!t.lambda1 && !mode.ignores_lambda1())) {
    throw InvalidInput("give --lambda1 and --lambda2, or --auto-bic");
  }
}

GroupPartition resolve_partition(const std::optional<std::string>& groups, const MethodMode& mode,
                                 Index p, std::ostream& err) {
  if (mode.kind == MethodKind::glasso_only || mode.kind == MethodKind::mcd) {
    if (groups) err << "warning: --groups ignored for method " << mode.name() << "\n";
    return GroupPartition::from_sizes({p});
  }
  if (!groups) throw InvalidInput("--groups is required for method " + mode.name());
  const GroupPartition part = GroupPartition::parse(*groups);
  if (part.total() != p) {
    throw InvalidInput("partition total " + std::to_string(part.total()) +
                       " != p = " + std::to_string(p));
  }
  return part;
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw InvalidInput("cannot create directory '" + dir + "': " + ec.message());
}

std::string join(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

/// Fits with fixed penalties or by BIC. `table` receives the BIC table when tuning.
PrecisionEstimate estimate(const Dataset& d, const TuningFlags& t, unsigned workers,
                           std::vector<BicCell>* table) {
  FitConfig config;
  config.method = MethodMode::parse(t.method);
  config.workers = workers;
  if (!t.auto_bic) {
    config.lambda1 = t.lambda1.value_or(0.0);
    config.lambda2 = t.lambda2.value_or(0.0);
    return fit(d, config);
  }
  const TuningGrid grid = auto_grid(d, t.grid_size, t.min_ratio, config.method);
  SelectOptions opts;
  opts.workers = workers;
  config.workers = 1;
  Selection sel = select(d, grid, config, opts);
  if (table) *table = sel.table;
  return std::move(sel.best);
}

RunManifest base_manifest(const std::string& command, std::uint64_t seed,
                          const std::vector<std::string>& args) {
  RunManifest m;
  m.command = command;
  m.seed = seed;
  for (std::size_t k = 0; k < args.size(); ++k) {
    if (args[k].rfind("--", 0) != 0) continue;
    const bool has_value = k + 1 < args.size() && args[k + 1].rfind("--", 0) != 0;
    m.config.emplace_back(args[k], has_value ? args[k + 1] : "true");
  }
  m.tool_version = kVersion;
  m.timestamp = utc_timestamp();
  return m;
}

// ---- fit -------------------------------------------------------------------

struct FitFlags {
  std::string data;
  std::optional<std::string> groups;
  std::string out_dir = ".";
  TuningFlags tuning;
};

int cmd_fit(const FitFlags& f, const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err) {
  check_tuning(f.tuning);
  const MethodMode mode = MethodMode::parse(f.tuning.method);
  const CsvTable table = read_csv(f.data);
  const GroupPartition part = resolve_partition(f.groups, mode, table.data.cols(), err);
  const Dataset d = Dataset::make(table.data, part);
  const unsigned workers = resolve_workers(f.tuning.workers);

  std::vector<BicCell> bic_rows;
  const PrecisionEstimate est = estimate(d, f.tuning, workers, &bic_rows);
  spd_cholesky(est.omega);  // every written estimate is SPD

  ensure_dir(f.out_dir);
  write_text_file(join(f.out_dir, "estimate.json"), estimate_json(est));
  if (f.tuning.auto_bic) write_text_file(join(f.out_dir, "bic_table.csv"), bic_table_csv(bic_rows));
  write_text_file(join(f.out_dir, "manifest.json"), manifest_json(base_manifest("fit", 0, args)));
  if (!est.all_converged()) err << "warning: some groups hit the iteration cap\n";
  out << "lambda1=" << format_double(est.lambda1) << " lambda2=" << format_double(est.lambda2)
      << " offdiag_nonzeros=" << count_lower_nonzeros(est.omega) << "\n";
  return kExitOk;
}

// ---- simulate --------------------------------------------------------------

struct SimulateFlags {
  int scenario = 1;
  Index n = 50;
  Index p = 0;
  std::string groups;
  int reps = 2;
  std::uint64_t seed = 1;
  std::string methods = "prop,glasso";
  int grid_size = 10;
  double min_ratio = 0.01;
  std::optional<unsigned> workers;
  std::string out_dir = ".";
};

struct SimMethod {
  MethodMode mode;
  bool shuffled = false;
  std::string label;
};

std::vector<SimMethod> parse_methods(const std::string& list) {
  std::vector<SimMethod> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    SimMethod m;
    m.label = item;
    if (item.back() == '*') {
      m.shuffled = true;
      item.pop_back();
    }
    m.mode = MethodMode::parse(item);
    out.push_back(m);
  }
  if (out.empty()) throw InvalidInput("--methods is empty");
  return out;
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

int cmd_simulate(const SimulateFlags& f, const std::vector<std::string>& args, std::ostream& out) {
  const std::vector<SimMethod> methods = parse_methods(f.methods);
  if (f.reps < 1) throw InvalidInput("--reps must be >= 1");
  if (f.n < 2) throw InvalidInput("--n must be >= 2");
  ScenarioSpec spec;
  spec.id = f.scenario;
  spec.p = f.p;
  spec.partition = GroupPartition::parse(f.groups);
  // Validates the combination before any work starts.
  spec.seed = f.seed;
  generate(spec);
  if (f.grid_size < 2 || !(f.min_ratio > 0.0 && f.min_ratio < 1.0)) {
    throw InvalidInput("--grid-size must be >= 2 and --min-ratio in (0, 1)");
  }
  const unsigned workers = resolve_workers(f.workers);

  const std::size_t jobs = static_cast<std::size_t>(f.reps) * methods.size();
  std::vector<LossReport> reports(jobs);
  std::vector<std::pair<double, double>> chosen(jobs);
  parallel_for(jobs, workers, [&](std::size_t job) {
    const auto rep = static_cast<std::uint64_t>(job / methods.size());
    const SimMethod& m = methods[job % methods.size()];
    ScenarioSpec rs = spec;
    rs.seed = f.seed ^ rep;
    const GeneratedTruth truth = generate(rs);
    const Dataset d = sample_mvn(truth, f.n, rs.seed);
    // One grid per replicate, shared by every method.
    const TuningGrid grid = auto_grid(d, f.grid_size, f.min_ratio);
    FitConfig config;
    config.method = m.mode;

    std::vector<Index> perm;
    Dataset used = d;
    if (m.shuffled) {
      perm = within_group_permutation(d.partition, rs.seed, kShuffleStream);
      for (Index k = 0; k < d.p(); ++k) used.data.col(k) = d.data.col(perm[static_cast<std::size_t>(k)]);
    }
    const Selection sel = select(used, grid, config);
    const SymMatrix omega = m.shuffled ? unpermute(sel.best.omega, perm) : sel.best.omega;
    reports[job] = losses(truth, omega);
    chosen[job] = {sel.best.lambda1, sel.best.lambda2};
  });

  ensure_dir(f.out_dir);
  std::string raw = "replicate,method,lambda1,lambda2";
  for (auto name : LossReport::kNames) raw += "," + std::string(name);
  raw += "\n";
  for (std::size_t job = 0; job < jobs; ++job) {
    raw += std::to_string(job / methods.size()) + "," + methods[job % methods.size()].label + "," +
           format_double(chosen[job].first) + "," + format_double(chosen[job].second);
    for (double v : reports[job].values()) raw += "," + format_double(v);
    raw += "\n";
  }
  write_text_file(join(f.out_dir, "raw.csv"), raw);

  std::string summary = "scenario,method,replicates";
  for (auto name : LossReport::kNames) summary += "," + std::string(name);
  for (auto name : LossReport::kNames)
    summary += "," + std::string(name) + "_mean," + std::string(name) + "_se";
  summary += "\n";
  for (std::size_t k = 0; k < methods.size(); ++k) {
    std::vector<LossReport> mine;
    for (int r = 0; r < f.reps; ++r) mine.push_back(reports[static_cast<std::size_t>(r) * methods.size() + k]);
    LossSummary s;
    if (mine.size() >= 2) {
      s = aggregate(mine);
    } else {
      s.mean = mine.front();
      s.replicates = 1;
    }
    const auto mean = s.mean.values();
    const auto se = s.se.values();
    summary += std::to_string(f.scenario) + "," + methods[k].label + "," + std::to_string(mine.size());
    for (std::size_t c = 0; c < mean.size(); ++c)
      summary += ",\"" + fixed(mean[c], 3) + " (" + fixed(se[c], 3) + ")\"";
    for (std::size_t c = 0; c < mean.size(); ++c)
      summary += "," + format_double(mean[c]) + "," + format_double(se[c]);
    summary += "\n";
  }
  write_text_file(join(f.out_dir, "summary.csv"), summary);
  write_text_file(join(f.out_dir, "manifest.json"),
                  manifest_json(base_manifest("simulate", f.seed, args)));
  out << summary;
  return kExitOk;
}

// ---- predict ---------------------------------------------------------------

struct PredictFlags {
  std::string data;
  std::optional<std::string> groups;
  Index split = 0;
  bool loo = false;
  std::optional<std::string> test;
  bool sqrt_transform = false;
  std::string out_dir = ".";
  TuningFlags tuning;
};

int cmd_predict(const PredictFlags& f, const std::vector<std::string>& args, std::ostream& out,
                std::ostream& err) {
  check_tuning(f.tuning);
  if (f.loo == f.test.has_value()) throw InvalidInput("give exactly one of --loo and --test");
  const MethodMode mode = MethodMode::parse(f.tuning.method);
  Matrix train = read_csv(f.data).data;
  if (f.sqrt_transform) train = sqrt_transform(train);
  const GroupPartition part = resolve_partition(f.groups, mode, train.cols(), err);
  if (!part.is_boundary(f.split) || f.split < 1 || f.split >= train.cols()) {
    throw InvalidInput("split " + std::to_string(f.split) + " is not on a group boundary of " +
                       part.to_string());
  }
  const Dataset d = Dataset::make(std::move(train), part);
  const unsigned workers = resolve_workers(f.tuning.workers);
  const TuningFlags tuning = f.tuning;
  const PrecisionFitter fitter = [tuning](const Dataset& t) {
    PrecisionEstimate e = estimate(t, tuning, 1, nullptr);
    return e.omega;
  };

  ApeReport report;
  if (f.loo) {
    report = predict_leave_one_out(d, f.split, fitter, workers);
  } else {
    Matrix test = read_csv(*f.test).data;
    if (f.sqrt_transform) test = sqrt_transform(test);
    report = predict_holdout(d, test, f.split, fitter);
  }

  ensure_dir(f.out_dir);
  std::string csv = "coordinate,ape,se\n";
  for (Index k = 0; k < report.ape.size(); ++k) {
    csv += std::to_string(f.split + k) + "," + format_double(report.ape(k)) + "," +
           format_double(report.se(k)) + "\n";
  }
  write_text_file(join(f.out_dir, "ape.csv"), csv);
  write_csv_file(join(f.out_dir, "predictions.csv"), report.predictions);
  write_text_file(join(f.out_dir, "manifest.json"), manifest_json(base_manifest("predict", 0, args)));
  out << "held_out=" << report.held_out << " mean_ape=" << format_double(report.ape.mean()) << "\n";
  return kExitOk;
}

// ---- edges -----------------------------------------------------------------

struct EdgesFlags {
  std::string estimate;
  double threshold = 1e-6;
  std::optional<std::string> out_path;
};

int cmd_edges(const EdgesFlags& f, std::ostream& out) {
  const EstimateRecord rec = read_estimate_json(f.estimate);
  std::string csv = "i,j,value\n";
  const Index p = rec.omega.dim();
  for (Index i = 0; i < p; ++i) {
    for (Index j = i + 1; j < p; ++j) {
      const double v = rec.omega(i, j);
      if (std::abs(v) > f.threshold) {
        csv += std::to_string(i) + "," + std::to_string(j) + "," + format_double(v) + "\n";
      }
    }
  }
  if (f.out_path) {
    write_text_file(*f.out_path, csv);
  } else {
    out << csv;
  }
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Sparse precision matrix estimation with partially ordered variables"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  FitFlags fit_flags;
  auto* fit_cmd = app.add_subcommand("fit", "Fit one data set");
  fit_cmd->add_option("--data", fit_flags.data, "n x p numeric CSV")->required();
  fit_cmd->add_option("--groups", fit_flags.groups, "Ordered group sizes, e.g. 30,60,40,70");
  fit_cmd->add_option("--out-dir", fit_flags.out_dir, "Output directory")->capture_default_str();
  add_tuning_flags(fit_cmd, fit_flags.tuning);

  SimulateFlags sim;
  auto* sim_cmd = app.add_subcommand("simulate", "Monte Carlo comparison on a known truth");
  sim_cmd->add_option("--scenario", sim.scenario, "Truth structure 1..7")->required();
  sim_cmd->add_option("--n", sim.n, "Rows per replicate")->capture_default_str();
  sim_cmd->add_option("--p", sim.p, "Dimension")->required();
  sim_cmd->add_option("--groups", sim.groups, "Ordered group sizes")->required();
  sim_cmd->add_option("--reps", sim.reps, "Replicates")->capture_default_str();
  sim_cmd->add_option("--seed", sim.seed, "Base seed")->capture_default_str();
  sim_cmd->add_option("--methods", sim.methods,
                      "Comma list of methods; a trailing * shuffles columns within groups")
      ->capture_default_str();
  sim_cmd->add_option("--grid-size", sim.grid_size, "Grid points per axis")->capture_default_str();
  sim_cmd->add_option("--min-ratio", sim.min_ratio, "Grid floor ratio")->capture_default_str();
  sim_cmd->add_option("--workers", sim.workers, "Worker threads (BLOCKCHOL_WORKERS overrides)");
  sim_cmd->add_option("--out-dir", sim.out_dir, "Output directory")->capture_default_str();

  PredictFlags pred;
  auto* pred_cmd = app.add_subcommand("predict", "Conditional-mean prediction of late coordinates");
  pred_cmd->add_option("--data", pred.data, "Training CSV")->required();
  pred_cmd->add_option("--groups", pred.groups, "Ordered group sizes");
  pred_cmd->add_option("--split", pred.split, "Number of leading (observed) coordinates")->required();
  pred_cmd->add_flag("--loo", pred.loo, "Leave-one-out over the rows of --data");
  pred_cmd->add_option("--test", pred.test, "Held-out CSV predicted from a fit on --data");
  pred_cmd->add_flag("--sqrt-transform", pred.sqrt_transform, "Apply sqrt(N + 1/4) first");
  pred_cmd->add_option("--out-dir", pred.out_dir, "Output directory")->capture_default_str();
  add_tuning_flags(pred_cmd, pred.tuning);

  EdgesFlags edges;
  auto* edges_cmd = app.add_subcommand("edges", "Edge list of an estimate");
  edges_cmd->add_option("--estimate", edges.estimate, "Estimate JSON")->required();
  edges_cmd->add_option("--threshold", edges.threshold, "Minimum |value|")->capture_default_str();
  edges_cmd->add_option("--out", edges.out_path, "Output CSV (default stdout)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(std::move(reversed));
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*fit_cmd) return cmd_fit(fit_flags, args, out, err);
    if (*sim_cmd) return cmd_simulate(sim, args, out);
    if (*pred_cmd) return cmd_predict(pred, args, out, err);
    if (*edges_cmd) return cmd_edges(edges, out);
  } catch (const NotPositiveDefinite& e) {
    err << "error: " << e.what() << "\n";
    return kExitNotPd;
  } catch (const InvalidInput& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace blockchol::cli
