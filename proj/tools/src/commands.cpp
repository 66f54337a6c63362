// SPDX-License-Identifier: Apache-2.0
#include "demon_cli/commands.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "demon/harness.hpp"
#include "demon/rng.hpp"
#include "demon_cli/csv.hpp"
#include "demon_cli/svg.hpp"

namespace demon::cli {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Runs an output step, reclassifying its failures as I/O errors.
void io(const std::function<void()>& step) {
  try {
    step();
  } catch (const IoError&) {
    throw;
  } catch (const std::exception& e) {
    throw IoError(e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(fmt::format("cannot open '{}' for writing", path.string()));
  out << text;
  out.flush();
  if (!out) throw IoError(fmt::format("write to '{}' failed", path.string()));
}

void make_output_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw IoError(fmt::format("cannot create output directory '{}': {}", dir.string(), ec.message()));
  }
}

// ---------------------------------------------------------------------------
// Config loading

struct ConfigOptions {
  std::string path;
  std::vector<std::string> overrides;
};

RunConfig load_config(const ConfigOptions& opts) {
  if (opts.path.empty()) throw UsageError("--config is required");
  std::ifstream in(opts.path, std::ios::binary);
  if (!in) throw UsageError(fmt::format("cannot read config '{}'", opts.path));
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw UsageError(fmt::format("config '{}' is not valid JSON: {}", opts.path, e.what()));
  }
  if (!j.is_object()) throw UsageError(fmt::format("config '{}' must be a JSON object", opts.path));

  if (const char* env = std::getenv("DEMON_OPT_SEED"); env != nullptr && *env != '\0') {
    std::uint64_t seed = 0;
    const std::string text(env);
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), seed);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
      throw UsageError(fmt::format("DEMON_OPT_SEED='{}' is not a non-negative integer", text));
    }
    j["seed"] = seed;
  }
  for (const auto& assignment : opts.overrides) apply_override(j, assignment);

  RunConfig config;
  try {
    config = j.get<RunConfig>();
  } catch (const json::exception& e) {
    throw UsageError(fmt::format("config '{}': {}", opts.path, e.what()));
  }
  return resolve_config(config);
}

void add_config_options(CLI::App* cmd, ConfigOptions& opts) {
  cmd->add_option("--config", opts.path, "Run configuration (JSON)");
  cmd->add_option("--set", opts.overrides, "Override a config field, e.g. lr_schedule.init_value=0.03")
      ->expected(1)
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
}

json optional_number(const std::optional<double>& x) {
  return x && std::isfinite(*x) ? json(*x) : json(nullptr);
}

// ---------------------------------------------------------------------------
// train

struct TrainOptions {
  ConfigOptions config;
  std::string out = ".";
};

int cmd_train(const TrainOptions& opts, std::ostream& out) {
  const RunConfig config = load_config(opts.config);
  const Trace trace = run_training(config);
  const fs::path dir(opts.out);

  std::optional<double> final_val;
  std::optional<double> best_val;
  for (const auto& rec : trace.records) {
    if (!rec.val_metric) continue;
    final_val = rec.val_metric;
    if (!best_val || *rec.val_metric < *best_val) best_val = rec.val_metric;
  }
  json summary = {
      {"optimizer", to_string(config.optimizer)},
      {"lr", config_lr(config)},
      {"momentum", config_momentum(config)},
      {"T", config.T},
      {"seed", config.seed},
      {"records", trace.records.size()},
      {"diverged", trace.diverged},
      {"final_loss", trace.records.empty() ? json(nullptr) : optional_number(trace.records.back().loss)},
      {"final_val_metric", optional_number(final_val)},
      {"best_val_metric", optional_number(best_val)},
      {"config", config},
  };

  io([&] {
    make_output_dir(dir);
    emit_results(trace, dir / "trace.csv", OutputFormat::Csv);
    write_text(dir / "summary.jsonl", summary.dump() + "\n");
  });
  out << fmt::format("{} on {}: {} records, final loss {}{}\n", to_string(config.optimizer),
                     to_string(config.problem_spec.generator), trace.records.size(),
                     trace.records.empty() ? "n/a" : format_number(trace.records.back().loss),
                     trace.diverged ? " (diverged)" : "");
  return kExitOk;
}

// ---------------------------------------------------------------------------
// grid

struct GridOptions {
  ConfigOptions config;
  std::string out = ".";
  std::vector<double> lr_grid;
  std::vector<double> momentum_grid;
  std::vector<std::uint64_t> seeds;
  std::size_t workers = 1;
  bool no_heatmap = false;
};

std::vector<double> cell_means(const GridResult& result) {
  std::vector<double> values;
  for (const auto& cell : result.cells) values.push_back(cell.mean_final_val);
  return values;
}

int cmd_grid(const GridOptions& opts, std::ostream& out) {
  const RunConfig base = load_config(opts.config);
  const std::vector<double> lrs =
      opts.lr_grid.empty() ? lr_grid_multiples_of_three(config_lr(base), -2, 2) : opts.lr_grid;
  const std::vector<double> moms =
      opts.momentum_grid.empty() ? std::vector<double>{0.9, 0.95, 0.97} : opts.momentum_grid;
  std::vector<std::uint64_t> seeds = opts.seeds;
  if (seeds.empty()) seeds = {base.seed, base.seed + 1, base.seed + 2};
  if (opts.workers == 0) throw UsageError("--workers must be positive");

  const GridResult result = grid_search(base, lrs, moms, seeds, opts.workers);
  const fs::path dir(opts.out);
  io([&] {
    make_output_dir(dir);
    emit_results(result, dir / "grid.csv", OutputFormat::Csv);
    emit_results(result, dir / "grid.jsonl", OutputFormat::Jsonl);
    if (!opts.no_heatmap) {
      write_text(dir / "heatmap.svg", render_heatmap(result.lr_values, result.momentum_values, cell_means(result)));
    }
  });

  std::size_t diverged = 0;
  for (const auto& cell : result.cells) diverged += cell.diverged() ? 1 : 0;
  out << fmt::format("{} cells x {} seeds, {} diverged\n", result.cells.size(), seeds.size(), diverged);
  if (diverged < result.cells.size()) {
    const auto [lr, momentum] = best_cell(result);
    out << fmt::format("best cell: lr {} momentum {}; cells within 110% of best: {}\n",
                       format_number(lr), format_number(momentum), cells_within(result, 1.1));
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// verify

CheckReport renamed(CheckReport report, const std::string& suffix) {
  report.check_name += suffix;
  return report;
}

std::vector<CheckReport> lemma1_suite(double fault) {
  constexpr std::size_t steps = 200;
  constexpr double eta = 0.05;
  const Problem problem = make_scale_invariant(8);
  const Vector theta0 = problem.initial_point(11);
  std::vector<CheckReport> reports;
  const std::pair<const char*, std::function<double(std::size_t)>> variants[] = {
      {"_constant", [](std::size_t) { return 0.9; }},
      {"_demon", [](std::size_t t) { return demon_beta(static_cast<double>(t), steps, 0.9); }},
  };
  for (const auto& [suffix, beta] : variants) {
    std::vector<double> betas(steps + 1);
    for (std::size_t t = 0; t <= steps; ++t) betas[t] = beta(t);
    const Trace trace = run_momentum_trace(problem, theta0, eta, betas, steps);
    Lemma1Options options;
    options.fault_injection = fault;
    for (auto& report : check_lemma1(trace, eta, options)) reports.push_back(renamed(report, suffix));
  }
  return reports;
}

std::vector<CheckReport> theorem1_suite() {
  std::vector<CheckReport> reports;
  for (std::size_t dim : {std::size_t{1}, std::size_t{8}}) {
    CheckReport total{fmt::format("theorem1_bound_dim{}", dim), true, 0.0, 0.0, ""};
    Rng rng(derive_seed(1000, dim));
    for (double L : {0.5, 1.0, 4.0}) {
      for (double scale : {0.1, 0.3, 0.6}) {
        for (int draw = 0; draw < 3; ++draw) {
          Vector theta1(dim);
          for (double& x : theta1) x = rng.uniform(-5.0, 5.0);
          const CheckReport r = check_theorem1(L, scale / L, 1000, theta1);
          total.passed = total.passed && r.passed;
          total.max_abs_error = std::max(total.max_abs_error, r.max_abs_error);
          if (total.witness.empty() || r.max_rel_error > total.max_rel_error) {
            total.witness = fmt::format("worst at L={} alpha={}/L draw {}: {}", L, scale, draw, r.witness);
          }
          total.max_rel_error = std::max(total.max_rel_error, r.max_rel_error);
        }
      }
    }
    reports.push_back(total);
  }
  return reports;
}

std::vector<CheckReport> unroll_suite() {
  constexpr std::size_t steps = 100;
  constexpr std::size_t dim = 6;
  Rng rng(derive_seed(2000, 0));
  std::vector<Vector> gradients(steps, Vector(dim));
  for (auto& g : gradients) {
    for (double& x : g) x = rng.normal();
  }
  Vector theta0(dim);
  for (double& x : theta0) x = rng.normal();

  ScheduleSpec cosine;
  cosine.kind = ScheduleKind::Cosine;
  cosine.init_value = 0.9;
  cosine.target = ScheduleTarget::Momentum;
  ScheduleSpec linear = cosine;
  linear.kind = ScheduleKind::Linear;
  const std::pair<const char*, ScheduleSpec> schedules[] = {
      {"_constant", constant_schedule(0.9, ScheduleTarget::Momentum)},
      {"_demon", demon_schedule(0.9)},
      {"_cosine", cosine},
      {"_linear", linear},
  };
  std::vector<CheckReport> reports;
  for (const auto& [suffix, spec] : schedules) {
    std::vector<double> betas(steps);
    for (std::size_t t = 0; t < steps; ++t) {
      betas[t] = schedule_eval(spec, static_cast<double>(t), static_cast<double>(steps));
    }
    reports.push_back(renamed(check_unroll_equivalence(gradients, 0.1, betas, theta0), suffix));
  }
  return reports;
}

std::vector<CheckReport> gradients_suite() {
  const Dataset gaussians = make_synthetic_data(DataKind::TwoGaussians, 60, 3, 0.5, 3);
  const Dataset moons = make_synthetic_data(DataKind::TwoMoons, 60, 2, 0.1, 4);
  const Dataset blobs = make_synthetic_data(DataKind::MulticlassBlobs, 60, 2, 0.3, 5);
  const std::vector<Problem> problems = {
      make_quadratic(4.0, 0.1, 8),
      make_rosenbrock(4),
      make_logistic(gaussians, 0.01),
      make_mlp({2, 8, 2}, Activation::Tanh, moons, 6),
      make_mlp({2, 8, 3}, Activation::Relu, blobs, 7),
      make_scale_invariant(8),
  };
  std::vector<CheckReport> reports;
  for (const auto& problem : problems) {
    std::vector<Vector> points;
    for (std::uint64_t seed = 0; seed < 10; ++seed) points.push_back(problem.initial_point(seed));
    CheckReport report = check_gradient(problem, points);
    report.check_name = "gradient_" + problem.name();
    reports.push_back(report);
  }
  return reports;
}

void print_table(const std::vector<CheckReport>& reports, std::ostream& out) {
  std::size_t width = 5;
  for (const auto& r : reports) width = std::max(width, r.check_name.size());
  out << fmt::format("{:<{}}  {:<6}  {:>12}  {:>12}  {}\n", "check", width, "status", "max_abs", "max_rel",
                     "witness");
  for (const auto& r : reports) {
    out << fmt::format("{:<{}}  {:<6}  {:>12.3e}  {:>12.3e}  {}\n", r.check_name, width,
                       r.passed ? "PASS" : "FAIL", r.max_abs_error, r.max_rel_error, r.witness);
  }
}

struct VerifyOptions {
  std::string suite = "all";
  std::string out = ".";
  double fault = 0.0;
};

int cmd_verify(const VerifyOptions& opts, std::ostream& out) {
  const auto reports = run_verify_suite(opts.suite, opts.fault);
  const fs::path dir(opts.out);
  std::string lines;
  for (const auto& r : reports) lines += json(r).dump() + "\n";
  io([&] {
    make_output_dir(dir);
    write_text(dir / "checks.jsonl", lines);
  });
  print_table(reports, out);
  const auto failed = std::count_if(reports.begin(), reports.end(), [](const auto& r) { return !r.passed; });
  out << fmt::format("{} checks, {} failed\n", reports.size(), failed);
  return failed == 0 ? kExitOk : kExitCheckFailed;
}

// ---------------------------------------------------------------------------
// schedule

struct ScheduleOptions {
  std::vector<std::string> kinds;
  std::string spec_file;
  double init = 0.9;
  double min = 0.0;
  std::vector<double> milestones = {0.5, 0.75};
  double factor = 0.1;
  std::optional<double> k;
  std::string target;
  double total = 100.0;
  std::size_t samples = 101;
  std::string out = ".";
  bool svg = false;
};

std::vector<ScheduleSpec> schedule_specs(const ScheduleOptions& opts) {
  std::vector<ScheduleSpec> specs;
  if (!opts.spec_file.empty()) {
    if (!opts.kinds.empty()) throw UsageError("--spec-file and --kind are mutually exclusive");
    std::ifstream in(opts.spec_file, std::ios::binary);
    if (!in) throw UsageError(fmt::format("cannot read spec file '{}'", opts.spec_file));
    json j;
    try {
      j = json::parse(in);
    } catch (const json::parse_error& e) {
      throw UsageError(fmt::format("spec file '{}' is not valid JSON: {}", opts.spec_file, e.what()));
    }
    if (!j.is_array()) j = json::array({j});
    for (const auto& item : j) specs.push_back(item.get<ScheduleSpec>());
  } else {
    const std::vector<std::string> kinds = opts.kinds.empty() ? std::vector<std::string>{"demon"} : opts.kinds;
    for (const auto& name : kinds) {
      ScheduleSpec spec;
      spec.kind = parse_schedule_kind(name);
      spec.init_value = opts.init;
      spec.min_value = opts.min;
      spec.factor = opts.factor;
      spec.k = opts.k;
      if (spec.kind == ScheduleKind::Step) spec.milestones = opts.milestones;
      if (!opts.target.empty()) {
        spec.target = parse_schedule_target(opts.target);
      } else {
        const bool demon_kind = spec.kind == ScheduleKind::Demon || spec.kind == ScheduleKind::DemonTheory;
        spec.target = demon_kind ? ScheduleTarget::Momentum : ScheduleTarget::LearningRate;
      }
      spec.validate();
      specs.push_back(spec);
    }
  }
  for (const auto& spec : specs) {
    if (spec.kind == ScheduleKind::Plateau) {
      throw UsageError("plateau schedules depend on a validation metric and cannot be sampled on their own");
    }
  }
  return specs;
}

int cmd_schedule(const ScheduleOptions& opts, std::ostream& out) {
  const auto specs = schedule_specs(opts);
  if (!(opts.total > 0.0) || !std::isfinite(opts.total)) throw UsageError("-T must be positive");
  if (opts.samples < 1) throw UsageError("--samples must be at least 1");

  std::vector<std::string> names;
  for (const auto& spec : specs) {
    std::string name(to_string(spec.kind));
    const auto seen = std::count(names.begin(), names.end(), name) +
                      std::count_if(names.begin(), names.end(),
                                    [&](const std::string& n) { return n.rfind(name + "_", 0) == 0; });
    names.push_back(seen == 0 ? name : fmt::format("{}_{}", name, seen + 1));
  }

  std::vector<Series> series(specs.size());
  std::string csv = "t";
  if (specs.size() == 1) {
    csv += ",value";
  } else {
    for (const auto& name : names) csv += "," + name;
  }
  csv += "\n";
  for (std::size_t i = 0; i < opts.samples; ++i) {
    const double t = opts.samples == 1 ? 0.0
                                       : opts.total * static_cast<double>(i) / static_cast<double>(opts.samples - 1);
    csv += format_number(t);
    for (std::size_t s = 0; s < specs.size(); ++s) {
      const double v = schedule_eval(specs[s], t, opts.total);
      csv += "," + format_number(v);
      series[s].x.push_back(t);
      series[s].y.push_back(v);
    }
    csv += "\n";
  }
  for (std::size_t s = 0; s < specs.size(); ++s) series[s].name = names[s];

  const fs::path dir(opts.out);
  io([&] {
    make_output_dir(dir);
    write_text(dir / "schedule.csv", csv);
    if (opts.svg) write_text(dir / "schedule.svg", render_lines(series, "t", "value"));
  });
  out << fmt::format("{} samples of {} schedule(s) over T = {}\n", opts.samples, specs.size(),
                     format_number(opts.total));
  return kExitOk;
}

// ---------------------------------------------------------------------------
// plot

struct PlotOptions {
  std::string input;
  std::string kind = "lines";
  std::string out = "plot.svg";
};

std::string columns_of(const CsvTable& table) {
  std::string joined;
  for (const auto& h : table.header) joined += (joined.empty() ? "" : ", ") + h;
  return joined;
}

std::string plot_lines(const CsvTable& table) {
  const auto t_col = table.column("t");
  if (!t_col) {
    throw UsageError(fmt::format("lines plot needs a 't' column; found columns: {}", columns_of(table)));
  }
  std::vector<std::size_t> value_cols;
  if (const auto loss = table.column("loss")) {
    value_cols.push_back(*loss);
    if (const auto val = table.column("val_metric")) value_cols.push_back(*val);
  } else {
    for (std::size_t c = 0; c < table.header.size(); ++c) {
      if (c != *t_col) value_cols.push_back(c);
    }
  }
  if (value_cols.empty()) {
    throw UsageError(fmt::format("lines plot needs at least one value column besides 't'; found: {}",
                                 columns_of(table)));
  }
  std::vector<Series> series;
  for (std::size_t c : value_cols) {
    Series s;
    s.name = table.header[c];
    for (const auto& row : table.rows) {
      s.x.push_back(cell_number(row[*t_col]));
      s.y.push_back(cell_number(row[c]));
    }
    series.push_back(std::move(s));
  }
  return render_lines(series, "t", table.column("loss") ? "loss" : "value");
}

std::string plot_heatmap(const CsvTable& table) {
  std::vector<std::string> missing;
  for (const char* name : {"lr", "momentum", "mean_final_val"}) {
    if (!table.column(name)) missing.emplace_back(name);
  }
  if (!missing.empty()) {
    std::string list;
    for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
    throw UsageError(fmt::format("heatmap needs columns lr, momentum, mean_final_val; missing: {}; found: {}",
                                 list, columns_of(table)));
  }
  const std::size_t lr_col = *table.column("lr");
  const std::size_t mom_col = *table.column("momentum");
  const std::size_t val_col = *table.column("mean_final_val");
  std::vector<double> lrs;
  std::vector<double> moms;
  for (const auto& row : table.rows) {
    const double lr = cell_number(row[lr_col]);
    const double mom = cell_number(row[mom_col]);
    if (!std::isfinite(lr) || !std::isfinite(mom)) {
      throw UsageError(fmt::format("heatmap row has non-numeric lr '{}' or momentum '{}'", row[lr_col], row[mom_col]));
    }
    if (std::find(lrs.begin(), lrs.end(), lr) == lrs.end()) lrs.push_back(lr);
    if (std::find(moms.begin(), moms.end(), mom) == moms.end()) moms.push_back(mom);
  }
  std::vector<double> values(lrs.size() * moms.size(), std::nan(""));
  for (const auto& row : table.rows) {
    const auto i = static_cast<std::size_t>(
        std::find(lrs.begin(), lrs.end(), cell_number(row[lr_col])) - lrs.begin());
    const auto j = static_cast<std::size_t>(
        std::find(moms.begin(), moms.end(), cell_number(row[mom_col])) - moms.begin());
    values[i * moms.size() + j] = cell_number(row[val_col]);
  }
  return render_heatmap(lrs, moms, values);
}

int cmd_plot(const PlotOptions& opts, std::ostream& out) {
  if (opts.input.empty()) throw UsageError("--input is required");
  CsvTable table;
  try {
    table = read_csv(opts.input);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  } catch (const std::exception& e) {
    throw IoError(e.what());
  }
  const std::string svg = opts.kind == "heatmap" ? plot_heatmap(table) : plot_lines(table);
  const fs::path path(opts.out);
  io([&] {
    if (path.has_parent_path()) make_output_dir(path.parent_path());
    write_text(path, svg);
  });
  out << fmt::format("wrote {} ({} rows)\n", path.string(), table.rows.size());
  return kExitOk;
}

}  // namespace

std::vector<CheckReport> run_verify_suite(std::string_view suite, double fault_injection) {
  const bool all = suite == "all";
  std::vector<CheckReport> reports;
  auto append = [&](std::vector<CheckReport> more) {
    reports.insert(reports.end(), more.begin(), more.end());
  };
  if (all || suite == "lemma1") append(lemma1_suite(fault_injection));
  if (all || suite == "theorem1") append(theorem1_suite());
  if (all || suite == "unroll") append(unroll_suite());
  if (all || suite == "gradients") append(gradients_suite());
  if (all || suite == "reductions") append(check_reductions());
  if (reports.empty()) throw std::invalid_argument(fmt::format("unknown verify suite '{}'", suite));
  return reports;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Momentum-decay optimizers: training runs, grid sweeps, checks, schedules, plots"};
  app.name("demon-opt");
  app.require_subcommand(1);

  TrainOptions train;
  auto* train_cmd = app.add_subcommand("train", "Run one training configuration");
  add_config_options(train_cmd, train.config);
  train_cmd->add_option("--out", train.out, "Output directory");

  GridOptions grid;
  auto* grid_cmd = app.add_subcommand("grid", "Sweep learning rate x momentum over several seeds");
  add_config_options(grid_cmd, grid.config);
  grid_cmd->add_option("--out", grid.out, "Output directory");
  grid_cmd->add_option("--lr-grid", grid.lr_grid, "Learning rates (default: lr * 3^k, k = -2..2)")
      ->delimiter(',');
  grid_cmd->add_option("--momentum-grid", grid.momentum_grid, "Momentum values (default: 0.9,0.95,0.97)")
      ->delimiter(',');
  grid_cmd->add_option("--seeds", grid.seeds, "Seeds (default: seed, seed+1, seed+2)")->delimiter(',');
  grid_cmd->add_option("--workers", grid.workers, "Parallel workers")->check(CLI::PositiveNumber);
  grid_cmd->add_flag("--no-heatmap", grid.no_heatmap, "Skip heatmap.svg");

  VerifyOptions verify;
  auto* verify_cmd = app.add_subcommand("verify", "Run the numerical verification suites");
  verify_cmd->add_option("--suite", verify.suite, "all, lemma1, theorem1, unroll, gradients, reductions")
      ->check(CLI::IsMember({"all", "lemma1", "theorem1", "unroll", "gradients", "reductions"}));
  verify_cmd->add_option("--out", verify.out, "Output directory");
  verify_cmd->add_option("--inject-fault", verify.fault)->group("");

  ScheduleOptions schedule;
  auto* schedule_cmd = app.add_subcommand("schedule", "Sample one or more schedules");
  schedule_cmd->add_option("--kind", schedule.kinds, "Schedule kind(s), comma separated (default: demon)")
      ->delimiter(',');
  schedule_cmd->add_option("--spec-file", schedule.spec_file, "JSON schedule spec or array of specs");
  schedule_cmd->add_option("--init", schedule.init, "Initial value");
  schedule_cmd->add_option("--min", schedule.min, "Floor value");
  schedule_cmd->add_option("--milestones", schedule.milestones, "Step milestones as fractions of T")
      ->delimiter(',');
  schedule_cmd->add_option("--factor", schedule.factor, "Step decay factor");
  schedule_cmd->add_option("--k", schedule.k, "Exponential rate (default -5/T)");
  schedule_cmd->add_option("--target", schedule.target, "lr or momentum");
  schedule_cmd->add_option("-T,--total", schedule.total, "Horizon T");
  schedule_cmd->add_option("--samples", schedule.samples, "Evenly spaced samples over [0, T]");
  schedule_cmd->add_option("--out", schedule.out, "Output directory");
  schedule_cmd->add_flag("--svg", schedule.svg, "Also write schedule.svg");

  PlotOptions plot;
  auto* plot_cmd = app.add_subcommand("plot", "Render a trace, schedule, or grid CSV as SVG");
  plot_cmd->add_option("--input", plot.input, "CSV file");
  plot_cmd->add_option("--kind", plot.kind, "lines or heatmap")->check(CLI::IsMember({"lines", "heatmap"}));
  plot_cmd->add_option("--out", plot.out, "Output SVG path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*train_cmd) return cmd_train(train, out);
    if (*grid_cmd) return cmd_grid(grid, out);
    if (*verify_cmd) return cmd_verify(verify, out);
    if (*schedule_cmd) return cmd_schedule(schedule, out);
    if (*plot_cmd) return cmd_plot(plot, out);
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace demon::cli
