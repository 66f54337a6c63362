// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "demon/harness.hpp"
#include "testing.hpp"

using namespace demon;
using demon::testing::TempDir;
using nlohmann::json;

namespace {

RunConfig quadratic_sgd(double eta, std::uint64_t T) {
  RunConfig c;
  c.problem_spec.generator = ProblemKind::Quadratic;
  c.problem_spec.dim = 1;
  c.problem_spec.L = 1.0;
  c.problem_spec.mu = 1.0;
  c.optimizer = OptimizerKind::SGD;
  c.lr_schedule = constant_schedule(eta, ScheduleTarget::LearningRate);
  c.T = T;
  return c;
}

RunConfig logistic_sgdm() {
  RunConfig c;
  c.problem_spec.generator = ProblemKind::Logistic;
  c.problem_spec.data = DataKind::TwoMoons;
  c.problem_spec.n = 120;
  c.optimizer = OptimizerKind::SGDM;
  c.lr_schedule = constant_schedule(0.3, ScheduleTarget::LearningRate);
  c.T = 60;
  return c;
}

RunConfig small_mlp(OptimizerKind opt) {
  RunConfig c;
  c.problem_spec.generator = ProblemKind::Mlp;
  c.problem_spec.n = 100;
  c.problem_spec.hidden = {8};
  c.problem_spec.noise = 0.2;
  c.optimizer = opt;
  c.lr_schedule = constant_schedule(0.05, ScheduleTarget::LearningRate);
  c.T = 200;
  return c;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

GridCell fixture_cell(double lr, double m, double val) {
  GridCell c;
  c.lr = lr;
  c.momentum = m;
  c.seeds = {0};
  c.final_val = {val};
  c.final_train_loss = {val};
  c.best_val = {val};
  c.mean_final_val = c.mean_final_train = c.mean_best_val = val;
  if (!std::isfinite(val)) c.diverged_count = 1;
  return c;
}

}  // namespace

TEST_SUITE("run_training") {
  TEST_CASE("SGD on a 1-D quadratic decays geometrically") {
    const Trace tr = run_training(quadratic_sgd(0.5, 50));
    REQUIRE(tr.records.size() == 51);
    CHECK_FALSE(tr.diverged);
    const double loss0 = tr.records[0].loss;
    for (const auto& r : tr.records) {
      const double expected = loss0 * std::pow(0.25, static_cast<double>(r.t));
      CHECK(std::abs(r.loss - expected) <= 1e-10 * std::max(expected, 1e-300) + 1e-300);
    }
  }

  TEST_CASE("huge step marks divergence without throwing") {
    const Trace tr = run_training(quadratic_sgd(3.0, 500));
    CHECK(tr.diverged);
    CHECK(tr.records.size() < 501);
  }

  TEST_CASE("recorded beta and eta match direct schedule evaluation") {
    RunConfig c = small_mlp(OptimizerKind::DemonSGDM);
    c.beta_init = 0.93;
    c.lr_schedule.kind = ScheduleKind::Cosine;
    c.lr_schedule.min_value = 0.001;
    const Trace tr = run_training(c);
    REQUIRE(tr.records.size() == 201);
    for (const auto& r : tr.records) {
      CHECK(r.beta_t == demon_beta(static_cast<double>(r.t), 200.0, 0.93));
      CHECK(r.eta_t == schedule_eval(c.lr_schedule, static_cast<double>(r.t), 200.0));
    }
  }

  TEST_CASE("momentum schedules drive SGDM") {
    RunConfig c = small_mlp(OptimizerKind::SGDM);
    ScheduleSpec m;
    m.kind = ScheduleKind::OneCycle;
    m.init_value = 0.95;
    m.min_value = 0.85;
    m.target = ScheduleTarget::Momentum;
    c.momentum_schedule = m;
    const Trace tr = run_training(c);
    for (const auto& r : tr.records) CHECK(r.beta_t == schedule_eval(m, static_cast<double>(r.t), 200.0));
  }

  TEST_CASE("mini-batches: T counts updates and validation is logged per epoch") {
    RunConfig c = logistic_sgdm();
    c.T = 0;
    c.epochs = 4;
    c.batch_size = 25;
    const RunConfig resolved = resolve_config(c);
    // 120 rows, 24 held out, 96 train rows -> 4 batches per epoch.
    CHECK(resolved.T == 16);
    const Trace tr = run_training(c);
    REQUIRE(tr.records.size() == 17);
    for (const auto& r : tr.records) CHECK(r.val_metric.has_value() == (r.t % 4 == 0));
  }

  TEST_CASE("plateau learning rate only changes by the factor") {
    RunConfig c = logistic_sgdm();
    c.lr_schedule.kind = ScheduleKind::Plateau;
    c.lr_schedule.init_value = 5.0;
    c.lr_schedule.patience = 1;
    c.lr_schedule.factor = 0.5;
    c.T = 200;
    const Trace tr = run_training(c);
    for (std::size_t i = 1; i < tr.records.size(); ++i) {
      const double prev = tr.records[i - 1].eta_t;
      const double cur = tr.records[i].eta_t;
      CHECK((cur == prev || cur == prev * 0.5));
    }
  }

  TEST_CASE("full-vector recording") {
    RunConfig c = quadratic_sgd(0.1, 5);
    c.record_full_vectors = true;
    const Trace tr = run_training(c);
    CHECK(tr.thetas.size() == 6);
    CHECK(tr.velocities.size() == 6);
  }

  TEST_CASE("runs are deterministic") {
    const RunConfig c = small_mlp(OptimizerKind::DemonAdam);
    CHECK(run_training(c).records == run_training(c).records);
  }
}

TEST_SUITE("config") {
  TEST_CASE("exactly one momentum source") {
    RunConfig c = small_mlp(OptimizerKind::DemonSGDM);
    c.momentum_schedule = constant_schedule(0.9, ScheduleTarget::Momentum);
    CHECK_THROWS_WITH_AS(resolve_config(c), doctest::Contains("momentum_schedule"), std::invalid_argument);
    RunConfig d = small_mlp(OptimizerKind::SGDM);
    d.beta_init = 0.9;
    CHECK_THROWS_WITH_AS(resolve_config(d), doctest::Contains("beta_init"), std::invalid_argument);
  }

  TEST_CASE("inconsistent T and epochs") {
    RunConfig c = logistic_sgdm();
    c.batch_size = 25;
    c.epochs = 4;
    c.T = 10;
    CHECK_THROWS_WITH_AS(resolve_config(c), doctest::Contains("'T'"), std::invalid_argument);
  }

  TEST_CASE("mini-batches need data") {
    RunConfig c = quadratic_sgd(0.1, 10);
    c.batch_size = 4;
    CHECK_THROWS_AS(resolve_config(c), std::invalid_argument);
  }

  TEST_CASE("json round trip and unknown keys") {
    RunConfig c = small_mlp(OptimizerKind::Adam);
    c.momentum_schedule = constant_schedule(0.95, ScheduleTarget::Momentum);
    c.weight_decay = 1e-4;
    const json j = c;
    CHECK(json::parse(j.dump()).get<RunConfig>() == c);
    json bad = j;
    bad["learning_rate"] = 0.1;
    CHECK_THROWS_WITH_AS(bad.get<RunConfig>(), doctest::Contains("learning_rate"), std::invalid_argument);
    json nested = j;
    nested["problem_spec"]["width"] = 3;
    CHECK_THROWS_WITH_AS(nested.get<RunConfig>(), doctest::Contains("width"), std::invalid_argument);
  }

  TEST_CASE("overrides: dotted paths, shorthands, last writer wins") {
    json j = small_mlp(OptimizerKind::SGDM);
    apply_override(j, "lr=0.03");
    apply_override(j, "problem_spec.hidden=[4,4]");
    apply_override(j, "momentum=0.95");
    apply_override(j, "seed=3");
    apply_override(j, "seed=4");
    const RunConfig c = j.get<RunConfig>();
    CHECK(c.lr_schedule.init_value == 0.03);
    CHECK(c.problem_spec.hidden == std::vector<std::size_t>{4, 4});
    CHECK(c.momentum_schedule->init_value == 0.95);
    CHECK(c.seed == 4);

    json d = small_mlp(OptimizerKind::DemonSGDM);
    d["optimizer"] = "demonsgdm";
    apply_override(d, "momentum=0.8");
    CHECK(d.get<RunConfig>().beta_init == 0.8);
    CHECK_THROWS(apply_override(d, "novalue"));
  }

  TEST_CASE("validation split is disjoint and exhaustive") {
    ProblemSpec spec;
    spec.generator = ProblemKind::Logistic;
    spec.n = 150;
    const ProblemInstance inst = build_problem(spec, 0);
    REQUIRE(inst.validation.has_value());
    CHECK(inst.train.num_samples() + inst.validation->num_samples() == 150);
    CHECK(inst.validation->num_samples() == 30);
  }
}

TEST_SUITE("grid") {
  TEST_CASE("1x1 grid reduces to a single run") {
    const RunConfig base = logistic_sgdm();
    const GridResult g = grid_search(base, {0.3}, {0.9}, {5});
    RunConfig single = base;
    single.seed = 5;
    const Trace tr = run_training(single);
    REQUIRE(g.cells.size() == 1);
    CHECK(g.cells[0].final_train_loss[0] == tr.records.back().loss);
    CHECK(g.cells[0].final_val[0] == *tr.records.back().val_metric);
  }

  TEST_CASE("3x3 logistic grid: finite cells, CSV rows, determinism across workers") {
    TempDir dir("grid");
    const RunConfig base = logistic_sgdm();
    const auto lrs = lr_grid_multiples_of_three(0.1, -1, 1);
    CHECK(lrs[0] == doctest::Approx(0.1 / 3));
    CHECK(lrs[2] == doctest::Approx(0.3));
    const GridResult a = grid_search(base, lrs, {0.9, 0.95, 0.97}, {0, 1}, 1);
    const GridResult b = grid_search(base, lrs, {0.9, 0.95, 0.97}, {0, 1}, 4);
    REQUIRE(a.cells.size() == 9);
    for (const auto& c : a.cells) CHECK(std::isfinite(c.mean_final_val));
    CHECK(a == b);
    emit_results(a, dir.path() / "a.csv", OutputFormat::Csv);
    emit_results(b, dir.path() / "b.csv", OutputFormat::Csv);
    const std::string csv = slurp(dir.path() / "a.csv");
    CHECK(csv == slurp(dir.path() / "b.csv"));
    CHECK(count_lines(csv) == 10);
    CHECK(csv.substr(0, csv.find('\n')) == "lr,momentum,mean_final_val,std_final_val,diverged_count,n_seeds");
  }

  TEST_CASE("aggregation: mean and population std over seeds") {
    const GridResult g = grid_search(logistic_sgdm(), {0.3}, {0.9}, {0, 1, 2});
    const auto& c = g.cells[0];
    const double mean = (c.final_val[0] + c.final_val[1] + c.final_val[2]) / 3.0;
    double var = 0.0;
    for (double v : c.final_val) var += (v - mean) * (v - mean);
    CHECK(c.mean_final_val == doctest::Approx(mean).epsilon(1e-14));
    CHECK(c.std_final_val == doctest::Approx(std::sqrt(var / 3.0)).epsilon(1e-12));
  }

  TEST_CASE("diverged cells are marked, not dropped") {
    const GridResult g = grid_search(quadratic_sgd(0.5, 300), {0.5, 3.0}, {0.0}, {0});
    CHECK_FALSE(g.cell(0, 0).diverged());
    CHECK(g.cell(1, 0).diverged());
    CHECK(std::isnan(g.cell(1, 0).mean_final_val));
  }

  TEST_CASE("best cell and tie rule") {
    GridResult single;
    single.lr_values = {0.1};
    single.momentum_values = {0.9};
    single.cells = {fixture_cell(0.1, 0.9, 0.5)};
    CHECK(best_cell(single) == std::pair{0.1, 0.9});

    GridResult tie;
    tie.lr_values = {0.01, 0.03};
    tie.momentum_values = {0.9};
    tie.cells = {fixture_cell(0.01, 0.9, 0.2), fixture_cell(0.03, 0.9, 0.2)};
    CHECK(best_cell(tie).first == 0.01);

    GridResult fixture;
    fixture.lr_values = {0.01, 0.03, 0.1};
    fixture.momentum_values = {0.9, 0.95};
    const double nan = std::numeric_limits<double>::quiet_NaN();
    const double vals[] = {0.5, 0.4, 0.3, 0.12, nan, 0.13};
    for (int i = 0; i < 6; ++i) fixture.cells.push_back(fixture_cell(fixture.lr_values[i / 2], fixture.momentum_values[i % 2], vals[i]));
    CHECK(best_cell(fixture) == std::pair{0.03, 0.95});
    CHECK(cells_within(fixture, 1.1) == 2);

    GridResult dead;
    dead.lr_values = {0.1};
    dead.momentum_values = {0.9};
    dead.cells = {fixture_cell(0.1, 0.9, nan)};
    CHECK_THROWS(best_cell(dead));
  }

  TEST_CASE("with_hyperparameters targets the optimizer's momentum source") {
    RunConfig c = small_mlp(OptimizerKind::DemonSGDM);
    c.lr_schedule.kind = ScheduleKind::Cosine;
    c.lr_schedule.min_value = 0.005;
    const RunConfig d = with_hyperparameters(c, 0.5, 0.97);
    CHECK(d.beta_init == 0.97);
    CHECK(d.lr_schedule.init_value == 0.5);
    CHECK(d.lr_schedule.min_value == doctest::Approx(0.05));
    const RunConfig s = with_hyperparameters(small_mlp(OptimizerKind::SGDM), 0.2, 0.95);
    CHECK(s.momentum_schedule->init_value == 0.95);
  }
}

TEST_SUITE("elr") {
  TEST_CASE("m = 0 gives identical arms") {
    RunConfig c = small_mlp(OptimizerKind::SGDM);
    c.momentum_schedule = constant_schedule(0.0, ScheduleTarget::Momentum);
    const ElrComparison e = elr_comparison(c, 0.0);
    REQUIRE(e.momentum_trace.records.size() == e.sgd_trace.records.size());
    for (std::size_t i = 0; i < e.sgd_trace.records.size(); ++i) {
      CHECK(std::abs(e.momentum_trace.records[i].loss - e.sgd_trace.records[i].loss) <= 1e-14);
    }
  }

  TEST_CASE("m = 0.9 scales the SGD learning rate by ten") {
    RunConfig c = small_mlp(OptimizerKind::DemonSGDM);
    c.lr_schedule.init_value = 0.01;
    const ElrComparison e = elr_comparison(c, 0.9);
    CHECK(e.sgd_arm.lr_schedule.init_value == doctest::Approx(0.1).epsilon(1e-15));
    CHECK(e.sgd_arm.optimizer == OptimizerKind::SGD);
    CHECK(e.sgd_arm.seed == e.momentum_arm.seed);
    CHECK(e.sgd_arm.problem_spec == e.momentum_arm.problem_spec);
    CHECK(e.sgd_arm.batch_size == e.momentum_arm.batch_size);
    CHECK(e.momentum_trace.records.back().loss != e.sgd_trace.records.back().loss);
  }

  TEST_CASE("m >= 1 rejected") { CHECK_THROWS(elr_comparison(small_mlp(OptimizerKind::SGDM), 1.0)); }
}

TEST_SUITE("results io") {
  TEST_CASE("empty trace writes the header only") {
    TempDir dir("io");
    emit_results(Trace{}, dir.path() / "t.csv", OutputFormat::Csv);
    CHECK(slurp(dir.path() / "t.csv") == "t,loss,val_metric,beta_t,eta_t,theta_norm_sq,v_norm_sq,grad_norm\n");
  }

  TEST_CASE("blank validation metric off-epoch") {
    TempDir dir("io");
    RunConfig c = logistic_sgdm();
    c.T = 0;
    c.epochs = 1;
    c.batch_size = 48;
    emit_results(run_training(c), dir.path() / "t.csv", OutputFormat::Csv);
    const std::string csv = slurp(dir.path() / "t.csv");
    const auto second_row = csv.substr(csv.find('\n', csv.find('\n') + 1) + 1);
    CHECK(second_row.find(",,") != std::string::npos);
  }

  TEST_CASE("jsonl round trips and rewriting is idempotent") {
    TempDir dir("io");
    const Trace tr = run_training(small_mlp(OptimizerKind::SGDM));
    emit_results(tr, dir.path() / "t.jsonl", OutputFormat::Jsonl);
    const std::string first = slurp(dir.path() / "t.jsonl");
    CHECK(read_trace_jsonl(dir.path() / "t.jsonl") == tr.records);
    emit_results(tr, dir.path() / "t.jsonl", OutputFormat::Jsonl);
    CHECK(slurp(dir.path() / "t.jsonl") == first);

    const GridResult g = grid_search(logistic_sgdm(), {0.1, 0.3}, {0.9, 0.95}, {0, 1});
    emit_results(g, dir.path() / "g.jsonl", OutputFormat::Jsonl);
    CHECK(read_grid_jsonl(dir.path() / "g.jsonl") == g);
  }

  TEST_CASE("I/O failures carry the path") {
    CHECK_THROWS_WITH(emit_results(Trace{}, "/nonexistent-dir/x/t.csv", OutputFormat::Csv),
                      doctest::Contains("/nonexistent-dir/x/t.csv"));
    CHECK_THROWS_WITH(read_trace_jsonl("/nonexistent-dir/t.jsonl"), doctest::Contains("/nonexistent-dir/t.jsonl"));
  }

  TEST_CASE("number format round trips") {
    for (double x : {0.1, 1.0 / 3.0, 1e-300, 123456789.0, -2.5e-7}) CHECK(std::stod(format_number(x)) == x);
  }
}
