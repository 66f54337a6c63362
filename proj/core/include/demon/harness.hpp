// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "demon/problems.hpp"
#include "demon/schedules.hpp"
#include "demon/verify.hpp"

namespace demon {

enum class OptimizerKind { SGD, SGDM, Adam, DemonSGDM, DemonAdam };

std::string_view to_string(OptimizerKind kind);
OptimizerKind parse_optimizer_kind(std::string_view name);

enum class ProblemKind { Quadratic, Rosenbrock, Logistic, Mlp, ScaleInvariant };

std::string_view to_string(ProblemKind kind);
ProblemKind parse_problem_kind(std::string_view name);

/// Generator and parameters for the problem of a run. Only the fields that
/// the generator reads are meaningful.
struct ProblemSpec {
  ProblemKind generator = ProblemKind::Quadratic;
  std::size_t dim = 8;
  double L = 1.0;
  double mu = 0.1;
  DataKind data = DataKind::TwoMoons;
  std::size_t n = 200;
  std::size_t d = 2;
  double noise = 0.1;
  std::uint64_t data_seed = 0;
  std::vector<std::size_t> hidden = {16};
  Activation activation = Activation::Tanh;
  double l2 = 0.0;

  bool uses_data() const {
    return generator == ProblemKind::Logistic || generator == ProblemKind::Mlp;
  }
  friend bool operator==(const ProblemSpec&, const ProblemSpec&) = default;
};

/// Full description of one training run.
///
/// The momentum comes from exactly one source: `beta_init` for the Demon
/// optimizers, `momentum_schedule` for SGDM and Adam, none for SGD.
/// resolve_config fills a missing source with 0.9 (constant for SGDM/Adam).
/// When `batch_size` is 0 every iteration is a full-batch epoch and
/// T = epochs; otherwise T = epochs * ceil(n_train / batch_size).
struct RunConfig {
  ProblemSpec problem_spec;
  OptimizerKind optimizer = OptimizerKind::SGDM;
  ScheduleSpec lr_schedule = constant_schedule(0.01, ScheduleTarget::LearningRate);
  std::optional<ScheduleSpec> momentum_schedule;
  std::optional<double> beta_init;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t T = 0;
  std::uint64_t epochs = 0;
  std::size_t batch_size = 0;
  double weight_decay = 0.0;
  double clip_norm = 0.0;
  std::uint64_t seed = 0;
  bool record_full_vectors = false;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

/// Problems built from a ProblemSpec: the training objective, and for
/// data-backed problems the objective on the held-out 20%.
struct ProblemInstance {
  Problem train;
  std::optional<Problem> validation;
};

ProblemInstance build_problem(const ProblemSpec& spec, std::uint64_t seed);

/// Fills T or epochs from the other and checks every invariant; throws
/// std::invalid_argument naming the offending field.
RunConfig resolve_config(RunConfig config);

/// Learning rate of a config (the lr schedule's initial value).
double config_lr(const RunConfig& config);
/// Initial momentum of a config: beta_init, the momentum schedule's initial
/// value, or 0 for SGD.
double config_momentum(const RunConfig& config);

void to_json(nlohmann::json& j, const ProblemSpec& spec);
void from_json(const nlohmann::json& j, ProblemSpec& spec);
void to_json(nlohmann::json& j, const RunConfig& config);
/// Rejects unknown keys at every level.
void from_json(const nlohmann::json& j, RunConfig& config);

/// Applies a dotted-path override such as "lr_schedule.init_value=0.03".
/// `lr` and `momentum` are shorthands for the learning rate and the
/// optimizer's momentum source. The value is parsed as JSON when possible and
/// as a string otherwise.
void apply_override(nlohmann::json& config, const std::string& assignment);

/// Executes the run. Divergence (non-finite loss or ||theta|| > 1e12) ends the
/// run early with `diverged` set; it is not an error.
Trace run_training(const RunConfig& config);

struct GridCell {
  double lr = 0.0;
  double momentum = 0.0;
  std::vector<std::uint64_t> seeds;
  std::vector<double> final_train_loss;
  std::vector<double> final_val;
  std::vector<double> best_val;
  double mean_final_train = 0.0;
  double mean_final_val = 0.0;
  double std_final_val = 0.0;
  double mean_best_val = 0.0;
  std::size_t diverged_count = 0;

  /// A cell is diverged when any of its seeds diverged; its means are NaN.
  bool diverged() const { return diverged_count > 0; }

  friend bool operator==(const GridCell&, const GridCell&) = default;
};

/// Cells are stored lr-major: cell(i, j) = cells[i * momentum_values.size() + j].
struct GridResult {
  std::vector<double> lr_values;
  std::vector<double> momentum_values;
  std::vector<GridCell> cells;

  const GridCell& cell(std::size_t lr_index, std::size_t momentum_index) const {
    return cells[lr_index * momentum_values.size() + momentum_index];
  }

  friend bool operator==(const GridResult&, const GridResult&) = default;
};

/// Applies (lr, momentum) to a config, scaling any lr floor proportionally.
RunConfig with_hyperparameters(RunConfig config, double lr, double momentum);

/// Runs every (lr, momentum, seed) combination on up to `workers` threads.
/// The result does not depend on the worker count.
GridResult grid_search(const RunConfig& base, const std::vector<double>& lr_values,
                       const std::vector<double>& momentum_values,
                       const std::vector<std::uint64_t>& seeds, std::size_t workers = 1);

/// Geometric learning-rate axis base * 3^k for k in [k_min, k_max].
std::vector<double> lr_grid_multiples_of_three(double base, int k_min, int k_max);

/// Lowest mean final validation metric among non-diverged cells; ties go to
/// the smaller lr, then the smaller momentum. Throws if every cell diverged.
std::pair<double, double> best_cell(const GridResult& result);

/// Number of non-diverged cells whose mean final validation metric is within
/// `ratio` times the best cell's.
std::size_t cells_within(const GridResult& result, double ratio);

struct ElrComparison {
  RunConfig momentum_arm;
  RunConfig sgd_arm;
  Trace momentum_trace;
  Trace sgd_trace;
};

/// Arm A runs `config` as given; arm B is plain SGD with the learning rate
/// scaled by 1 / (1 - m). Both share problem, seed, and data order.
ElrComparison elr_comparison(const RunConfig& config, double m);

enum class OutputFormat { Csv, Jsonl };

/// Trace CSV columns: t, loss, val_metric, beta_t, eta_t, theta_norm_sq,
/// v_norm_sq, grad_norm (val_metric blank off-epoch).
void emit_results(const Trace& trace, const std::filesystem::path& path, OutputFormat format);
/// Grid CSV columns: lr, momentum, mean_final_val, std_final_val,
/// diverged_count, n_seeds. JSONL rows carry every GridCell field.
void emit_results(const GridResult& result, const std::filesystem::path& path, OutputFormat format);

std::vector<TraceRecord> read_trace_jsonl(const std::filesystem::path& path);
GridResult read_grid_jsonl(const std::filesystem::path& path);

/// Shortest round-trip decimal form used by every emitted file.
std::string format_number(double value);

}  // namespace demon
