// SPDX-License-Identifier: Apache-2.0
#include "demon/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <thread>

#include <fmt/format.h>

#include "demon/optimizers.hpp"

namespace demon {
namespace {

constexpr double kDivergenceNorm = 1e12;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double norm_sq(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

struct RunSummary {
  double final_train = kNaN;
  double final_val = kNaN;
  double best_val = kNaN;
  bool diverged = false;
};

RunSummary summarize(const Trace& trace) {
  RunSummary s;
  s.diverged = trace.diverged;
  if (trace.diverged || trace.records.empty()) return s;
  s.final_train = trace.records.back().loss;
  double best = std::numeric_limits<double>::infinity();
  for (const auto& rec : trace.records) {
    if (rec.val_metric) {
      s.final_val = *rec.val_metric;
      best = std::min(best, *rec.val_metric);
    }
  }
  s.best_val = best;
  return s;
}

double mean_of(const std::vector<double>& xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

double population_std(const std::vector<double>& xs, double mean) {
  double s = 0.0;
  for (double x : xs) s += (x - mean) * (x - mean);
  return std::sqrt(s / static_cast<double>(xs.size()));
}

}  // namespace

Trace run_training(const RunConfig& input) {
  const RunConfig config = resolve_config(input);
  const ProblemInstance instance = build_problem(config.problem_spec, config.seed);
  const Problem& problem = instance.train;

  const std::uint64_t total = config.T;
  const double horizon = static_cast<double>(std::max<std::uint64_t>(total, 1));
  const bool minibatch = config.batch_size > 0;
  const std::size_t n_train = problem.num_samples();
  const std::uint64_t per_epoch =
      minibatch ? (n_train + config.batch_size - 1) / config.batch_size : 1;

  std::optional<PlateauState> lr_plateau;
  if (config.lr_schedule.kind == ScheduleKind::Plateau) {
    lr_plateau = plateau_initial_state(config.lr_schedule.init_value);
  }
  std::optional<PlateauState> momentum_plateau;
  if (config.momentum_schedule && config.momentum_schedule->kind == ScheduleKind::Plateau) {
    momentum_plateau = plateau_initial_state(config.momentum_schedule->init_value);
  }

  auto validation_metric = [&](std::span<const double> theta) {
    return instance.validation ? instance.validation->eval(theta) : problem.eval(theta);
  };

  StepHyper hyper;
  hyper.beta2 = config.beta2;
  hyper.epsilon = config.epsilon;
  hyper.weight_decay = config.weight_decay;
  hyper.clip_norm = config.clip_norm;

  Trace trace;
  trace.scale_invariant_problem = problem.scale_invariant;
  OptimizerState state(problem.initial_point(config.seed));
  std::vector<std::size_t> order;

  for (std::uint64_t t = 0; t <= total; ++t) {
    const std::uint64_t epoch = t / per_epoch;
    const std::uint64_t position = t % per_epoch;
    const double time = static_cast<double>(t);

    TraceRecord rec;
    rec.t = t;
    rec.loss = problem.eval(state.theta);
    rec.theta_norm_sq = norm_sq(state.theta);
    rec.v_norm_sq = norm_sq(config.optimizer == OptimizerKind::DemonAdam ? state.accumulator
                                                                        : state.velocity);
    const bool diverged = !std::isfinite(rec.loss) || !(std::sqrt(rec.theta_norm_sq) <= kDivergenceNorm);

    if (position == 0 && !diverged) {
      const double metric = validation_metric(state.theta);
      rec.val_metric = metric;
      if (t > 0 && std::isfinite(metric)) {
        if (lr_plateau) {
          *lr_plateau = plateau_update(*lr_plateau, metric, config.lr_schedule.patience,
                                       config.lr_schedule.factor);
        }
        if (momentum_plateau) {
          *momentum_plateau = plateau_update(*momentum_plateau, metric,
                                             config.momentum_schedule->patience,
                                             config.momentum_schedule->factor);
        }
      }
    }

    rec.eta_t = schedule_eval(config.lr_schedule, time, horizon, lr_plateau ? &*lr_plateau : nullptr);
    switch (config.optimizer) {
      case OptimizerKind::SGD:
        rec.beta_t = 0.0;
        break;
      case OptimizerKind::SGDM:
      case OptimizerKind::Adam:
        rec.beta_t = schedule_eval(*config.momentum_schedule, time, horizon,
                                   momentum_plateau ? &*momentum_plateau : nullptr);
        break;
      case OptimizerKind::DemonSGDM:
      case OptimizerKind::DemonAdam:
        rec.beta_t = demon_beta(time, horizon, *config.beta_init);
        break;
    }

    auto finish = [&](bool mark_diverged) {
      trace.records.push_back(rec);
      if (config.record_full_vectors) {
        trace.thetas.push_back(state.theta);
        trace.velocities.push_back(config.optimizer == OptimizerKind::DemonAdam ? state.accumulator
                                                                                : state.velocity);
      }
      trace.diverged = mark_diverged;
    };

    if (diverged) {
      finish(true);
      break;
    }

    Vector g;
    if (minibatch) {
      if (position == 0) order = epoch_order(n_train, config.seed, epoch);
      const std::size_t begin = static_cast<std::size_t>(position) * config.batch_size;
      const std::size_t end = std::min(begin + config.batch_size, n_train);
      const std::span<const std::size_t> rows(order.data() + begin, end - begin);
      g = t < total ? problem.grad_rows(state.theta, rows) : problem.grad(state.theta);
    } else {
      g = problem.grad(state.theta);
    }
    rec.grad_norm = std::sqrt(norm_sq(g));
    if (t == total) {
      finish(false);
      break;
    }
    finish(false);

    hyper.eta = rec.eta_t;
    hyper.beta = rec.beta_t;
    try {
      switch (config.optimizer) {
        case OptimizerKind::SGD:
          state = sgd_step(std::move(state), g, hyper);
          break;
        case OptimizerKind::SGDM:
          state = sgdm_step(std::move(state), g, hyper);
          break;
        case OptimizerKind::Adam:
          state = adam_step(std::move(state), g, hyper);
          break;
        case OptimizerKind::DemonSGDM:
          state = demon_sgdm_step(std::move(state), g, rec.eta_t, *config.beta_init, t, total, hyper);
          break;
        case OptimizerKind::DemonAdam:
          state = demon_adam_step(std::move(state), g, rec.eta_t, *config.beta_init, t, total, hyper);
          break;
      }
    } catch (const OptimizerError&) {
      // Overflowing gradients are divergence, not a configuration error.
      trace.diverged = true;
      break;
    }
  }
  return trace;
}

RunConfig with_hyperparameters(RunConfig config, double lr, double momentum) {
  ScheduleSpec& lr_spec = config.lr_schedule;
  if (lr_spec.min_value > 0.0 && lr_spec.init_value > 0.0) {
    lr_spec.min_value *= lr / lr_spec.init_value;
  }
  lr_spec.init_value = lr;
  switch (config.optimizer) {
    case OptimizerKind::SGD:
      break;
    case OptimizerKind::DemonSGDM:
    case OptimizerKind::DemonAdam:
      config.beta_init = momentum;
      break;
    case OptimizerKind::SGDM:
    case OptimizerKind::Adam:
      if (!config.momentum_schedule) {
        config.momentum_schedule = constant_schedule(momentum, ScheduleTarget::Momentum);
      }
      config.momentum_schedule->init_value = momentum;
      config.momentum_schedule->min_value = std::min(config.momentum_schedule->min_value, momentum);
      break;
  }
  return config;
}

GridResult grid_search(const RunConfig& base, const std::vector<double>& lr_values,
                       const std::vector<double>& momentum_values,
                       const std::vector<std::uint64_t>& seeds, std::size_t workers) {
  if (lr_values.empty() || momentum_values.empty() || seeds.empty()) {
    throw std::invalid_argument("grid_search: axes and seed list must be non-empty");
  }
  const std::size_t n_cells = lr_values.size() * momentum_values.size();
  const std::size_t n_jobs = n_cells * seeds.size();
  std::vector<RunSummary> summaries(n_jobs);

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t job = next++; job < n_jobs; job = next++) {
      const std::size_t cell = job / seeds.size();
      const std::size_t seed_index = job % seeds.size();
      try {
        RunConfig config = with_hyperparameters(base, lr_values[cell / momentum_values.size()],
                                                momentum_values[cell % momentum_values.size()]);
        config.seed = seeds[seed_index];
        config.record_full_vectors = false;
        summaries[job] = summarize(run_training(config));
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };

  const std::size_t threads = std::clamp<std::size_t>(workers, 1, n_jobs);
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t i = 0; i < threads; ++i) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  GridResult result;
  result.lr_values = lr_values;
  result.momentum_values = momentum_values;
  result.cells.resize(n_cells);
  for (std::size_t c = 0; c < n_cells; ++c) {
    GridCell& cell = result.cells[c];
    cell.lr = lr_values[c / momentum_values.size()];
    cell.momentum = momentum_values[c % momentum_values.size()];
    cell.seeds = seeds;
    for (std::size_t s = 0; s < seeds.size(); ++s) {
      const RunSummary& run = summaries[c * seeds.size() + s];
      cell.final_train_loss.push_back(run.final_train);
      cell.final_val.push_back(run.final_val);
      cell.best_val.push_back(run.best_val);
      if (run.diverged || !std::isfinite(run.final_val)) ++cell.diverged_count;
    }
    if (cell.diverged()) {
      cell.mean_final_train = cell.mean_final_val = cell.std_final_val = cell.mean_best_val = kNaN;
    } else {
      cell.mean_final_train = mean_of(cell.final_train_loss);
      cell.mean_final_val = mean_of(cell.final_val);
      cell.std_final_val = population_std(cell.final_val, cell.mean_final_val);
      cell.mean_best_val = mean_of(cell.best_val);
    }
  }
  return result;
}

std::vector<double> lr_grid_multiples_of_three(double base, int k_min, int k_max) {
  if (k_min > k_max) throw std::invalid_argument("lr grid: k_min > k_max");
  std::vector<double> values;
  for (int k = k_min; k <= k_max; ++k) values.push_back(base * std::pow(3.0, k));
  return values;
}

std::pair<double, double> best_cell(const GridResult& result) {
  const GridCell* best = nullptr;
  for (const auto& cell : result.cells) {
    if (cell.diverged() || !std::isfinite(cell.mean_final_val)) continue;
    if (best == nullptr || cell.mean_final_val < best->mean_final_val ||
        (cell.mean_final_val == best->mean_final_val &&
         (cell.lr < best->lr || (cell.lr == best->lr && cell.momentum < best->momentum)))) {
      best = &cell;
    }
  }
  if (best == nullptr) throw std::runtime_error("best_cell: every grid cell diverged");
  return {best->lr, best->momentum};
}

std::size_t cells_within(const GridResult& result, double ratio) {
  const auto [lr, momentum] = best_cell(result);
  double best = 0.0;
  for (const auto& cell : result.cells) {
    if (cell.lr == lr && cell.momentum == momentum) best = cell.mean_final_val;
  }
  return static_cast<std::size_t>(std::count_if(
      result.cells.begin(), result.cells.end(), [&](const GridCell& cell) {
        return !cell.diverged() && std::isfinite(cell.mean_final_val) &&
               cell.mean_final_val <= ratio * best;
      }));
}

ElrComparison elr_comparison(const RunConfig& config, double m) {
  if (!(m >= 0.0 && m < 1.0)) {
    throw std::invalid_argument(fmt::format("elr_comparison: momentum m = {} must lie in [0, 1)", m));
  }
  ElrComparison out;
  out.momentum_arm = resolve_config(config);
  RunConfig sgd = out.momentum_arm;
  sgd.optimizer = OptimizerKind::SGD;
  sgd.momentum_schedule.reset();
  sgd.beta_init.reset();
  const double scale = 1.0 / (1.0 - m);
  sgd.lr_schedule.init_value *= scale;
  sgd.lr_schedule.min_value *= scale;
  out.sgd_arm = resolve_config(sgd);
  out.momentum_trace = run_training(out.momentum_arm);
  out.sgd_trace = run_training(out.sgd_arm);
  return out;
}

}  // namespace demon
