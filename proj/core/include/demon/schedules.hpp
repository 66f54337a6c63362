// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace demon {

enum class ScheduleKind {
  Constant,
  Demon,
  Cosine,
  Linear,
  Step,
  Exponential,
  OneCycle,
  Plateau,
  DemonTheory,
};

enum class ScheduleTarget { LearningRate, Momentum };

std::string_view to_string(ScheduleKind kind);
std::string_view to_string(ScheduleTarget target);
ScheduleKind parse_schedule_kind(std::string_view name);
ScheduleTarget parse_schedule_target(std::string_view name);

/// Declarative description of one learning-rate or momentum schedule.
///
/// Which fields are read depends on `kind`:
///   Constant     init_value
///   Demon        init_value (beta_init)
///   Cosine       init_value (max), min_value
///   Linear       init_value
///   Step         init_value, milestones (fractions of T), factor
///   Exponential  init_value, k (defaults to -0.05 * 100 / T when unset)
///   OneCycle     init_value (peak), min_value (floor), target
///   Plateau      init_value, factor, patience
///   DemonTheory  none; the value depends on t alone
struct ScheduleSpec {
  ScheduleKind kind = ScheduleKind::Constant;
  double init_value = 0.0;
  double min_value = 0.0;
  std::vector<double> milestones;
  double factor = 0.1;
  std::optional<double> k;
  int patience = 5;
  ScheduleTarget target = ScheduleTarget::LearningRate;

  /// Throws std::invalid_argument naming the violated constraint.
  void validate() const;

  friend bool operator==(const ScheduleSpec&, const ScheduleSpec&) = default;
};

ScheduleSpec constant_schedule(double value, ScheduleTarget target);
ScheduleSpec demon_schedule(double beta_init);

/// Mutable part of a decay-on-plateau schedule. Updated functionally by
/// plateau_update; the caller owns sequencing across epochs.
struct PlateauState {
  double current_value = 0.0;
  double best_metric = 0.0;
  int epochs_since_improvement = 0;

  friend bool operator==(const PlateauState&, const PlateauState&) = default;
};

PlateauState plateau_initial_state(double init_value);

// Schedule families. `t` is the iteration index (0..T) and `total` is T;
// both are real so that plotting code can sample between iterations.

/// Momentum decay rule: beta_init * p / ((1 - beta_init) + beta_init * p)
/// with p = (T - t) / T the fraction of iterations remaining. Exactly
/// beta_init at t = 0 and exactly 0 at t = T.
double demon_beta(double t, double total, double beta_init);

double cosine_value(double t, double total, double max_value, double min_value);
double linear_value(double t, double total, double init_value);

/// Milestone m drops the value at iteration round(m * T), ties to even.
double step_value(double t, double total, double init_value,
                  const std::vector<double>& milestones, double factor);

double exponential_value(double t, double total, double init_value, double k);
double default_exponential_rate(double total);

/// Triangle with the apex at T/2. LearningRate rises floor -> peak -> floor;
/// Momentum is the mirror image, peak -> floor -> peak.
double onecycle_value(double t, double total, double peak, double floor,
                      ScheduleTarget target);

/// Strict improvement resets the counter; once the counter exceeds
/// `patience` the value is multiplied by `factor` and the counter resets.
PlateauState plateau_update(const PlateauState& state, double val_metric, int patience,
                            double factor);

/// Momentum schedule of the convex convergence bound: (t + 1) / (t (t + 2)).
double demon_theory_beta(double t);

/// Dispatch over every family. `plateau` must be supplied iff the spec is a
/// Plateau schedule.
double schedule_eval(const ScheduleSpec& spec, double t, double total,
                     const PlateauState* plateau = nullptr);

void to_json(nlohmann::json& j, const ScheduleSpec& spec);
/// Rejects unknown fields.
void from_json(const nlohmann::json& j, ScheduleSpec& spec);

}  // namespace demon
