// SPDX-License-Identifier: Apache-2.0
#include "demon/schedules.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <utility>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

namespace demon {
namespace {

constexpr std::array<std::pair<ScheduleKind, std::string_view>, 9> kKindNames{{
    {ScheduleKind::Constant, "Constant"},
    {ScheduleKind::Demon, "Demon"},
    {ScheduleKind::Cosine, "Cosine"},
    {ScheduleKind::Linear, "Linear"},
    {ScheduleKind::Step, "Step"},
    {ScheduleKind::Exponential, "Exponential"},
    {ScheduleKind::OneCycle, "OneCycle"},
    {ScheduleKind::Plateau, "Plateau"},
    {ScheduleKind::DemonTheory, "DemonTheory"},
}};

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() &&
         std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) ==
                  std::tolower(static_cast<unsigned char>(y));
         });
}

void check_time(double t, double total, const char* who) {
  if (!(total >= 1.0)) {
    throw std::domain_error(fmt::format("{}: total iterations must be >= 1, got {}", who, total));
  }
  if (!(t >= 0.0) || t > total) {
    throw std::domain_error(fmt::format("{}: t = {} outside [0, {}]", who, t, total));
  }
}

}  // namespace

std::string_view to_string(ScheduleKind kind) {
  for (const auto& [k, name] : kKindNames) {
    if (k == kind) return name;
  }
  return "Unknown";
}

std::string_view to_string(ScheduleTarget target) {
  return target == ScheduleTarget::LearningRate ? "LearningRate" : "Momentum";
}

ScheduleKind parse_schedule_kind(std::string_view name) {
  for (const auto& [k, n] : kKindNames) {
    if (iequals(n, name)) return k;
  }
  throw std::invalid_argument(fmt::format("unknown schedule kind '{}'", name));
}

ScheduleTarget parse_schedule_target(std::string_view name) {
  if (iequals(name, "LearningRate") || iequals(name, "lr")) return ScheduleTarget::LearningRate;
  if (iequals(name, "Momentum")) return ScheduleTarget::Momentum;
  throw std::invalid_argument(fmt::format("unknown schedule target '{}'", name));
}

void ScheduleSpec::validate() const {
  auto fail = [this](const std::string& what) {
    throw std::invalid_argument(fmt::format("{} schedule: {}", to_string(kind), what));
  };
  if (!std::isfinite(init_value) || init_value < 0.0) fail("init_value must be finite and >= 0");
  if (!std::isfinite(min_value) || min_value < 0.0) fail("min_value must be finite and >= 0");
  if (kind == ScheduleKind::Cosine || kind == ScheduleKind::OneCycle) {
    if (min_value > init_value) fail("min_value must not exceed init_value");
  }
  if (kind == ScheduleKind::Demon || kind == ScheduleKind::DemonTheory) {
    if (target != ScheduleTarget::Momentum) fail("only valid as a momentum schedule");
    if (init_value >= 1.0) fail("init_value (beta_init) must be < 1");
  }
  if (kind == ScheduleKind::Step) {
    for (std::size_t i = 0; i < milestones.size(); ++i) {
      if (!(milestones[i] > 0.0 && milestones[i] < 1.0)) fail("milestones must lie in (0, 1)");
      if (i > 0 && !(milestones[i] > milestones[i - 1])) fail("milestones must be strictly increasing");
    }
  }
  if (kind == ScheduleKind::Step || kind == ScheduleKind::Plateau) {
    if (!(factor > 0.0 && factor < 1.0)) fail("factor must lie in (0, 1)");
  }
  if (kind == ScheduleKind::Plateau && patience < 1) fail("patience must be a positive integer");
  if (k && !std::isfinite(*k)) fail("k must be finite");
}

ScheduleSpec constant_schedule(double value, ScheduleTarget target) {
  ScheduleSpec spec;
  spec.kind = ScheduleKind::Constant;
  spec.init_value = value;
  spec.target = target;
  return spec;
}

ScheduleSpec demon_schedule(double beta_init) {
  ScheduleSpec spec;
  spec.kind = ScheduleKind::Demon;
  spec.init_value = beta_init;
  spec.target = ScheduleTarget::Momentum;
  return spec;
}

PlateauState plateau_initial_state(double init_value) {
  return PlateauState{init_value, std::numeric_limits<double>::infinity(), 0};
}

double demon_beta(double t, double total, double beta_init) {
  if (!(beta_init >= 0.0 && beta_init < 1.0)) {
    throw std::domain_error(fmt::format("demon_beta: beta_init = {} outside [0, 1)", beta_init));
  }
  check_time(t, total, "demon_beta");
  const double p = (total - t) / total;
  // (1 - b) + b * p written as 1 - b * (1 - p) so that t = 0 yields beta_init exactly.
  return beta_init * (p / (1.0 - beta_init * (1.0 - p)));
}

double cosine_value(double t, double total, double max_value, double min_value) {
  if (min_value > max_value) {
    throw std::domain_error(
        fmt::format("cosine_value: min {} exceeds max {}", min_value, max_value));
  }
  check_time(t, total, "cosine_value");
  if (t == total) return min_value;
  const double v = min_value + 0.5 * (max_value - min_value) * (1.0 + std::cos(std::numbers::pi * t / total));
  // Rounding can push min + (max - min) past max near t = 0.
  return std::clamp(v, min_value, max_value);
}

double linear_value(double t, double total, double init_value) {
  check_time(t, total, "linear_value");
  return init_value * ((total - t) / total);
}

double step_value(double t, double total, double init_value, const std::vector<double>& milestones,
                  double factor) {
  check_time(t, total, "step_value");
  if (!std::is_sorted(milestones.begin(), milestones.end()) ||
      std::adjacent_find(milestones.begin(), milestones.end()) != milestones.end()) {
    throw std::domain_error("step_value: milestones must be strictly increasing");
  }
  double value = init_value;
  for (double m : milestones) {
    // nearbyint under the default rounding mode rounds half to even.
    if (t >= std::nearbyint(m * total)) value *= factor;
  }
  return value;
}

double default_exponential_rate(double total) { return -0.05 * (100.0 / total); }

double exponential_value(double t, double total, double init_value, double k) {
  if (!(total >= 1.0)) throw std::domain_error("exponential_value: total iterations must be >= 1");
  return init_value * std::exp(k * t);
}

double onecycle_value(double t, double total, double peak, double floor, ScheduleTarget target) {
  if (floor > peak) {
    throw std::domain_error(fmt::format("onecycle_value: floor {} exceeds peak {}", floor, peak));
  }
  check_time(t, total, "onecycle_value");
  const double half = 0.5 * total;
  // Position on the triangle: 0 at both ends, 1 at the apex.
  const double rise = t <= half ? t / half : (total - t) / half;
  // std::lerp is exact at both ends of the triangle.
  if (target == ScheduleTarget::LearningRate) return std::lerp(floor, peak, rise);
  return std::lerp(peak, floor, rise);
}

PlateauState plateau_update(const PlateauState& state, double val_metric, int patience,
                            double factor) {
  if (!std::isfinite(val_metric)) {
    throw std::domain_error("plateau_update: validation metric must be finite");
  }
  PlateauState next = state;
  if (val_metric < state.best_metric) {
    next.best_metric = val_metric;
    next.epochs_since_improvement = 0;
    return next;
  }
  ++next.epochs_since_improvement;
  if (next.epochs_since_improvement > patience) {
    next.current_value = state.current_value * factor;
    next.epochs_since_improvement = 0;
  }
  return next;
}

double demon_theory_beta(double t) {
  if (!(t >= 1.0)) {
    throw std::domain_error(fmt::format("demon_theory_beta: t = {} must be >= 1", t));
  }
  return (t + 1.0) / (t * (t + 2.0));
}

double schedule_eval(const ScheduleSpec& spec, double t, double total, const PlateauState* plateau) {
  if ((spec.kind == ScheduleKind::Plateau) != (plateau != nullptr)) {
    throw std::invalid_argument("schedule_eval: plateau state is required iff kind is Plateau");
  }
  switch (spec.kind) {
    case ScheduleKind::Constant:
      return spec.init_value;
    case ScheduleKind::Demon:
      return demon_beta(t, total, spec.init_value);
    case ScheduleKind::Cosine:
      return cosine_value(t, total, spec.init_value, spec.min_value);
    case ScheduleKind::Linear:
      return linear_value(t, total, spec.init_value);
    case ScheduleKind::Step:
      return step_value(t, total, spec.init_value, spec.milestones, spec.factor);
    case ScheduleKind::Exponential:
      return exponential_value(t, total, spec.init_value,
                               spec.k.value_or(default_exponential_rate(total)));
    case ScheduleKind::OneCycle:
      return onecycle_value(t, total, spec.init_value, spec.min_value, spec.target);
    case ScheduleKind::Plateau:
      return plateau->current_value;
    case ScheduleKind::DemonTheory:
      // The convex-bound schedule is indexed from 1.
      return demon_theory_beta(t + 1.0);
  }
  throw std::logic_error("schedule_eval: unhandled kind");
}

void to_json(nlohmann::json& j, const ScheduleSpec& spec) {
  j = nlohmann::json{
      {"kind", std::string(to_string(spec.kind))},
      {"init_value", spec.init_value},
      {"min_value", spec.min_value},
      {"milestones", spec.milestones},
      {"factor", spec.factor},
      {"patience", spec.patience},
      {"target", std::string(to_string(spec.target))},
  };
  if (spec.k) {
    j["k"] = *spec.k;
  } else {
    j["k"] = nullptr;
  }
}

void from_json(const nlohmann::json& j, ScheduleSpec& spec) {
  if (!j.is_object()) throw std::invalid_argument("schedule spec must be an object");
  ScheduleSpec out;
  for (const auto& [key, value] : j.items()) {
    if (key == "kind") {
      out.kind = parse_schedule_kind(value.get<std::string>());
    } else if (key == "init_value") {
      out.init_value = value.get<double>();
    } else if (key == "min_value") {
      out.min_value = value.get<double>();
    } else if (key == "milestones") {
      out.milestones = value.get<std::vector<double>>();
    } else if (key == "factor") {
      out.factor = value.get<double>();
    } else if (key == "k") {
      if (value.is_null()) {
        out.k.reset();
      } else {
        out.k = value.get<double>();
      }
    } else if (key == "patience") {
      out.patience = value.get<int>();
    } else if (key == "target") {
      out.target = parse_schedule_target(value.get<std::string>());
    } else {
      throw std::invalid_argument(fmt::format("schedule spec: unknown field '{}'", key));
    }
  }
  if ((out.kind == ScheduleKind::Demon || out.kind == ScheduleKind::DemonTheory) &&
      !j.contains("target")) {
    out.target = ScheduleTarget::Momentum;
  }
  out.validate();
  spec = std::move(out);
}

}  // namespace demon
