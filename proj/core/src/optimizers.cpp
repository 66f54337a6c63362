// SPDX-License-Identifier: Apache-2.0
#include "demon/optimizers.hpp"

#include <cmath>
#include <utility>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "demon/schedules.hpp"

namespace demon {
namespace {

// Validates the hyperparameters and gradient and returns the effective gradient after weight
// decay and clipping. Returns `g` unchanged (as a copy) when both are off.
Vector effective_gradient(const OptimizerState& state, std::span<const double> g,
                          const StepHyper& h) {
  h.validate();
  if (g.size() != state.theta.size()) {
    throw std::invalid_argument(fmt::format("gradient has dimension {}, parameters have {}",
                                            g.size(), state.theta.size()));
  }
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!std::isfinite(g[i])) {
      throw OptimizerError(
          fmt::format("non-finite gradient component {} at step {}", i, state.step), state.step);
    }
  }
  Vector out = h.weight_decay != 0.0 ? apply_weight_decay(g, state.theta, h.weight_decay)
                                     : Vector(g.begin(), g.end());
  if (h.clip_norm > 0.0) {
    double sq = 0.0;
    for (double x : out) sq += x * x;
    const double norm = std::sqrt(sq);
    if (norm > h.clip_norm) {
      const double scale = h.clip_norm / norm;
      for (double& x : out) x *= scale;
    }
  }
  return out;
}

void ensure_buffers(OptimizerState& state) {
  const std::size_t n = state.theta.size();
  if (state.velocity.size() != n) state.velocity.assign(n, 0.0);
  if (state.second_moment.size() != n) state.second_moment.assign(n, 0.0);
  if (state.accumulator.size() != n) state.accumulator.assign(n, 0.0);
}

}  // namespace

OptimizerState::OptimizerState(Vector initial_theta)
    : theta(std::move(initial_theta)),
      velocity(theta.size(), 0.0),
      second_moment(theta.size(), 0.0),
      accumulator(theta.size(), 0.0) {}

void StepHyper::validate() const {
  if (!(std::isfinite(eta) && eta > 0.0)) throw std::invalid_argument("eta must be finite and > 0");
  if (!(beta >= 0.0 && beta < 1.0)) throw std::invalid_argument("beta must lie in [0, 1)");
  if (!(beta2 >= 0.0 && beta2 < 1.0)) throw std::invalid_argument("beta2 must lie in [0, 1)");
  if (!(std::isfinite(epsilon) && epsilon > 0.0)) throw std::invalid_argument("epsilon must be > 0");
  if (!(std::isfinite(weight_decay) && weight_decay >= 0.0)) {
    throw std::invalid_argument("weight_decay must be >= 0");
  }
  if (!(std::isfinite(clip_norm) && clip_norm >= 0.0)) {
    throw std::invalid_argument("clip_norm must be >= 0");
  }
}

Vector apply_weight_decay(std::span<const double> g, std::span<const double> theta, double lambda) {
  if (g.size() != theta.size()) throw std::invalid_argument("apply_weight_decay: size mismatch");
  if (lambda < 0.0) throw std::invalid_argument("apply_weight_decay: lambda must be >= 0");
  Vector out(g.begin(), g.end());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += lambda * theta[i];
  return out;
}

OptimizerState sgd_step(OptimizerState state, std::span<const double> g, const StepHyper& h) {
  ensure_buffers(state);
  const Vector grad = effective_gradient(state, g, h);
  for (std::size_t i = 0; i < grad.size(); ++i) {
    state.theta[i] = state.theta[i] - h.eta * grad[i];
    state.velocity[i] = -h.eta * grad[i];
  }
  ++state.step;
  return state;
}

OptimizerState sgdm_step(OptimizerState state, std::span<const double> g, const StepHyper& h) {
  ensure_buffers(state);
  const Vector grad = effective_gradient(state, g, h);
  for (std::size_t i = 0; i < grad.size(); ++i) {
    const double v = state.velocity[i];
    state.theta[i] = state.theta[i] - h.eta * grad[i] + h.beta * v;
    state.velocity[i] = h.beta * v - h.eta * grad[i];
  }
  ++state.step;
  return state;
}

OptimizerState demon_sgdm_step(OptimizerState state, std::span<const double> g, double eta,
                               double beta_init, std::uint64_t t, std::uint64_t total,
                               const StepHyper& extras) {
  if (t >= total) {
    throw std::domain_error(fmt::format("demon_sgdm_step: t = {} must be < T = {}", t, total));
  }
  StepHyper h = extras;
  h.eta = eta;
  h.beta = demon_beta(static_cast<double>(t), static_cast<double>(total), beta_init);
  return sgdm_step(std::move(state), g, h);
}

OptimizerState adaptive_momentum_step(OptimizerState state, std::span<const double> g,
                                      const StepHyper& h) {
  ensure_buffers(state);
  const Vector grad = effective_gradient(state, g, h);
  for (std::size_t i = 0; i < grad.size(); ++i) {
    state.second_moment[i] = h.beta2 * state.second_moment[i] + (1.0 - h.beta2) * (grad[i] * grad[i]);
    state.accumulator[i] = grad[i] + h.beta * state.accumulator[i];
    state.theta[i] -= h.eta / std::sqrt(state.second_moment[i] + h.epsilon) * state.accumulator[i];
  }
  ++state.step;
  return state;
}

OptimizerState demon_adam_step(OptimizerState state, std::span<const double> g, double eta,
                               double beta_init, std::uint64_t t, std::uint64_t total,
                               const StepHyper& h) {
  if (t >= total) {
    throw std::domain_error(fmt::format("demon_adam_step: t = {} must be < T = {}", t, total));
  }
  StepHyper hyper = h;
  hyper.eta = eta;
  hyper.beta = demon_beta(static_cast<double>(t), static_cast<double>(total), beta_init);
  return adaptive_momentum_step(std::move(state), g, hyper);
}

OptimizerState adam_step(OptimizerState state, std::span<const double> g, const StepHyper& h) {
  ensure_buffers(state);
  const Vector grad = effective_gradient(state, g, h);
  const double count = static_cast<double>(state.step + 1);
  const double correction1 = 1.0 - std::pow(h.beta, count);
  const double correction2 = 1.0 - std::pow(h.beta2, count);
  for (std::size_t i = 0; i < grad.size(); ++i) {
    state.velocity[i] = h.beta * state.velocity[i] + (1.0 - h.beta) * grad[i];
    state.second_moment[i] = h.beta2 * state.second_moment[i] + (1.0 - h.beta2) * (grad[i] * grad[i]);
    const double m_hat = state.velocity[i] / correction1;
    const double s_hat = state.second_moment[i] / correction2;
    state.theta[i] -= h.eta * m_hat / (std::sqrt(s_hat) + h.epsilon);
  }
  ++state.step;
  return state;
}

void to_json(nlohmann::json& j, const OptimizerState& state) {
  j = nlohmann::json{
      {"theta", state.theta},
      {"velocity", state.velocity},
      {"second_moment", state.second_moment},
      {"accumulator", state.accumulator},
      {"step", state.step},
  };
}

void from_json(const nlohmann::json& j, OptimizerState& state) {
  OptimizerState out;
  for (const auto& [key, value] : j.items()) {
    if (key == "theta") {
      out.theta = value.get<Vector>();
    } else if (key == "velocity") {
      out.velocity = value.get<Vector>();
    } else if (key == "second_moment") {
      out.second_moment = value.get<Vector>();
    } else if (key == "accumulator") {
      out.accumulator = value.get<Vector>();
    } else if (key == "step") {
      out.step = value.get<std::uint64_t>();
    } else {
      throw std::invalid_argument(fmt::format("optimizer state: unknown field '{}'", key));
    }
  }
  const std::size_t n = out.theta.size();
  if (out.velocity.size() != n || out.second_moment.size() != n || out.accumulator.size() != n) {
    throw std::invalid_argument("optimizer state: buffer dimensions differ from theta");
  }
  state = std::move(out);
}

}  // namespace demon
