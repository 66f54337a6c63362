// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace demon {

using Vector = std::vector<double>;

/// Parameters plus every optimizer buffer.
///
/// `velocity` is the momentum buffer: the SGDM velocity (which already
/// carries the step size, so theta_{t+1} - theta_t == velocity_{t+1}) or
/// Adam's first-moment average. `second_moment` is the elementwise average
/// of g*g for the Adam family. `accumulator` is the Demon-Adam momentum
/// g_t + beta_t * m_{t-1}, which is neither averaged nor bias corrected.
struct OptimizerState {
  Vector theta;
  Vector velocity;
  Vector second_moment;
  Vector accumulator;
  std::uint64_t step = 0;

  OptimizerState() = default;
  /// Zero buffers sized to `initial_theta`.
  explicit OptimizerState(Vector initial_theta);

  std::size_t dim() const { return theta.size(); }

  friend bool operator==(const OptimizerState&, const OptimizerState&) = default;
};

/// Per-step hyperparameters. `beta` is the already-scheduled momentum for
/// this step (beta_1 for Adam).
struct StepHyper {
  double eta = 0.01;
  double beta = 0.0;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.0;
  /// Global-norm gradient clip; 0 disables clipping.
  double clip_norm = 0.0;

  void validate() const;
};

/// Raised for non-finite gradients. Carries the step index of the update.
class OptimizerError : public std::runtime_error {
 public:
  OptimizerError(const std::string& what, std::uint64_t step)
      : std::runtime_error(what), step_(step) {}
  std::uint64_t step() const noexcept { return step_; }

 private:
  std::uint64_t step_;
};

/// Coupled L2: g + lambda * theta.
Vector apply_weight_decay(std::span<const double> g, std::span<const double> theta, double lambda);

/// theta <- theta - eta * g. The velocity records the update so that the
/// velocity identity of SGDM also holds for plain SGD.
OptimizerState sgd_step(OptimizerState state, std::span<const double> g, const StepHyper& h);

/// Heavy-ball SGDM in velocity form:
///   theta_{t+1} = theta_t - eta * g_t + beta_t * v_t
///   v_{t+1}     = beta_t * v_t - eta * g_t
OptimizerState sgdm_step(OptimizerState state, std::span<const double> g, const StepHyper& h);

/// SGDM with beta_t = demon_beta(t, T, beta_init). `extras` supplies weight
/// decay and clipping; its eta and beta are ignored.
OptimizerState demon_sgdm_step(OptimizerState state, std::span<const double> g, double eta,
                               double beta_init, std::uint64_t t, std::uint64_t total,
                               const StepHyper& extras = {});

/// Demon in Adam:
///   E_{t+1} = beta2 * E_t + (1 - beta2) * g * g
///   m_t     = g_t + beta_t * m_{t-1}
///   theta  -= eta / sqrt(E_{t+1} + eps) * m_t
OptimizerState demon_adam_step(OptimizerState state, std::span<const double> g, double eta,
                               double beta_init, std::uint64_t t, std::uint64_t total,
                               const StepHyper& h);

/// Demon-Adam update with an explicit beta_t in `h.beta` (used when the
/// momentum comes from an arbitrary schedule).
OptimizerState adaptive_momentum_step(OptimizerState state, std::span<const double> g,
                                      const StepHyper& h);

/// Adam with bias correction on both moments and epsilon outside the root.
OptimizerState adam_step(OptimizerState state, std::span<const double> g, const StepHyper& h);

void to_json(nlohmann::json& j, const OptimizerState& state);
void from_json(const nlohmann::json& j, OptimizerState& state);

}  // namespace demon
