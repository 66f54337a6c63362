// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "demon/optimizers.hpp"
#include "demon/problems.hpp"

namespace demon {

/// One row of a training trace. Row t describes the iterate theta_t and the
/// hyperparameters (eta_t, beta_t) applied by the step that leaves it.
struct TraceRecord {
  std::uint64_t t = 0;
  double loss = 0.0;
  std::optional<double> val_metric;
  double beta_t = 0.0;
  double eta_t = 0.0;
  double theta_norm_sq = 0.0;
  double v_norm_sq = 0.0;
  double grad_norm = 0.0;

  friend bool operator==(const TraceRecord&, const TraceRecord&) = default;
};

/// T + 1 records (initial state included) unless the run diverged.
struct Trace {
  std::vector<TraceRecord> records;
  /// Optional per-record copies of the velocity and parameters.
  std::vector<Vector> velocities;
  std::vector<Vector> thetas;
  bool diverged = false;
  bool scale_invariant_problem = false;
};

struct CheckReport {
  std::string check_name;
  bool passed = false;
  double max_abs_error = 0.0;
  double max_rel_error = 0.0;
  std::string witness;

  friend bool operator==(const CheckReport&, const CheckReport&) = default;
};

void to_json(nlohmann::json& j, const CheckReport& report);
void from_json(const nlohmann::json& j, CheckReport& report);

/// Runs momentum SGD in the form
///   v_0 = 0,  theta_1 = theta_0,
///   v_t = beta_{t-1} v_{t-1} - g(theta_t),  theta_{t+1} = theta_t + eta v_t  (t >= 1)
/// on a full-batch problem and records every theta_t and v_t. `betas[t]`
/// is the coefficient that multiplies v_t. This trajectory coincides with the
/// velocity-form sgdm_step started from theta_0, shifted by one index, with
/// that form's velocity equal to eta * v.
Trace run_momentum_trace(const Problem& problem, const Vector& theta0, double eta,
                         const std::vector<double>& betas, std::size_t steps);

struct Lemma1Options {
  /// Test hook: added to the momentum sum on the right-hand side.
  double fault_injection = 0.0;
  double tolerance = 1e-8;
};

/// Norm growth identity for scale-invariant objectives:
///   ||theta_{t+1}||^2 = ||theta_t||^2 + eta^2 ||v_t||^2
///                       + 2 eta^2 sum_{i<t} beta_i ... beta_{t-1} ||v_i||^2
/// evaluated twice: with the explicit double sum over the stored history, and
/// with the running inner product a_t = <theta_t, v_t> maintained as
/// a_t = beta_{t-1} (a_{t-1} + eta ||v_{t-1}||^2). Both must match.
/// Returns one report per form.
std::vector<CheckReport> check_lemma1(const Trace& trace, double eta,
                                      const Lemma1Options& options = {});

/// Heavy-ball iteration theta_{t+1} = theta_t - alpha grad f(theta_t)
/// + beta_t (theta_t - theta_{t-1}) with beta_t = (t+1)/(t(t+2)) and
/// theta_0 = theta_1. Checks f(mean(theta_1..theta_T')) - f* against
/// ||theta_1 - theta*||^2 / T' * (3L/4 + 1/(2 alpha)) at every prefix T'.
/// max_abs_error is the largest violation (0 if none); max_rel_error the
/// largest ratio of suboptimality to bound.
CheckReport check_theorem1(const Problem& problem, double alpha, std::size_t steps,
                           const Vector& theta1);
/// Convenience: builds make_quadratic(L, 0.1 L, theta1.size()).
CheckReport check_theorem1(double L, double alpha, std::size_t steps, const Vector& theta1);

/// Recursive velocity-form SGDM versus the explicit sum
///   theta_{t+1} = theta_t - eta g_t - eta sum_{i=1}^{t} (beta_t ... beta_{t-i+1}) g_{t-i}
/// over an open-loop gradient sequence. `betas[t]` is used at step t.
CheckReport check_unroll_equivalence(const std::vector<Vector>& gradients, double eta,
                                     const std::vector<double>& betas, const Vector& theta0);

struct GradientCheckOptions {
  double h = 1e-5;
  /// Relative tolerance; unset selects 1e-6 for quadratics and 1e-4 otherwise.
  std::optional<double> tolerance;
  /// Coordinates whose perturbation comes this close to a ReLU kink are skipped.
  double kink_margin = 1e-4;
};

CheckReport check_gradient(const Problem& problem, const std::vector<Vector>& points,
                           const GradientCheckOptions& options = {});

/// Paired trajectories on a fixed quadratic over 100 steps:
/// Demon-SGDM(beta_init = 0) vs SGD, constant-schedule SGDM vs SGDM, and
/// Demon-Adam(beta_init = 0) vs a second-moment-only update.
std::vector<CheckReport> check_reductions();

}  // namespace demon
