// SPDX-License-Identifier: Apache-2.0
#include "demon/verify.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "demon/schedules.hpp"

namespace demon {
namespace {

double norm_sq(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

double relative(double err, double scale) {
  if (err == 0.0) return 0.0;
  return scale > 0.0 ? err / scale : std::numeric_limits<double>::infinity();
}

}  // namespace

void to_json(nlohmann::json& j, const CheckReport& report) {
  j = nlohmann::json{
      {"check_name", report.check_name},       {"passed", report.passed},
      {"max_abs_error", report.max_abs_error}, {"max_rel_error", report.max_rel_error},
      {"witness", report.witness},
  };
}

void from_json(const nlohmann::json& j, CheckReport& report) {
  report.check_name = j.at("check_name").get<std::string>();
  report.passed = j.at("passed").get<bool>();
  report.max_abs_error = j.at("max_abs_error").is_null() ? NAN : j.at("max_abs_error").get<double>();
  report.max_rel_error = j.at("max_rel_error").is_null() ? NAN : j.at("max_rel_error").get<double>();
  report.witness = j.at("witness").get<std::string>();
}

Trace run_momentum_trace(const Problem& problem, const Vector& theta0, double eta,
                         const std::vector<double>& betas, std::size_t steps) {
  if (theta0.size() != problem.dim()) throw std::invalid_argument("run_momentum_trace: bad theta0");
  if (betas.size() < steps + 1) {
    throw std::invalid_argument("run_momentum_trace: need a beta for every record");
  }
  Trace trace;
  trace.scale_invariant_problem = problem.scale_invariant;
  Vector theta = theta0;
  Vector v(theta.size(), 0.0);
  for (std::size_t t = 0; t <= steps; ++t) {
    Vector g;
    if (t >= 1) {
      g = problem.grad(theta);
      for (std::size_t i = 0; i < v.size(); ++i) v[i] = betas[t - 1] * v[i] - g[i];
    }
    TraceRecord rec;
    rec.t = t;
    rec.loss = problem.eval(theta);
    rec.beta_t = betas[t];
    rec.eta_t = eta;
    rec.theta_norm_sq = norm_sq(theta);
    rec.v_norm_sq = norm_sq(v);
    rec.grad_norm = t >= 1 ? std::sqrt(norm_sq(g)) : std::sqrt(norm_sq(problem.grad(theta)));
    trace.records.push_back(rec);
    trace.thetas.push_back(theta);
    trace.velocities.push_back(v);
    if (t == steps) break;
    // t = 0 leaves theta unchanged because v_0 = 0.
    for (std::size_t i = 0; i < theta.size(); ++i) theta[i] += eta * v[i];
  }
  return trace;
}

std::vector<CheckReport> check_lemma1(const Trace& trace, double eta, const Lemma1Options& options) {
  if (!trace.scale_invariant_problem) {
    throw std::invalid_argument("check_lemma1: trace does not come from a scale-invariant problem");
  }
  const std::size_t n = trace.records.size();
  if (trace.thetas.size() != n || trace.velocities.size() != n) {
    throw std::invalid_argument("check_lemma1: trace must retain every theta and velocity");
  }
  if (n < 2) throw std::invalid_argument("check_lemma1: trace needs at least two records");

  std::vector<double> v_sq(n);
  std::vector<double> theta_sq(n);
  for (std::size_t t = 0; t < n; ++t) {
    v_sq[t] = norm_sq(trace.velocities[t]);
    theta_sq[t] = norm_sq(trace.thetas[t]);
  }
  auto beta = [&](std::size_t i) { return trace.records[i].beta_t; };

  CheckReport explicit_form{"lemma1_explicit_sum", true, 0.0, 0.0, ""};
  CheckReport running_form{"lemma1_running_sum", true, 0.0, 0.0, ""};
  double running = 0.0;  // a_t = <theta_t, v_t>, with a_0 = 0 since v_0 = 0
  for (std::size_t t = 0; t + 1 < n; ++t) {
    if (t >= 1) running = beta(t - 1) * (running + eta * v_sq[t - 1]);

    double sum = 0.0;
    for (std::size_t i = 0; i < t; ++i) {
      double product = 1.0;
      for (std::size_t j = i; j < t; ++j) product *= beta(j);
      sum += product * v_sq[i];
    }
    sum += options.fault_injection;

    const double lhs = theta_sq[t + 1];
    const double base = theta_sq[t] + eta * eta * v_sq[t];
    const double rhs_explicit = base + 2.0 * eta * eta * sum;
    const double rhs_running = base + 2.0 * eta * (running + eta * options.fault_injection);

    auto update = [&](CheckReport& r, double rhs) {
      const double abs_err = std::abs(lhs - rhs);
      const double rel_err = relative(abs_err, std::abs(lhs));
      if (r.witness.empty() || rel_err > r.max_rel_error) {
        r.witness = fmt::format("t={} lhs={} rhs={}", t, lhs, rhs);
      }
      r.max_abs_error = std::max(r.max_abs_error, abs_err);
      r.max_rel_error = std::max(r.max_rel_error, rel_err);
    };
    update(explicit_form, rhs_explicit);
    update(running_form, rhs_running);
  }
  explicit_form.passed = explicit_form.max_rel_error <= options.tolerance;
  running_form.passed = running_form.max_rel_error <= options.tolerance;
  return {explicit_form, running_form};
}

CheckReport check_theorem1(const Problem& problem, double alpha, std::size_t steps,
                           const Vector& theta1) {
  if (!problem.lipschitz_L || !problem.optimum_point || !problem.optimum_value) {
    throw std::invalid_argument("check_theorem1: problem needs L, theta* and f*");
  }
  const double L = *problem.lipschitz_L;
  const double upper = 2.0 / (3.0 * L);
  if (!(alpha > 0.0 && alpha < upper)) {
    throw std::domain_error(
        fmt::format("check_theorem1: alpha = {} outside admissible interval (0, {})", alpha, upper));
  }
  if (steps < 1) throw std::invalid_argument("check_theorem1: need at least one iterate");
  if (theta1.size() != problem.dim()) throw std::invalid_argument("check_theorem1: bad theta1");

  const Vector& star = *problem.optimum_point;
  double dist_sq = 0.0;
  for (std::size_t i = 0; i < theta1.size(); ++i) dist_sq += (theta1[i] - star[i]) * (theta1[i] - star[i]);
  const double constant = 0.75 * L + 1.0 / (2.0 * alpha);

  CheckReport report{fmt::format("theorem1(L={},alpha={},dim={})", L, alpha, theta1.size()), true,
                     0.0, 0.0, ""};
  Vector prev = theta1;  // theta_0 = theta_1
  Vector cur = theta1;
  Vector sum(theta1.size(), 0.0);
  Vector mean(theta1.size());
  for (std::size_t t = 1; t <= steps; ++t) {
    for (std::size_t i = 0; i < cur.size(); ++i) sum[i] += cur[i];
    for (std::size_t i = 0; i < cur.size(); ++i) mean[i] = sum[i] / static_cast<double>(t);
    const double gap = problem.eval(mean) - *problem.optimum_value;
    const double bound = dist_sq / static_cast<double>(t) * constant;
    const double violation = gap - bound;
    // Allow for rounding in evaluating f at the average.
    if (violation > 1e-12 * std::max(bound, 1e-300) && violation > 0.0) {
      if (report.passed) report.witness = fmt::format("T={} gap={} bound={}", t, gap, bound);
      report.passed = false;
    }
    report.max_abs_error = std::max(report.max_abs_error, std::max(violation, 0.0));
    if (bound > 0.0) report.max_rel_error = std::max(report.max_rel_error, gap / bound);
    if (t == steps) break;

    const Vector g = problem.grad(cur);
    const double beta = demon_theory_beta(static_cast<double>(t));
    Vector next(cur.size());
    for (std::size_t i = 0; i < cur.size(); ++i) {
      next[i] = cur[i] - alpha * g[i] + beta * (cur[i] - prev[i]);
    }
    prev = std::move(cur);
    cur = std::move(next);
  }
  if (report.passed) report.witness = fmt::format("max gap/bound ratio {}", report.max_rel_error);
  return report;
}

CheckReport check_theorem1(double L, double alpha, std::size_t steps, const Vector& theta1) {
  return check_theorem1(make_quadratic(L, 0.1 * L, theta1.size()), alpha, steps, theta1);
}

CheckReport check_unroll_equivalence(const std::vector<Vector>& gradients, double eta,
                                     const std::vector<double>& betas, const Vector& theta0) {
  const std::size_t steps = gradients.size();
  if (betas.size() < steps) throw std::invalid_argument("check_unroll_equivalence: too few betas");
  for (const auto& g : gradients) {
    if (g.size() != theta0.size()) throw std::invalid_argument("check_unroll_equivalence: bad gradient");
  }

  CheckReport report{"unroll_equivalence", true, 0.0, 0.0, ""};
  OptimizerState state(theta0);
  Vector explicit_theta = theta0;
  for (std::size_t t = 0; t < steps; ++t) {
    StepHyper h;
    h.eta = eta;
    h.beta = betas[t];
    state = sgdm_step(std::move(state), gradients[t], h);

    // theta_{t+1} = theta_t - eta g_t - eta sum_{j<t} (prod_{k=j+1}^{t} beta_k) g_j
    for (std::size_t d = 0; d < theta0.size(); ++d) {
      double acc = gradients[t][d];
      for (std::size_t j = 0; j < t; ++j) {
        double product = 1.0;
        for (std::size_t k = j + 1; k <= t; ++k) product *= betas[k];
        acc += product * gradients[j][d];
      }
      explicit_theta[d] -= eta * acc;
    }

    const double abs_err = max_abs_diff(state.theta, explicit_theta);
    double scale = 0.0;
    for (double x : explicit_theta) scale = std::max(scale, std::abs(x));
    const double rel_err = relative(abs_err, scale);
    if (rel_err > report.max_rel_error) {
      report.witness = fmt::format("step {}: abs diff {}", t + 1, abs_err);
    }
    report.max_abs_error = std::max(report.max_abs_error, abs_err);
    report.max_rel_error = std::max(report.max_rel_error, rel_err);
  }
  report.passed = report.max_rel_error <= 1e-10;
  if (report.witness.empty()) report.witness = fmt::format("{} steps, exact agreement", steps);
  return report;
}

CheckReport check_gradient(const Problem& problem, const std::vector<Vector>& points,
                           const GradientCheckOptions& options) {
  const bool quadratic = problem.name().rfind("quadratic", 0) == 0;
  const double tol = options.tolerance.value_or(quadratic ? 1e-6 : 1e-4);
  CheckReport report{fmt::format("gradient[{}]", problem.name()), true, 0.0, 0.0, ""};
  std::vector<std::string> notes;
  std::size_t skipped_coords = 0;

  for (std::size_t p = 0; p < points.size(); ++p) {
    const Vector& theta = points[p];
    Vector analytic;
    try {
      analytic = problem.grad(theta);
      (void)problem.eval(theta);
    } catch (const std::domain_error& e) {
      notes.push_back(fmt::format("point {} skipped: {}", p, e.what()));
      continue;
    }
    const bool kinked = std::isfinite(problem.kink_distance(theta));
    double diff_sq = 0.0;
    double ref_sq = 0.0;
    double fd_sq = 0.0;
    Vector probe = theta;
    for (std::size_t i = 0; i < theta.size(); ++i) {
      const double step = options.h * std::max(1.0, std::abs(theta[i]));
      probe[i] = theta[i] + step;
      const bool near_kink_plus = kinked && problem.kink_distance(probe) < options.kink_margin;
      const double f_plus = problem.eval(probe);
      probe[i] = theta[i] - step;
      const bool near_kink_minus = kinked && problem.kink_distance(probe) < options.kink_margin;
      const double f_minus = problem.eval(probe);
      probe[i] = theta[i];
      if (near_kink_plus || near_kink_minus) {
        ++skipped_coords;
        continue;
      }
      const double fd = (f_plus - f_minus) / (2.0 * step);
      diff_sq += (fd - analytic[i]) * (fd - analytic[i]);
      ref_sq += analytic[i] * analytic[i];
      fd_sq += fd * fd;
    }
    const double abs_err = std::sqrt(diff_sq);
    const double scale = std::max({std::sqrt(ref_sq), std::sqrt(fd_sq), 1e-12});
    const double rel_err = abs_err / scale;
    if (rel_err > report.max_rel_error || report.witness.empty()) {
      report.witness = fmt::format("point {}: rel err {}", p, rel_err);
    }
    report.max_abs_error = std::max(report.max_abs_error, abs_err);
    report.max_rel_error = std::max(report.max_rel_error, rel_err);
  }
  report.passed = report.max_rel_error <= tol;
  if (skipped_coords > 0) notes.push_back(fmt::format("{} coordinates near a kink skipped", skipped_coords));
  for (const auto& note : notes) report.witness += "; " + note;
  return report;
}

namespace {
constexpr std::size_t kSteps = 100;
constexpr double kEta = 0.1;
}  // namespace

std::vector<CheckReport> check_reductions() {
  const Problem problem = make_quadratic(1.0, 0.1, 5);
  const Vector theta0 = problem.initial_point(7);

  auto compare = [](std::string name, auto&& step_a, auto&& step_b, const Problem& prob,
                    const Vector& start) {
    OptimizerState a(start);
    OptimizerState b(start);
    CheckReport report{std::move(name), true, 0.0, 0.0, ""};
    for (std::size_t t = 0; t < kSteps; ++t) {
      const Vector ga = prob.grad(a.theta);
      const Vector gb = prob.grad(b.theta);
      a = step_a(std::move(a), ga, t);
      b = step_b(std::move(b), gb, t);
      const double err = max_abs_diff(a.theta, b.theta);
      if (err > report.max_abs_error) report.witness = fmt::format("step {}: diff {}", t + 1, err);
      report.max_abs_error = std::max(report.max_abs_error, err);
      double scale = 0.0;
      for (double x : b.theta) scale = std::max(scale, std::abs(x));
      report.max_rel_error = std::max(report.max_rel_error, relative(err, scale));
    }
    report.passed = report.max_abs_error <= 1e-14;
    if (report.witness.empty()) report.witness = fmt::format("{} steps, bitwise identical", kSteps);
    return report;
  };

  std::vector<CheckReport> reports;

  reports.push_back(compare(
      "reduction_demon_sgdm_zero_vs_sgd",
      [](OptimizerState s, const Vector& g, std::size_t t) {
        return demon_sgdm_step(std::move(s), g, kEta, 0.0, t, kSteps);
      },
      [](OptimizerState s, const Vector& g, std::size_t) {
        StepHyper h;
        h.eta = kEta;
        return sgd_step(std::move(s), g, h);
      },
      problem, theta0));

  const ScheduleSpec constant = constant_schedule(0.9, ScheduleTarget::Momentum);
  reports.push_back(compare(
      "reduction_constant_schedule_vs_sgdm",
      [&constant](OptimizerState s, const Vector& g, std::size_t t) {
        StepHyper h;
        h.eta = kEta;
        h.beta = schedule_eval(constant, static_cast<double>(t), static_cast<double>(kSteps));
        return sgdm_step(std::move(s), g, h);
      },
      [](OptimizerState s, const Vector& g, std::size_t) {
        StepHyper h;
        h.eta = kEta;
        h.beta = 0.9;
        return sgdm_step(std::move(s), g, h);
      },
      problem, theta0));

  constexpr double kBeta2 = 0.999;
  constexpr double kEps = 1e-8;
  reports.push_back(compare(
      "reduction_demon_adam_zero_vs_second_moment_only",
      [](OptimizerState s, const Vector& g, std::size_t t) {
        StepHyper h;
        h.beta2 = kBeta2;
        h.epsilon = kEps;
        return demon_adam_step(std::move(s), g, kEta, 0.0, t, kSteps, h);
      },
      [](OptimizerState s, const Vector& g, std::size_t) {
        // Gradient divided by the root of an average of squared gradients.
        for (std::size_t i = 0; i < g.size(); ++i) {
          s.second_moment[i] = kBeta2 * s.second_moment[i] + (1.0 - kBeta2) * (g[i] * g[i]);
          s.theta[i] -= kEta * g[i] / std::sqrt(s.second_moment[i] + kEps);
        }
        ++s.step;
        return s;
      },
      problem, theta0));
  return reports;
}

}  // namespace demon
