// SPDX-License-Identifier: Apache-2.0
#include "demon/problems.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <utility>

#include <fmt/format.h>

#include "demon/rng.hpp"

namespace demon {
namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

std::vector<std::size_t> all_rows(std::size_t n) {
  std::vector<std::size_t> rows(n);
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return rows;
}

Vector normal_vector(std::size_t n, std::uint64_t seed, double scale) {
  Rng rng(seed);
  Vector v(n);
  for (double& x : v) x = scale * rng.normal();
  return v;
}

// ---------------------------------------------------------------------------

class Quadratic final : public detail::Objective {
 public:
  explicit Quadratic(Vector diag) : diag_(std::move(diag)) {}

  std::size_t dim() const override { return diag_.size(); }

  double value(std::span<const double> theta) const override {
    double s = 0.0;
    for (std::size_t i = 0; i < diag_.size(); ++i) s += diag_[i] * theta[i] * theta[i];
    return 0.5 * s;
  }

  Vector gradient(std::span<const double> theta) const override {
    Vector g(diag_.size());
    for (std::size_t i = 0; i < diag_.size(); ++i) g[i] = diag_[i] * theta[i];
    return g;
  }

  Vector initial_point(std::uint64_t seed) const override {
    return normal_vector(diag_.size(), seed, 1.0);
  }

 private:
  Vector diag_;
};

class Rosenbrock final : public detail::Objective {
 public:
  explicit Rosenbrock(std::size_t dim) : dim_(dim) {}

  std::size_t dim() const override { return dim_; }

  double value(std::span<const double> theta) const override {
    double s = 0.0;
    for (std::size_t i = 0; i < dim_; i += 2) {
      const double x = theta[i];
      const double y = theta[i + 1];
      s += (1.0 - x) * (1.0 - x) + 100.0 * (y - x * x) * (y - x * x);
    }
    return s;
  }

  Vector gradient(std::span<const double> theta) const override {
    Vector g(dim_);
    for (std::size_t i = 0; i < dim_; i += 2) {
      const double x = theta[i];
      const double y = theta[i + 1];
      const double r = y - x * x;
      g[i] = -2.0 * (1.0 - x) - 400.0 * x * r;
      g[i + 1] = 200.0 * r;
    }
    return g;
  }

  Vector initial_point(std::uint64_t seed) const override {
    Rng rng(seed);
    Vector v(dim_);
    for (std::size_t i = 0; i < dim_; i += 2) {
      v[i] = -1.2 + 0.1 * rng.normal();
      v[i + 1] = 1.0 + 0.1 * rng.normal();
    }
    return v;
  }

 private:
  std::size_t dim_;
};

class Logistic final : public detail::Objective {
 public:
  Logistic(Dataset data, double l2) : data_(std::move(data)), l2_(l2) {}

  std::size_t dim() const override { return data_.d; }
  std::size_t num_samples() const override { return data_.n; }

  double value(std::span<const double> theta) const override {
    return value_rows(theta, all_rows(data_.n));
  }
  Vector gradient(std::span<const double> theta) const override {
    return gradient_rows(theta, all_rows(data_.n));
  }

  double value_rows(std::span<const double> theta,
                    std::span<const std::size_t> rows) const override {
    double s = 0.0;
    for (std::size_t r : rows) {
      const double margin = signed_label(r) * dot(data_.row(r), theta);
      // softplus(-margin), stable for both signs
      const double x = -margin;
      s += std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
    }
    return s / static_cast<double>(rows.size()) + 0.5 * l2_ * dot(theta, theta);
  }

  Vector gradient_rows(std::span<const double> theta,
                       std::span<const std::size_t> rows) const override {
    Vector g(data_.d, 0.0);
    const double inv_n = 1.0 / static_cast<double>(rows.size());
    for (std::size_t r : rows) {
      const double y = signed_label(r);
      const auto x = data_.row(r);
      const double margin = y * dot(x, theta);
      const double weight = -y / (1.0 + std::exp(margin));
      for (std::size_t j = 0; j < data_.d; ++j) g[j] += weight * x[j];
    }
    for (std::size_t j = 0; j < data_.d; ++j) g[j] = g[j] * inv_n + l2_ * theta[j];
    return g;
  }

  Vector initial_point(std::uint64_t seed) const override {
    return normal_vector(data_.d, seed, 0.1);
  }

 private:
  double signed_label(std::size_t r) const { return data_.labels[r] > 0.5 ? 1.0 : -1.0; }

  Dataset data_;
  double l2_;
};

class Mlp final : public detail::Objective {
 public:
  Mlp(std::vector<std::size_t> sizes, Activation act, Dataset data, std::uint64_t seed)
      : sizes_(std::move(sizes)), act_(act), data_(std::move(data)), seed_(seed) {
    std::size_t offset = 0;
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
      weight_offset_.push_back(offset);
      offset += sizes_[l + 1] * sizes_[l];
      bias_offset_.push_back(offset);
      offset += sizes_[l + 1];
    }
    dim_ = offset;
  }

  std::size_t dim() const override { return dim_; }
  std::size_t num_samples() const override { return data_.n; }

  double value(std::span<const double> theta) const override {
    return value_rows(theta, all_rows(data_.n));
  }
  Vector gradient(std::span<const double> theta) const override {
    return gradient_rows(theta, all_rows(data_.n));
  }

  double value_rows(std::span<const double> theta,
                    std::span<const std::size_t> rows) const override {
    Workspace ws(sizes_);
    double loss = 0.0;
    for (std::size_t r : rows) loss += forward(theta, r, ws);
    return loss / static_cast<double>(rows.size());
  }

  Vector gradient_rows(std::span<const double> theta,
                       std::span<const std::size_t> rows) const override {
    Vector g(dim_, 0.0);
    Workspace ws(sizes_);
    const double inv_n = 1.0 / static_cast<double>(rows.size());
    const std::size_t layers = sizes_.size() - 1;
    for (std::size_t r : rows) {
      forward(theta, r, ws);
      // Softmax cross-entropy: dL/dz = p - onehot(y).
      auto& delta = ws.delta[layers - 1];
      delta = ws.probs;
      delta[static_cast<std::size_t>(data_.labels[r])] -= 1.0;
      for (std::size_t l = layers; l-- > 0;) {
        const std::size_t in = sizes_[l];
        const std::size_t out = sizes_[l + 1];
        const auto& input = ws.act[l];
        const double* w = theta.data() + weight_offset_[l];
        double* gw = g.data() + weight_offset_[l];
        double* gb = g.data() + bias_offset_[l];
        const auto& d = ws.delta[l];
        for (std::size_t o = 0; o < out; ++o) {
          const double scaled = d[o] * inv_n;
          gb[o] += scaled;
          for (std::size_t i = 0; i < in; ++i) gw[o * in + i] += scaled * input[i];
        }
        if (l == 0) break;
        auto& prev = ws.delta[l - 1];
        std::fill(prev.begin(), prev.end(), 0.0);
        for (std::size_t o = 0; o < out; ++o) {
          for (std::size_t i = 0; i < in; ++i) prev[i] += w[o * in + i] * d[o];
        }
        const auto& z = ws.pre[l - 1];
        for (std::size_t i = 0; i < in; ++i) prev[i] *= activation_derivative(z[i], ws.act[l][i]);
      }
    }
    return g;
  }

  double kink_distance(std::span<const double> theta) const override {
    if (act_ != Activation::Relu) return std::numeric_limits<double>::infinity();
    Workspace ws(sizes_);
    double nearest = std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < data_.n; ++r) {
      forward(theta, r, ws);
      for (std::size_t l = 0; l + 2 < sizes_.size(); ++l) {
        for (double z : ws.pre[l]) nearest = std::min(nearest, std::abs(z));
      }
    }
    return nearest;
  }

  Vector initial_point(std::uint64_t seed) const override {
    Rng rng(derive_seed(seed_, seed));
    Vector theta(dim_, 0.0);
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
      const double scale = 1.0 / std::sqrt(static_cast<double>(sizes_[l]));
      const std::size_t count = sizes_[l + 1] * sizes_[l];
      for (std::size_t k = 0; k < count; ++k) theta[weight_offset_[l] + k] = scale * rng.normal();
    }
    return theta;
  }

 private:
  struct Workspace {
    explicit Workspace(const std::vector<std::size_t>& sizes) {
      for (std::size_t l = 0; l < sizes.size(); ++l) act.emplace_back(sizes[l], 0.0);
      for (std::size_t l = 1; l < sizes.size(); ++l) {
        pre.emplace_back(sizes[l], 0.0);
        delta.emplace_back(sizes[l], 0.0);
      }
      probs.assign(sizes.back(), 0.0);
    }
    std::vector<Vector> act;    // act[0] is the input, act[l] the output of layer l
    std::vector<Vector> pre;    // pre[l] = W_l act[l] + b_l
    std::vector<Vector> delta;  // dL/dpre[l]
    Vector probs;
  };

  double activate(double z) const { return act_ == Activation::Tanh ? std::tanh(z) : std::max(z, 0.0); }

  double activation_derivative(double z, double a) const {
    if (act_ == Activation::Tanh) return 1.0 - a * a;
    return z > 0.0 ? 1.0 : 0.0;
  }

  // Returns the cross-entropy of row r and fills the workspace.
  double forward(std::span<const double> theta, std::size_t r, Workspace& ws) const {
    const auto x = data_.row(r);
    std::copy(x.begin(), x.end(), ws.act[0].begin());
    const std::size_t layers = sizes_.size() - 1;
    for (std::size_t l = 0; l < layers; ++l) {
      const std::size_t in = sizes_[l];
      const std::size_t out = sizes_[l + 1];
      const double* w = theta.data() + weight_offset_[l];
      const double* b = theta.data() + bias_offset_[l];
      for (std::size_t o = 0; o < out; ++o) {
        double z = b[o];
        for (std::size_t i = 0; i < in; ++i) z += w[o * in + i] * ws.act[l][i];
        ws.pre[l][o] = z;
        ws.act[l + 1][o] = l + 1 < layers ? activate(z) : z;
      }
    }
    const auto& logits = ws.pre[layers - 1];
    const double top = *std::max_element(logits.begin(), logits.end());
    double total = 0.0;
    for (std::size_t k = 0; k < logits.size(); ++k) {
      ws.probs[k] = std::exp(logits[k] - top);
      total += ws.probs[k];
    }
    for (double& p : ws.probs) p /= total;
    const auto label = static_cast<std::size_t>(data_.labels[r]);
    return std::log(total) + top - logits[label];
  }

  std::vector<std::size_t> sizes_;
  Activation act_;
  Dataset data_;
  std::uint64_t seed_;
  std::vector<std::size_t> weight_offset_;
  std::vector<std::size_t> bias_offset_;
  std::size_t dim_ = 0;
};

// g(u) = sum_i a_i u_i^2 + b_i u_i^4 + c_i u_i u_{i+1 mod n}, evaluated on
// u = theta / ||theta||.
class ScaleInvariant final : public detail::Objective {
 public:
  explicit ScaleInvariant(std::size_t n) : a_(n), b_(n), c_(n) {
    for (std::size_t i = 0; i < n; ++i) {
      a_[i] = 1.0 + static_cast<double>(i) / static_cast<double>(n);
      b_[i] = 0.5 + 0.25 * static_cast<double>(i % 3);
      c_[i] = i % 2 == 0 ? 0.3 : -0.3;
    }
  }

  std::size_t dim() const override { return a_.size(); }

  double value(std::span<const double> theta) const override {
    const Vector u = normalized(theta);
    const std::size_t n = u.size();
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double u2 = u[i] * u[i];
      s += a_[i] * u2 + b_[i] * u2 * u2 + c_[i] * u[i] * u[(i + 1) % n];
    }
    return s;
  }

  Vector gradient(std::span<const double> theta) const override {
    const double norm = std::sqrt(dot(theta, theta));
    const Vector u = normalized(theta);
    const std::size_t n = u.size();
    Vector gu(n);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t next = (i + 1) % n;
      const std::size_t prev = (i + n - 1) % n;
      gu[i] = 2.0 * a_[i] * u[i] + 4.0 * b_[i] * u[i] * u[i] * u[i] + c_[i] * u[next] +
              c_[prev] * u[prev];
    }
    // Chain rule through u = theta / ||theta||: (I - u u') grad_u / ||theta||.
    const double radial = dot(gu, u);
    Vector g(n);
    for (std::size_t i = 0; i < n; ++i) g[i] = (gu[i] - radial * u[i]) / norm;
    return g;
  }

  Vector initial_point(std::uint64_t seed) const override {
    return normal_vector(a_.size(), seed, 1.0);
  }

 private:
  static Vector normalized(std::span<const double> theta) {
    const double norm = std::sqrt(dot(theta, theta));
    if (!(norm > 0.0) || !std::isfinite(norm)) {
      throw std::domain_error("scale-invariant objective is undefined at theta = 0");
    }
    Vector u(theta.begin(), theta.end());
    for (double& x : u) x /= norm;
    return u;
  }

  Vector a_, b_, c_;
};

}  // namespace

// ---------------------------------------------------------------------------

std::string_view to_string(Activation act) { return act == Activation::Tanh ? "tanh" : "relu"; }

Activation parse_activation(std::string_view name) {
  if (name == "tanh") return Activation::Tanh;
  if (name == "relu") return Activation::Relu;
  throw std::invalid_argument(fmt::format("unknown activation '{}'", name));
}

Problem::Problem(std::string name, std::shared_ptr<const detail::Objective> objective)
    : name_(std::move(name)), objective_(std::move(objective)) {}

void Problem::check_dim(std::span<const double> theta) const {
  if (theta.size() != dim()) {
    throw std::invalid_argument(
        fmt::format("{}: parameter dimension {} != {}", name_, theta.size(), dim()));
  }
}

double Problem::eval(std::span<const double> theta) const {
  check_dim(theta);
  return objective_->value(theta);
}

Vector Problem::grad(std::span<const double> theta) const {
  check_dim(theta);
  return objective_->gradient(theta);
}

double Problem::eval_rows(std::span<const double> theta, std::span<const std::size_t> rows) const {
  check_dim(theta);
  if (rows.empty()) throw std::invalid_argument("eval_rows: empty row set");
  return objective_->value_rows(theta, rows);
}

Vector Problem::grad_rows(std::span<const double> theta, std::span<const std::size_t> rows) const {
  check_dim(theta);
  if (rows.empty()) throw std::invalid_argument("grad_rows: empty row set");
  return objective_->gradient_rows(theta, rows);
}

Problem make_quadratic(double L, double mu, std::size_t dim) {
  if (dim < 1) throw std::invalid_argument("make_quadratic: dim must be >= 1");
  if (!(L > 0.0)) throw std::invalid_argument("make_quadratic: L must be > 0");
  if (!(mu > 0.0) || mu > L) {
    throw std::invalid_argument(fmt::format("make_quadratic: mu = {} must lie in (0, L = {}]", mu, L));
  }
  Vector diag(dim, L);
  for (std::size_t i = 0; i + 1 < dim; ++i) {
    diag[i] = mu + (L - mu) * static_cast<double>(i) / static_cast<double>(dim - 1);
  }
  Problem p(fmt::format("quadratic(L={},mu={},dim={})", L, mu, dim),
            std::make_shared<Quadratic>(std::move(diag)));
  p.optimum_value = 0.0;
  p.optimum_point = Vector(dim, 0.0);
  p.lipschitz_L = L;
  return p;
}

Problem make_rosenbrock(std::size_t dim) {
  if (dim < 2 || dim % 2 != 0) {
    throw std::invalid_argument(fmt::format("make_rosenbrock: dim = {} must be even and >= 2", dim));
  }
  Problem p(fmt::format("rosenbrock(dim={})", dim), std::make_shared<Rosenbrock>(dim));
  p.optimum_value = 0.0;
  p.optimum_point = Vector(dim, 1.0);
  return p;
}

Problem make_logistic(const Dataset& data, double l2) {
  if (!(l2 >= 0.0)) throw std::invalid_argument("make_logistic: l2 must be >= 0");
  if (data.n == 0) throw std::invalid_argument("make_logistic: empty dataset");
  double max_row_sq = 0.0;
  for (std::size_t i = 0; i < data.n; ++i) {
    const double y = data.labels[i];
    if (y != 0.0 && y != 1.0) {
      throw std::invalid_argument(fmt::format("make_logistic: label {} at row {} is not binary", y, i));
    }
    max_row_sq = std::max(max_row_sq, dot(data.row(i), data.row(i)));
  }
  Problem p(fmt::format("logistic(n={},d={},l2={})", data.n, data.d, l2),
            std::make_shared<Logistic>(data, l2));
  p.lipschitz_L = max_row_sq / 4.0 + l2;
  return p;
}

Problem make_mlp(const std::vector<std::size_t>& layer_sizes, Activation activation,
                 const Dataset& data, std::uint64_t seed) {
  if (layer_sizes.size() < 3) {
    throw std::invalid_argument("make_mlp: need input, at least one hidden, and output layer");
  }
  if (std::find(layer_sizes.begin(), layer_sizes.end(), std::size_t{0}) != layer_sizes.end()) {
    throw std::invalid_argument("make_mlp: layer widths must be positive");
  }
  if (layer_sizes.front() != data.d) {
    throw std::invalid_argument(fmt::format("make_mlp: input width {} != feature dimension {}",
                                            layer_sizes.front(), data.d));
  }
  if (data.n == 0) throw std::invalid_argument("make_mlp: empty dataset");
  for (double y : data.labels) {
    if (y < 0.0 || y != std::floor(y) || y >= static_cast<double>(layer_sizes.back())) {
      throw std::invalid_argument(
          fmt::format("make_mlp: label {} does not fit output width {}", y, layer_sizes.back()));
    }
  }
  std::string shape;
  for (std::size_t i = 0; i < layer_sizes.size(); ++i) {
    shape += (i ? "-" : "") + std::to_string(layer_sizes[i]);
  }
  return Problem(fmt::format("mlp({},{},n={})", shape, to_string(activation), data.n),
                 std::make_shared<Mlp>(layer_sizes, activation, data, seed));
}

Problem make_scale_invariant(std::size_t base_dim) {
  if (base_dim < 2) throw std::invalid_argument("make_scale_invariant: base_dim must be >= 2");
  Problem p(fmt::format("scale_invariant(dim={})", base_dim),
            std::make_shared<ScaleInvariant>(base_dim));
  p.scale_invariant = true;
  return p;
}

double logistic_accuracy(const Dataset& data, std::span<const double> theta) {
  if (data.n == 0) return 0.0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.n; ++i) {
    const bool predicted = dot(data.row(i), theta) > 0.0;
    if (predicted == (data.labels[i] > 0.5)) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.n);
}

}  // namespace demon
