// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "demon/optimizers.hpp"

namespace demon {

enum class DataKind { TwoGaussians, TwoMoons, MulticlassBlobs };

std::string_view to_string(DataKind kind);
DataKind parse_data_kind(std::string_view name);

/// Row-major n x d feature matrix with one label per row. Labels are class
/// indices stored as doubles (0, 1, ...).
struct Dataset {
  std::size_t n = 0;
  std::size_t d = 0;
  std::vector<double> features;
  std::vector<double> labels;
  std::uint64_t seed = 0;

  std::span<const double> row(std::size_t i) const { return {features.data() + i * d, d}; }
  std::size_t num_classes() const;
  Dataset subset(std::span<const std::size_t> rows) const;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

/// Deterministic synthetic data; class-balanced to within one sample.
///   TwoGaussians     class 0 at -mu, class 1 at +mu, mu = (1, ..., 1)
///   TwoMoons         interleaved half circles in the first two features
///   MulticlassBlobs  three classes with centres on a circle of radius 2
/// `noise` is the standard deviation of the added Gaussian noise.
Dataset make_synthetic_data(DataKind kind, std::size_t n, std::size_t d, double noise,
                            std::uint64_t seed);

/// kind_n_d_noise_seed.csv
std::string dataset_filename(DataKind kind, std::size_t n, std::size_t d, double noise,
                             std::uint64_t seed);

/// CSV with header x0,...,x{d-1},label.
void write_dataset_csv(const Dataset& data, const std::filesystem::path& path);
Dataset read_dataset_csv(const std::filesystem::path& path);

/// Seeded 80/20 split into (train, validation) row indices. Disjoint and
/// exhaustive; both halves are sorted.
struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
};
Split train_validation_split(std::size_t n, std::uint64_t seed, double validation_fraction = 0.2);

/// Row order for one epoch of mini-batch training over `n` rows.
std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, std::uint64_t epoch);

enum class Activation { Tanh, Relu };

std::string_view to_string(Activation act);
Activation parse_activation(std::string_view name);

namespace detail {

class Objective {
 public:
  virtual ~Objective() = default;
  virtual std::size_t dim() const = 0;
  virtual double value(std::span<const double> theta) const = 0;
  virtual Vector gradient(std::span<const double> theta) const = 0;

  // Data-backed objectives evaluate on a subset of rows; the defaults ignore
  // `rows` (full-batch analytic objectives).
  virtual std::size_t num_samples() const { return 0; }
  virtual double value_rows(std::span<const double> theta, std::span<const std::size_t>) const {
    return value(theta);
  }
  virtual Vector gradient_rows(std::span<const double> theta, std::span<const std::size_t>) const {
    return gradient(theta);
  }
  virtual double kink_distance(std::span<const double>) const {
    return std::numeric_limits<double>::infinity();
  }
  virtual Vector initial_point(std::uint64_t seed) const = 0;
};

}  // namespace detail

/// Immutable differentiable objective. Copies share the underlying
/// objective, and eval/grad are safe to call concurrently.
class Problem {
 public:
  Problem(std::string name, std::shared_ptr<const detail::Objective> objective);

  const std::string& name() const { return name_; }
  std::size_t dim() const { return objective_->dim(); }

  double eval(std::span<const double> theta) const;
  Vector grad(std::span<const double> theta) const;

  /// Number of data rows, 0 for analytic problems.
  std::size_t num_samples() const { return objective_->num_samples(); }
  double eval_rows(std::span<const double> theta, std::span<const std::size_t> rows) const;
  Vector grad_rows(std::span<const double> theta, std::span<const std::size_t> rows) const;

  /// Distance of the nearest ReLU pre-activation from its kink (infinite for
  /// smooth problems).
  double kink_distance(std::span<const double> theta) const {
    return objective_->kink_distance(theta);
  }

  Vector initial_point(std::uint64_t seed) const { return objective_->initial_point(seed); }

  std::optional<double> optimum_value;
  std::optional<Vector> optimum_point;
  std::optional<double> lipschitz_L;
  bool scale_invariant = false;

 private:
  void check_dim(std::span<const double> theta) const;

  std::string name_;
  std::shared_ptr<const detail::Objective> objective_;
};

/// f(theta) = 0.5 * theta' D theta, D diagonal with eigenvalues evenly spaced
/// over [mu, L] (D = L when dim = 1). Optimum 0 at the origin.
Problem make_quadratic(double L, double mu, std::size_t dim);

/// Sum over consecutive pairs (x, y) of (1 - x)^2 + 100 (y - x^2)^2.
Problem make_rosenbrock(std::size_t dim);

/// Mean logistic loss over +-1 labels plus (l2 / 2) ||theta||^2. No bias.
Problem make_logistic(const Dataset& data, double l2);

/// Fully connected softmax classifier trained with mean cross-entropy.
///
/// `layer_sizes` lists input, hidden..., output widths. Parameters are
/// flattened layer by layer; each layer stores its weight matrix row-major
/// (out x in) followed by its bias vector. initial_point() draws weights from
/// N(0, 1 / fan_in) and zero biases.
Problem make_mlp(const std::vector<std::size_t>& layer_sizes, Activation activation,
                 const Dataset& data, std::uint64_t seed);

/// f(theta) = g(theta / ||theta||) for a fixed quartic polynomial g, so that
/// f(c theta) = f(theta) for every c > 0. Undefined at theta = 0.
Problem make_scale_invariant(std::size_t base_dim);

/// Accuracy of the linear model sign(x . theta) on binary labels.
double logistic_accuracy(const Dataset& data, std::span<const double> theta);

}  // namespace demon
