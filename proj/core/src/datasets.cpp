// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>

#include "demon/problems.hpp"
#include "demon/rng.hpp"

namespace demon {

std::string_view to_string(DataKind kind) {
  switch (kind) {
    case DataKind::TwoGaussians:
      return "two_gaussians";
    case DataKind::TwoMoons:
      return "two_moons";
    case DataKind::MulticlassBlobs:
      return "multiclass_blobs";
  }
  return "unknown";
}

DataKind parse_data_kind(std::string_view name) {
  if (name == "two_gaussians") return DataKind::TwoGaussians;
  if (name == "two_moons") return DataKind::TwoMoons;
  if (name == "multiclass_blobs") return DataKind::MulticlassBlobs;
  throw std::invalid_argument(fmt::format("unknown dataset kind '{}'", name));
}

std::size_t Dataset::num_classes() const {
  double top = -1.0;
  for (double y : labels) top = std::max(top, y);
  return static_cast<std::size_t>(top + 1.0);
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  Dataset out;
  out.n = rows.size();
  out.d = d;
  out.seed = seed;
  out.features.reserve(rows.size() * d);
  out.labels.reserve(rows.size());
  for (std::size_t r : rows) {
    if (r >= n) throw std::out_of_range("Dataset::subset: row index out of range");
    const auto x = row(r);
    out.features.insert(out.features.end(), x.begin(), x.end());
    out.labels.push_back(labels[r]);
  }
  return out;
}

Dataset make_synthetic_data(DataKind kind, std::size_t n, std::size_t d, double noise,
                            std::uint64_t seed) {
  if (n < 2 || d < 2) throw std::invalid_argument("make_synthetic_data: need n >= 2 and d >= 2");
  if (!(noise >= 0.0)) throw std::invalid_argument("make_synthetic_data: noise must be >= 0");
  Dataset data;
  data.n = n;
  data.d = d;
  data.seed = seed;
  data.features.assign(n * d, 0.0);
  data.labels.assign(n, 0.0);
  Rng rng(seed);

  switch (kind) {
    case DataKind::TwoGaussians:
      for (std::size_t i = 0; i < n; ++i) {
        const double sign = i % 2 == 0 ? -1.0 : 1.0;
        data.labels[i] = static_cast<double>(i % 2);
        for (std::size_t j = 0; j < d; ++j) {
          data.features[i * d + j] = noise == 0.0 ? sign : sign + noise * rng.normal();
        }
      }
      break;
    case DataKind::TwoMoons: {
      const std::size_t per_class = (n + 1) / 2;
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t cls = i % 2;
        const std::size_t k = i / 2;
        const double angle =
            per_class > 1 ? std::numbers::pi * static_cast<double>(k) / static_cast<double>(per_class - 1)
                          : 0.0;
        double x = std::cos(angle);
        double y = std::sin(angle);
        if (cls == 1) {
          x = 1.0 - x;
          y = 0.5 - y;
        }
        data.labels[i] = static_cast<double>(cls);
        double* out = &data.features[i * d];
        out[0] = x;
        out[1] = y;
        for (std::size_t j = 0; j < d; ++j) {
          if (noise != 0.0) out[j] += noise * rng.normal();
        }
      }
      break;
    }
    case DataKind::MulticlassBlobs:
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t cls = i % 3;
        const double angle = 2.0 * std::numbers::pi * static_cast<double>(cls) / 3.0;
        data.labels[i] = static_cast<double>(cls);
        double* out = &data.features[i * d];
        out[0] = 2.0 * std::cos(angle);
        out[1] = 2.0 * std::sin(angle);
        for (std::size_t j = 0; j < d; ++j) {
          if (noise != 0.0) out[j] += noise * rng.normal();
        }
      }
      break;
  }
  return data;
}

std::string dataset_filename(DataKind kind, std::size_t n, std::size_t d, double noise,
                             std::uint64_t seed) {
  return fmt::format("{}_{}_{}_{}_{}.csv", to_string(kind), n, d, noise, seed);
}

void write_dataset_csv(const Dataset& data, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error(fmt::format("cannot open '{}' for writing", path.string()));
  for (std::size_t j = 0; j < data.d; ++j) out << 'x' << j << ',';
  out << "label\n";
  for (std::size_t i = 0; i < data.n; ++i) {
    for (double x : data.row(i)) out << fmt::format("{}", x) << ',';
    out << fmt::format("{}", data.labels[i]) << '\n';
  }
  if (!out) throw std::runtime_error(fmt::format("write failed for '{}'", path.string()));
}

Dataset read_dataset_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(fmt::format("cannot open '{}'", path.string()));
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(fmt::format("'{}' is empty", path.string()));
  std::size_t columns = static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) + 1;
  if (columns < 2 || line.substr(line.rfind(',') + 1) != "label") {
    throw std::runtime_error(fmt::format("'{}': header must end with a label column", path.string()));
  }
  Dataset data;
  data.d = columns - 1;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream fields(line);
    std::string cell;
    std::size_t count = 0;
    while (std::getline(fields, cell, ',')) {
      double value = 0.0;
      try {
        value = std::stod(cell);
      } catch (const std::exception&) {
        throw std::runtime_error(
            fmt::format("'{}' line {}: '{}' is not a number", path.string(), line_no, cell));
      }
      if (count < data.d) {
        data.features.push_back(value);
      } else {
        data.labels.push_back(value);
      }
      ++count;
    }
    if (count != columns) {
      throw std::runtime_error(fmt::format("'{}' line {}: expected {} fields, got {}",
                                           path.string(), line_no, columns, count));
    }
  }
  data.n = data.labels.size();
  return data;
}

Split train_validation_split(std::size_t n, std::uint64_t seed, double validation_fraction) {
  if (!(validation_fraction > 0.0 && validation_fraction < 1.0)) {
    throw std::invalid_argument("validation fraction must lie in (0, 1)");
  }
  Rng rng(derive_seed(seed, 0x5eed));
  const auto order = rng.permutation(n);
  const auto n_val = static_cast<std::size_t>(std::llround(validation_fraction * static_cast<double>(n)));
  Split split;
  split.validation.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
  split.train.assign(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.validation.begin(), split.validation.end());
  return split;
}

std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, std::uint64_t epoch) {
  Rng rng(derive_seed(seed, epoch + 1));
  return rng.permutation(n);
}

}  // namespace demon
