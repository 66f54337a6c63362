// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

namespace demon::cli {

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

/// Line chart with one polyline per series. Non-finite points are dropped.
/// The y axis switches to log scale when every value is positive and the
/// range spans more than three decades. With no points the axes are still
/// drawn.
std::string render_lines(const std::vector<Series>& series, const std::string& x_label,
                         const std::string& y_label);

/// Grid heatmap: one <rect class="cell"> per (lr, momentum) pair, lr along
/// x and momentum along y, one <text class="axis-label"> per axis value.
/// Colors scale linearly between the smallest and largest finite value,
/// lighter for lower. NaN cells (diverged) are drawn grey.
/// `values` is lr-major: values[i * momentum_values.size() + j].
std::string render_heatmap(const std::vector<double>& lr_values,
                           const std::vector<double>& momentum_values,
                           const std::vector<double>& values);

}  // namespace demon::cli
