// SPDX-License-Identifier: Apache-2.0
#include "demon_cli/svg.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <limits>
#include <stdexcept>

#include <fmt/format.h>

namespace demon::cli {
namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 400.0;
constexpr double kLeft = 80.0;
constexpr double kRight = 160.0;
constexpr double kTop = 30.0;
constexpr double kBottom = 60.0;

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                    "#9467bd", "#8c564b", "#e377c2", "#17becf"};

std::string escape(const std::string& text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string header(double width, double height) {
  return fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0:.0f}\" height=\"{1:.0f}\" "
      "viewBox=\"0 0 {0:.0f} {1:.0f}\" font-family=\"sans-serif\" font-size=\"12\">\n",
      width, height);
}

struct Range {
  double lo = 0.0;
  double hi = 1.0;
};

Range finite_range(const std::vector<Series>& series, bool use_x, bool log_scale) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      double v = use_x ? s.x[i] : s.y[i];
      if (log_scale) v = std::log10(v);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  if (!std::isfinite(lo)) return {};
  if (lo == hi) return {lo - 0.5, hi + 0.5};
  return {lo, hi};
}

bool wants_log_y(const std::vector<Series>& series) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.y.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      if (s.y[i] <= 0.0) return false;
      lo = std::min(lo, s.y[i]);
      hi = std::max(hi, s.y[i]);
    }
  }
  return std::isfinite(lo) && hi / lo > 1e3;
}

}  // namespace

std::string render_lines(const std::vector<Series>& series, const std::string& x_label,
                         const std::string& y_label) {
  for (const auto& s : series) {
    if (s.x.size() != s.y.size()) throw std::invalid_argument("series x and y differ in length");
  }
  const bool log_y = wants_log_y(series);
  const Range xr = finite_range(series, true, false);
  const Range yr = finite_range(series, false, log_y);
  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  auto px = [&](double x) { return kLeft + (x - xr.lo) / (xr.hi - xr.lo) * plot_w; };
  auto py = [&](double y) {
    const double v = log_y ? std::log10(y) : y;
    return kTop + plot_h - (v - yr.lo) / (yr.hi - yr.lo) * plot_h;
  };

  std::string svg = header(kWidth, kHeight);
  svg += fmt::format(
      "<g class=\"axes\" stroke=\"#333\" fill=\"none\">"
      "<line x1=\"{0:.2f}\" y1=\"{1:.2f}\" x2=\"{2:.2f}\" y2=\"{1:.2f}\"/>"
      "<line x1=\"{0:.2f}\" y1=\"{1:.2f}\" x2=\"{0:.2f}\" y2=\"{3:.2f}\"/></g>\n",
      kLeft, kTop + plot_h, kLeft + plot_w, kTop);
  for (int i = 0; i <= 4; ++i) {
    const double fx = xr.lo + (xr.hi - xr.lo) * i / 4.0;
    const double fy = yr.lo + (yr.hi - yr.lo) * i / 4.0;
    svg += fmt::format("<text class=\"tick\" x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"middle\">{:.3g}</text>\n",
                       px(fx), kTop + plot_h + 16.0, fx);
    const double y_pos = kTop + plot_h - plot_h * i / 4.0;
    svg += fmt::format("<text class=\"tick\" x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"end\">{:.3g}</text>\n",
                       kLeft - 6.0, y_pos + 4.0, log_y ? std::pow(10.0, fy) : fy);
  }
  svg += fmt::format("<text class=\"axis-title\" x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"middle\">{}</text>\n",
                     kLeft + plot_w / 2.0, kHeight - 16.0, escape(x_label));
  svg += fmt::format(
      "<text class=\"axis-title\" x=\"16\" y=\"{0:.2f}\" text-anchor=\"middle\" "
      "transform=\"rotate(-90 16 {0:.2f})\">{1}{2}</text>\n",
      kTop + plot_h / 2.0, escape(y_label), log_y ? " (log)" : "");

  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* color = kPalette[k % std::size(kPalette)];
    std::string points;
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i]) || (log_y && s.y[i] <= 0.0)) continue;
      if (!points.empty()) points += ' ';
      points += fmt::format("{:.2f},{:.2f}", px(s.x[i]), py(s.y[i]));
    }
    svg += fmt::format(
        "<polyline class=\"series\" data-name=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\" "
        "points=\"{}\"/>\n",
        escape(s.name), color, points);
    const double ly = kTop + 14.0 + 18.0 * static_cast<double>(k);
    svg += fmt::format(
        "<line class=\"legend\" x1=\"{0:.2f}\" y1=\"{1:.2f}\" x2=\"{2:.2f}\" y2=\"{1:.2f}\" stroke=\"{3}\" "
        "stroke-width=\"2\"/><text class=\"legend\" x=\"{4:.2f}\" y=\"{5:.2f}\">{6}</text>\n",
        kLeft + plot_w + 12.0, ly, kLeft + plot_w + 32.0, color, kLeft + plot_w + 38.0, ly + 4.0,
        escape(s.name));
  }
  svg += "</svg>\n";
  return svg;
}

std::string render_heatmap(const std::vector<double>& lr_values,
                           const std::vector<double>& momentum_values,
                           const std::vector<double>& values) {
  if (values.size() != lr_values.size() * momentum_values.size()) {
    throw std::invalid_argument("heatmap values do not match the axes");
  }
  constexpr double cell_w = 90.0;
  constexpr double cell_h = 50.0;
  const double grid_w = cell_w * static_cast<double>(lr_values.size());
  const double grid_h = cell_h * static_cast<double>(momentum_values.size());
  const double width = kLeft + grid_w + 40.0;
  const double height = kTop + grid_h + kBottom + 20.0;

  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (double v : values) {
    if (!std::isfinite(v)) continue;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }

  std::string svg = header(width, height);
  for (std::size_t i = 0; i < lr_values.size(); ++i) {
    for (std::size_t j = 0; j < momentum_values.size(); ++j) {
      const double v = values[i * momentum_values.size() + j];
      std::string fill = "#9e9e9e";
      if (std::isfinite(v)) {
        const double f = hi > lo ? (v - lo) / (hi - lo) : 0.0;
        // Linear ramp from near-white (lowest) to dark blue (highest).
        const auto mix = [f](double a, double b) { return static_cast<int>(std::lround(a + (b - a) * f)); };
        fill = fmt::format("#{:02x}{:02x}{:02x}", mix(247, 8), mix(251, 48), mix(255, 107));
      }
      const double x = kLeft + cell_w * static_cast<double>(i);
      const double y = kTop + cell_h * static_cast<double>(momentum_values.size() - 1 - j);
      svg += fmt::format(
          "<rect class=\"cell\" x=\"{:.2f}\" y=\"{:.2f}\" width=\"{:.2f}\" height=\"{:.2f}\" fill=\"{}\" "
          "stroke=\"#ffffff\" data-lr=\"{}\" data-momentum=\"{}\" data-value=\"{}\"/>\n",
          x, y, cell_w, cell_h, fill, lr_values[i], momentum_values[j],
          std::isfinite(v) ? fmt::format("{}", v) : std::string("diverged"));
      const bool dark = std::isfinite(v) && hi > lo && (v - lo) / (hi - lo) > 0.5;
      svg += fmt::format(
          "<text class=\"cell-value\" x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"middle\" fill=\"{}\">{}</text>\n",
          x + cell_w / 2.0, y + cell_h / 2.0 + 4.0, dark ? "#ffffff" : "#000000",
          std::isfinite(v) ? fmt::format("{:.3g}", v) : std::string("div"));
    }
  }
  for (std::size_t i = 0; i < lr_values.size(); ++i) {
    svg += fmt::format("<text class=\"axis-label\" x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"middle\">{:.3g}</text>\n",
                       kLeft + cell_w * (static_cast<double>(i) + 0.5), kTop + grid_h + 16.0, lr_values[i]);
  }
  for (std::size_t j = 0; j < momentum_values.size(); ++j) {
    const double y = kTop + cell_h * (static_cast<double>(momentum_values.size() - 1 - j) + 0.5);
    svg += fmt::format("<text class=\"axis-label\" x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"end\">{:.3g}</text>\n",
                       kLeft - 6.0, y + 4.0, momentum_values[j]);
  }
  svg += fmt::format("<text class=\"axis-title\" x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"middle\">learning rate</text>\n",
                     kLeft + grid_w / 2.0, kTop + grid_h + 36.0);
  svg += fmt::format(
      "<text class=\"axis-title\" x=\"16\" y=\"{0:.2f}\" text-anchor=\"middle\" "
      "transform=\"rotate(-90 16 {0:.2f})\">momentum</text>\n",
      kTop + grid_h / 2.0);
  svg += fmt::format("<text class=\"note\" x=\"{:.2f}\" y=\"{:.2f}\">lighter is lower</text>\n", kLeft,
                     kTop + grid_h + 56.0);
  svg += "</svg>\n";
  return svg;
}

}  // namespace demon::cli
