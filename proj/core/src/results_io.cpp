// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "demon/harness.hpp"

namespace demon {
namespace {

using nlohmann::json;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// JSON has no non-finite numbers; they are written as null and read back as NaN.
json number(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

double read_number(const json& j) { return j.is_null() ? kNaN : j.get<double>(); }

json numbers(const std::vector<double>& xs) {
  json out = json::array();
  for (double x : xs) out.push_back(number(x));
  return out;
}

std::vector<double> read_numbers(const json& j) {
  std::vector<double> out;
  for (const auto& x : j) out.push_back(read_number(x));
  return out;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error(fmt::format("cannot open '{}' for writing", path.string()));
  return out;
}

void finish_output(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw std::runtime_error(fmt::format("write to '{}' failed", path.string()));
}

template <typename RowFn>
void read_lines(const std::filesystem::path& path, RowFn on_row) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(fmt::format("cannot open '{}' for reading", path.string()));
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      on_row(json::parse(line));
    } catch (const std::exception& e) {
      throw std::runtime_error(fmt::format("{}:{}: {}", path.string(), line_no, e.what()));
    }
  }
}

json trace_row(const TraceRecord& r) {
  return json{{"t", r.t},
              {"loss", number(r.loss)},
              {"val_metric", r.val_metric ? number(*r.val_metric) : json(nullptr)},
              {"beta_t", number(r.beta_t)},
              {"eta_t", number(r.eta_t)},
              {"theta_norm_sq", number(r.theta_norm_sq)},
              {"v_norm_sq", number(r.v_norm_sq)},
              {"grad_norm", number(r.grad_norm)}};
}

json grid_row(const GridCell& c) {
  return json{{"lr", number(c.lr)},
              {"momentum", number(c.momentum)},
              {"seeds", c.seeds},
              {"final_train_loss", numbers(c.final_train_loss)},
              {"final_val", numbers(c.final_val)},
              {"best_val", numbers(c.best_val)},
              {"mean_final_train", number(c.mean_final_train)},
              {"mean_final_val", number(c.mean_final_val)},
              {"std_final_val", number(c.std_final_val)},
              {"mean_best_val", number(c.mean_best_val)},
              {"diverged_count", c.diverged_count}};
}

}  // namespace

std::string format_number(double value) { return fmt::format("{}", value); }

void emit_results(const Trace& trace, const std::filesystem::path& path, OutputFormat format) {
  auto out = open_output(path);
  if (format == OutputFormat::Csv) {
    out << "t,loss,val_metric,beta_t,eta_t,theta_norm_sq,v_norm_sq,grad_norm\n";
    for (const auto& r : trace.records) {
      out << r.t << ',' << format_number(r.loss) << ','
          << (r.val_metric ? format_number(*r.val_metric) : std::string()) << ','
          << format_number(r.beta_t) << ',' << format_number(r.eta_t) << ','
          << format_number(r.theta_norm_sq) << ',' << format_number(r.v_norm_sq) << ','
          << format_number(r.grad_norm) << '\n';
    }
  } else {
    for (const auto& r : trace.records) out << trace_row(r).dump() << '\n';
  }
  finish_output(out, path);
}

void emit_results(const GridResult& result, const std::filesystem::path& path, OutputFormat format) {
  auto out = open_output(path);
  if (format == OutputFormat::Csv) {
    out << "lr,momentum,mean_final_val,std_final_val,diverged_count,n_seeds\n";
    for (const auto& c : result.cells) {
      out << format_number(c.lr) << ',' << format_number(c.momentum) << ','
          << format_number(c.mean_final_val) << ',' << format_number(c.std_final_val) << ','
          << c.diverged_count << ',' << c.seeds.size() << '\n';
    }
  } else {
    for (const auto& c : result.cells) out << grid_row(c).dump() << '\n';
  }
  finish_output(out, path);
}

std::vector<TraceRecord> read_trace_jsonl(const std::filesystem::path& path) {
  std::vector<TraceRecord> records;
  read_lines(path, [&](const json& j) {
    TraceRecord r;
    r.t = j.at("t").get<std::uint64_t>();
    r.loss = read_number(j.at("loss"));
    if (!j.at("val_metric").is_null()) r.val_metric = j.at("val_metric").get<double>();
    r.beta_t = read_number(j.at("beta_t"));
    r.eta_t = read_number(j.at("eta_t"));
    r.theta_norm_sq = read_number(j.at("theta_norm_sq"));
    r.v_norm_sq = read_number(j.at("v_norm_sq"));
    r.grad_norm = read_number(j.at("grad_norm"));
    records.push_back(r);
  });
  return records;
}

GridResult read_grid_jsonl(const std::filesystem::path& path) {
  GridResult result;
  read_lines(path, [&](const json& j) {
    GridCell c;
    c.lr = read_number(j.at("lr"));
    c.momentum = read_number(j.at("momentum"));
    c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    c.final_train_loss = read_numbers(j.at("final_train_loss"));
    c.final_val = read_numbers(j.at("final_val"));
    c.best_val = read_numbers(j.at("best_val"));
    c.mean_final_train = read_number(j.at("mean_final_train"));
    c.mean_final_val = read_number(j.at("mean_final_val"));
    c.std_final_val = read_number(j.at("std_final_val"));
    c.mean_best_val = read_number(j.at("mean_best_val"));
    c.diverged_count = j.at("diverged_count").get<std::size_t>();
    result.cells.push_back(std::move(c));
  });
  // Cells are lr-major, so the axes are recoverable from the row order.
  for (const auto& c : result.cells) {
    if (result.lr_values.empty() || result.lr_values.back() != c.lr) result.lr_values.push_back(c.lr);
    if (result.lr_values.size() == 1) result.momentum_values.push_back(c.momentum);
  }
  if (!result.momentum_values.empty() &&
      result.lr_values.size() * result.momentum_values.size() != result.cells.size()) {
    throw std::runtime_error(fmt::format("'{}': rows do not form an lr x momentum grid", path.string()));
  }
  return result;
}

}  // namespace demon
