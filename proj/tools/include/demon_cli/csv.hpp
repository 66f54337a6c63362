// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace demon::cli {

/// Plain comma-separated table as written by the harness: no quoting, one
/// header line.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::optional<std::size_t> column(const std::string& name) const;
};

/// Throws std::runtime_error (with the path) when the file cannot be read and
/// std::invalid_argument when a row's width differs from the header's.
CsvTable read_csv(const std::filesystem::path& path);

/// Empty cells and unparsable text become NaN.
double cell_number(const std::string& cell);

}  // namespace demon::cli
