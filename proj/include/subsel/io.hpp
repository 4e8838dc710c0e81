#pragma once

#include <string>
#include <utility>
#include <vector>

#include "subsel/core.hpp"

namespace subsel::io {

struct Table {
  std::vector<std::string> header;
  Matrix<double> values;
};

/// Headered numeric CSV, one row per observation. NaN and +-Inf are rejected.
Table read_csv(const std::string& path);

/// Long-format (id, value) CSV grouped by id in order of first appearance.
std::vector<std::pair<std::string, std::vector<double>>> read_long_csv(const std::string& path);

/// Headerless square numeric matrix (graph adjacency).
Matrix<double> read_matrix_csv(const std::string& path);

std::string format_number(double v);

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

void write_text(const std::string& path, const std::string& text);

std::vector<std::string> split(const std::string& line, char sep);

}  // namespace subsel::io
