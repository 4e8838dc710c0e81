#include "subsel/io.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iterator>
#include <sstream>

namespace subsel::io {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "'");
  return in;
}

double parse_number(const std::string& field, const std::string& path, std::size_t line) {
  const std::string text = trim(field);
  const std::string where = path + ":" + std::to_string(line);
  if (text.empty()) throw InputError(where + ": empty field");
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(text.c_str(), &end);
  if (end != text.c_str() + text.size()) throw InputError(where + ": cannot parse '" + text + "' as a number");
  if (!std::isfinite(v)) throw NonFiniteValue(where + ": non-finite value '" + text + "'");
  return v;
}

}  // namespace

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream ss(line);
  while (std::getline(ss, cur, sep)) out.push_back(trim(cur));
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

Table read_csv(const std::string& path) {
  auto in = open_input(path);
  std::string line;
  Table table;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!trim(line).empty()) break;
  }
  if (trim(line).empty()) throw InputError("'" + path + "' is empty");
  table.header = split(trim(line), ',');

  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto fields = split(trim(line), ',');
    if (fields.size() != table.header.size())
      throw InputError(path + ":" + std::to_string(lineno) + ": expected " + std::to_string(table.header.size()) +
                       " fields, found " + std::to_string(fields.size()));
    std::vector<double> row;
    row.reserve(fields.size());
    for (const auto& f : fields) row.push_back(parse_number(f, path, lineno));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw InputError("'" + path + "' has a header but no data rows");
  table.values.resize(static_cast<Index>(rows.size()), static_cast<Index>(table.header.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      table.values(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
  return table;
}

std::vector<std::pair<std::string, std::vector<double>>> read_long_csv(const std::string& path) {
  auto in = open_input(path);
  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(in, line)) throw InputError("'" + path + "' is empty");
  ++lineno;
  const auto header = split(trim(line), ',');
  if (header.size() != 2) throw InputError(path + ": long format expects two columns (id, value)");

  std::vector<std::pair<std::string, std::vector<double>>> groups;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto fields = split(trim(line), ',');
    if (fields.size() != 2) throw InputError(path + ":" + std::to_string(lineno) + ": expected 2 fields");
    const double v = parse_number(fields[1], path, lineno);
    auto it = std::find_if(groups.begin(), groups.end(), [&](const auto& g) { return g.first == fields[0]; });
    if (it == groups.end()) {
      groups.push_back({fields[0], {}});
      it = std::prev(groups.end());
    }
    it->second.push_back(v);
  }
  if (groups.empty()) throw InputError("'" + path + "' has no data rows");
  return groups;
}

Matrix<double> read_matrix_csv(const std::string& path) {
  auto in = open_input(path);
  std::string line;
  std::vector<std::vector<double>> rows;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    std::vector<double> row;
    for (const auto& f : split(trim(line), ',')) row.push_back(parse_number(f, path, lineno));
    if (!rows.empty() && row.size() != rows.front().size())
      throw InputError(path + ":" + std::to_string(lineno) + ": ragged matrix row");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw InputError("'" + path + "' is empty");
  Matrix<double> m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
  return m;
}

std::string format_number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
  std::ostringstream out;
  for (std::size_t j = 0; j < header.size(); ++j) out << (j ? "," : "") << header[j];
  out << '\n';
  for (const auto& row : rows) {
    for (std::size_t j = 0; j < row.size(); ++j) out << (j ? "," : "") << row[j];
    out << '\n';
  }
  write_text(path, out.str());
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write '" + path + "'");
  out << text;
  if (!out) throw InputError("failed writing '" + path + "'");
}

}  // namespace subsel::io
