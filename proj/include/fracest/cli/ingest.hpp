#pragma once

#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <istream>
#include <string>
#include <vector>

#include "fracest/core/errors.hpp"

namespace fracest::cli {

struct SeriesSet {
  std::vector<std::vector<double>> series;
  std::vector<std::string> header;  // empty when the file has none
  std::vector<double> true_hurst;   // filled for trajectory CSVs ("index,true_H,v0,...")
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  for (char c : line) {
    if (c == ',') {
      cells.push_back(cell);
      cell.clear();
    } else if (c != '\r') {
      cell += c;
    }
  }
  cells.push_back(cell);
  for (auto& s : cells) {
    const auto b = s.find_first_not_of(" \t");
    const auto e = s.find_last_not_of(" \t");
    s = b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  }
  return cells;
}

inline bool parse_cell(const std::string& s, double& out) {
  if (s.empty()) return false;
  const char* begin = s.data();
  if (*begin == '+') ++begin;
  auto [ptr, ec] = std::from_chars(begin, s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size() && std::isfinite(out);
}

}  // namespace detail

/// Reads comma-separated series with '.' decimals. A first row with no numeric
/// cell is a header. Each row is one series, except that a file whose rows all
/// have a single cell is one series. Trajectory CSVs written by `generate`
/// keep their true H and drop the index column.
inline SeriesSet ingest_series(std::istream& in) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    rows.push_back(detail::split_csv_line(line));
    line_numbers.push_back(lineno);
  }
  if (rows.empty()) throw ParseError("empty input file", 1, 1);

  SeriesSet set;
  std::size_t first = 0;
  bool any_numeric = false;
  for (const auto& c : rows.front()) {
    double v;
    any_numeric |= detail::parse_cell(c, v);
  }
  if (!any_numeric) {
    set.header = rows.front();
    first = 1;
  }
  if (first == rows.size()) throw ParseError("no data rows", line_numbers.front(), 1);

  const bool trajectory = set.header.size() >= 2 && set.header[0] == "index" && set.header[1] == "true_H";
  const std::size_t skip = trajectory ? 2 : 0;

  std::vector<std::vector<double>> parsed;
  for (std::size_t r = first; r < rows.size(); ++r) {
    std::vector<double> values;
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      double v = 0.0;
      if (!detail::parse_cell(rows[r][c], v)) {
        const std::string what = rows[r][c].empty() ? "blank cell" : "non-numeric cell '" + rows[r][c] + "'";
        if (trajectory && c == 1) {
          values.push_back(std::nan(""));
          continue;
        }
        throw ParseError(what, line_numbers[r], c + 1);
      }
      values.push_back(v);
    }
    parsed.push_back(std::move(values));
  }

  bool single_column = !trajectory;
  for (const auto& row : parsed) single_column &= row.size() == 1;
  if (single_column) {
    std::vector<double> column;
    for (const auto& row : parsed) column.push_back(row[0]);
    set.series.push_back(std::move(column));
    return set;
  }
  for (std::size_t r = 0; r < parsed.size(); ++r) {
    auto& row = parsed[r];
    if (trajectory) {
      if (row.size() < 3) throw ParseError("trajectory row without values", line_numbers[first + r], 1);
      set.true_hurst.push_back(row[1]);
      row.erase(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(skip));
    }
    set.series.push_back(std::move(row));
  }
  return set;
}

inline SeriesSet ingest_series(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open input '" + path + "'");
  return ingest_series(in);
}

}  // namespace fracest::cli
