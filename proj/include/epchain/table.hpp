#pragma once

// Column-oriented result tables and their CSV / JSON serializations.
// Floats are printed with 17 significant digits so equal inputs give
// byte-identical files.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "epchain/error.hpp"

namespace epchain {

using Cell = std::variant<std::monostate, double, long long, std::string>;

enum class OutputFormat { Csv, Json };

inline OutputFormat parse_format(const std::string& text) {
  if (text == "csv") return OutputFormat::Csv;
  if (text == "json") return OutputFormat::Json;
  throw Error(ErrorCode::ConfigError, "format must be csv or json, got '" + text + "'");
}

inline const char* extension(OutputFormat f) { return f == OutputFormat::Csv ? "csv" : "json"; }

inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  void add_row(std::vector<Cell> row) {
    if (row.size() != columns.size())
      throw Error(ErrorCode::DimensionMismatch,
                  "row has " + std::to_string(row.size()) + " cells, table has " +
                      std::to_string(columns.size()) + " columns");
    rows.push_back(std::move(row));
  }
};

namespace detail {

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

inline std::string csv_cell(const Cell& c) {
  struct {
    std::string operator()(std::monostate) const { return ""; }
    std::string operator()(double v) const { return format_double(v); }
    std::string operator()(long long v) const { return std::to_string(v); }
    std::string operator()(const std::string& v) const { return csv_field(v); }
  } visit;
  return std::visit(visit, c);
}

inline nlohmann::json json_cell(const Cell& c) {
  struct {
    nlohmann::json operator()(std::monostate) const { return nullptr; }
    nlohmann::json operator()(double v) const {
      if (std::isfinite(v)) return v;
      return format_double(v);
    }
    nlohmann::json operator()(long long v) const { return v; }
    nlohmann::json operator()(const std::string& v) const { return v; }
  } visit;
  return std::visit(visit, c);
}

}  // namespace detail

inline void write_csv(std::ostream& os, const Table& t) {
  for (std::size_t i = 0; i < t.columns.size(); ++i)
    os << (i ? "," : "") << detail::csv_field(t.columns[i]);
  os << '\n';
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << detail::csv_cell(row[i]);
    os << '\n';
  }
}

inline nlohmann::json to_json(const Table& t) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : t.rows) {
    nlohmann::json r = nlohmann::json::array();
    for (const auto& c : row) r.push_back(detail::json_cell(c));
    rows.push_back(std::move(r));
  }
  return {{"columns", t.columns}, {"rows", std::move(rows)}};
}

inline void write_table(std::ostream& os, const Table& t, OutputFormat f) {
  if (f == OutputFormat::Csv)
    write_csv(os, t);
  else
    os << to_json(t).dump(1) << '\n';
}

inline void write_table(const std::string& path, const Table& t, OutputFormat f) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorCode::ConfigError, "cannot open '" + path + "' for writing");
  write_table(os, t, f);
  if (!os) throw Error(ErrorCode::ConfigError, "write to '" + path + "' failed");
}

}  // namespace epchain
