#pragma once

// Numeric tables and their two on-disk forms. CSV: header row, "%.17g" cells, empty cell
// for a missing value, '\n' endings. JSON: {"columns": [...], "rows": [[...], ...]} with null
// for a missing value. Both read back to bit-identical doubles.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "xphase/errors.hpp"

namespace xcli {

using json = nlohmann::json;
using Cell = std::optional<double>;

enum class Format { csv, json };

inline const char* extension(Format f) { return f == Format::csv ? "csv" : "json"; }

struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  void add_row(std::vector<Cell> row) {
    if (row.size() != columns.size()) throw std::logic_error("table " + name + ": row width mismatch");
    rows.push_back(std::move(row));
  }
  bool operator==(const Table&) const = default;
};

inline std::string format_cell(const Cell& c) {
  if (!c) return {};
  if (!std::isfinite(*c)) throw xphase::NumericalError("non-finite value in output table");
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", *c);
  return buf;
}

inline std::string to_csv(const Table& t) {
  std::string out;
  for (std::size_t k = 0; k < t.columns.size(); ++k) out += (k ? "," : "") + t.columns[k];
  out += '\n';
  for (const auto& row : t.rows) {
    for (std::size_t k = 0; k < row.size(); ++k) {
      if (k) out += ',';
      out += format_cell(row[k]);
    }
    out += '\n';
  }
  return out;
}

inline json to_json_value(const Table& t) {
  json rows = json::array();
  for (const auto& row : t.rows) {
    json r = json::array();
    for (const auto& c : row) {
      if (c && !std::isfinite(*c)) throw xphase::NumericalError("non-finite value in output table");
      r.push_back(c ? json(*c) : json(nullptr));
    }
    rows.push_back(std::move(r));
  }
  return json{{"columns", t.columns}, {"rows", std::move(rows)}};
}

inline std::string to_json(const Table& t) { return to_json_value(t).dump() + "\n"; }

inline std::string serialize(const Table& t, Format f) { return f == Format::csv ? to_csv(t) : to_json(t); }

inline std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

inline Cell parse_cell(const std::string& s) {
  if (s.empty()) return std::nullopt;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size()) throw xphase::ValidationError("csv: not a number: '" + s + "'");
  return v;
}

inline Table from_csv(const std::string& text, std::string name = {}) {
  Table t;
  t.name = std::move(name);
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw xphase::ValidationError("csv: empty input");
  t.columns = split(line, ',');
  while (std::getline(in, line)) {
    const auto cells = split(line, ',');
    if (cells.size() != t.columns.size()) throw xphase::ValidationError("csv: row width mismatch");
    std::vector<Cell> row;
    for (const auto& c : cells) row.push_back(parse_cell(c));
    t.rows.push_back(std::move(row));
  }
  return t;
}

inline Table from_json(const std::string& text, std::string name = {}) {
  const json j = json::parse(text);
  Table t;
  t.name = std::move(name);
  t.columns = j.at("columns").get<std::vector<std::string>>();
  for (const auto& r : j.at("rows")) {
    std::vector<Cell> row;
    for (const auto& c : r) row.push_back(c.is_null() ? Cell{} : Cell{c.get<double>()});
    if (row.size() != t.columns.size()) throw xphase::ValidationError("json table: row width mismatch");
    t.rows.push_back(std::move(row));
  }
  return t;
}

inline Table parse(const std::string& text, Format f, std::string name = {}) {
  return f == Format::csv ? from_csv(text, std::move(name)) : from_json(text, std::move(name));
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw xphase::ValidationError("cannot read " + path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out || !(out << text)) throw std::runtime_error("cannot write " + path);
}

}  // namespace xcli
