#pragma once

// RFC-4180 style CSV reading and writing. Non-numeric columns are treated as
// categorical and one-hot encoded; the first observed level is the reference
// category and gets no indicator column.

#include <charconv>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "proxcausal/data_model.hpp"

namespace proxcausal {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

namespace detail {

inline bool parse_double(const std::string& s, double& out) {
  std::size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
  if (b == e) return false;
  const char* first = s.data() + b;
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, s.data() + e, out);
  return ec == std::errc() && ptr == s.data() + e;
}

inline bool is_missing_token(const std::string& s) {
  std::string t;
  for (char c : s)
    if (c != ' ' && c != '\t' && c != '\r') t += c;
  return t.empty() || t == "NA" || t == "NaN" || t == "nan" || t == "null";
}

}  // namespace detail

inline CsvTable read_csv(std::istream& in) {
  CsvTable t;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  bool first = true;
  auto end_record = [&] {
    record.push_back(field);
    field.clear();
    field_started = false;
    if (first) {
      t.header = record;
      first = false;
    } else if (!(record.size() == 1 && record[0].empty())) {
      t.rows.push_back(record);
    }
    record.clear();
  };
  char c;
  while (in.get(c)) {
    if (in_quotes) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get(c);
          field += '"';
        } else {
          in_quotes = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    if (c == '"' && !field_started) {
      in_quotes = true;
      field_started = true;
    } else if (c == ',') {
      record.push_back(field);
      field.clear();
      field_started = false;
    } else if (c == '\n') {
      end_record();
    } else if (c != '\r') {
      field += c;
      field_started = true;
    }
  }
  if (in_quotes) fail(ErrorCode::IoError, "unterminated quoted field");
  if (field_started || !record.empty()) end_record();
  if (t.header.empty()) fail(ErrorCode::IoError, "CSV has no header row");
  for (std::size_t r = 0; r < t.rows.size(); ++r)
    if (t.rows[r].size() != t.header.size())
      fail(ErrorCode::IoError, "CSV line " + std::to_string(r + 2) + " has " + std::to_string(t.rows[r].size()) +
                                   " fields, header has " + std::to_string(t.header.size()));
  return t;
}

inline CsvTable read_csv_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot open '" + path + "'");
  return read_csv(in);
}

/// Converts text cells to numbers, expanding categorical columns into
/// indicator columns named `<column>=<level>`. Roles attached to a
/// categorical column carry over to each of its indicators.
inline std::pair<RawTable, RoleMap> to_numeric(const CsvTable& csv, const RoleMap& roles) {
  RawTable raw;
  RoleMap expanded;
  const std::size_t n = csv.rows.size();
  for (std::size_t k = 0; k < csv.header.size(); ++k) {
    const std::string& name = csv.header[k];
    std::vector<double> values(n);
    bool numeric = true;
    for (std::size_t i = 0; i < n && numeric; ++i) {
      const auto& cell = csv.rows[i][k];
      if (detail::is_missing_token(cell))
        values[i] = std::nan("");
      else if (!detail::parse_double(cell, values[i]))
        numeric = false;
    }
    auto role = roles.find(name);
    if (numeric) {
      raw.names.push_back(name);
      raw.columns.push_back(std::move(values));
      if (role != roles.end()) expanded[name] = role->second;
      continue;
    }
    std::vector<std::string> levels;
    for (std::size_t i = 0; i < n; ++i) {
      const auto& cell = csv.rows[i][k];
      if (detail::is_missing_token(cell)) continue;
      if (std::find(levels.begin(), levels.end(), cell) == levels.end()) levels.push_back(cell);
    }
    for (std::size_t l = 1; l < levels.size(); ++l) {
      std::vector<double> ind(n);
      for (std::size_t i = 0; i < n; ++i) {
        const auto& cell = csv.rows[i][k];
        ind[i] = detail::is_missing_token(cell) ? std::nan("") : (cell == levels[l] ? 1.0 : 0.0);
      }
      const std::string col = name + "=" + levels[l];
      raw.names.push_back(col);
      raw.columns.push_back(std::move(ind));
      if (role != roles.end()) expanded[col] = role->second;
    }
  }
  return {raw, expanded};
}

/// Shortest decimal text that round-trips to the same double.
inline std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline void write_csv(std::ostream& out, const std::vector<std::string>& names,
                      const std::vector<std::vector<double>>& columns) {
  for (std::size_t k = 0; k < names.size(); ++k) out << (k ? "," : "") << csv_escape(names[k]);
  out << '\n';
  const std::size_t n = columns.empty() ? 0 : columns.front().size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < columns.size(); ++k) out << (k ? "," : "") << format_double(columns[k][i]);
    out << '\n';
  }
}

inline void write_csv(std::ostream& out, const Dataset& d) { write_csv(out, d.names, d.columns); }

}  // namespace proxcausal
