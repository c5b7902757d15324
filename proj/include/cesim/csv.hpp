#pragma once

#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "cesim/errors.hpp"

namespace cesim {

// Shortest round-trip-safe decimal formatting, locale-independent.
inline std::string fmt_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

inline std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

inline void write_csv(const std::string& path, const std::vector<std::string>& header,
                      const std::vector<std::vector<std::string>>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail("io", "cannot open CSV output file", {{"path", path}});
  const auto write_row = [&](const std::vector<std::string>& row) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out << ',';
      out << csv_escape(row[i]);
    }
    out << '\n';
  };
  write_row(header);
  for (const auto& row : rows) {
    if (row.size() != header.size())
      fail("io", "CSV row width differs from header", {{"path", path}});
    write_row(row);
  }
  if (!out) fail("io", "failed writing CSV output file", {{"path", path}});
}

}  // namespace cesim
