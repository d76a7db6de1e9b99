#pragma once

#include <string>
#include <vector>

namespace vpmpcc {

/// Minimal CSV table: one header row, numeric body. Used for track files,
/// racelines, and the experiment logs.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  int column(const std::string& name) const;  // -1 when absent
  bool has_column(const std::string& name) const { return column(name) >= 0; }
};

CsvTable read_csv(const std::string& path);
CsvTable parse_csv(const std::string& text, const std::string& origin);

void write_csv(const std::string& path, const CsvTable& table);

/// Raw-cell variant for tables with non-numeric columns.
struct StringTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const;
};

StringTable read_csv_strings(const std::string& path);

/// Shortest round-trip formatting for doubles, locale-independent.
std::string format_double(double v);

}  // namespace vpmpcc
