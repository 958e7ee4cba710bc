#pragma once

#include <string>
#include <vector>

namespace mgeo::csv {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const;  // -1 when absent
};

/// Reads a comma-separated file with a header row. Whitespace around cells is
/// trimmed; empty lines are skipped. No quoting support — none of the formats
/// this project emits need it.
Table read_file(const std::string& path);

void write_file(const std::string& path, const Table& table);

std::string format_double(double v);

}  // namespace mgeo::csv
