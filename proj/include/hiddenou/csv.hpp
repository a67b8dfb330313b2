#pragma once

#include <string>
#include <vector>

namespace hou {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
  bool operator==(const Table&) const = default;
};

// Numbers are written with 17 significant digits.
void write_csv(const std::string& path, const Table& table);
Table read_csv(const std::string& path);

std::string format_double(double v);

}  // namespace hou
