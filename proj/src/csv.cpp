#include "hiddenou/csv.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "hiddenou/error.hpp"

namespace hou {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_csv(const std::string& path, const Table& table) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::kIo, "cannot open '" + path + "' for writing");
  for (std::size_t j = 0; j < table.header.size(); ++j)
    out << (j ? "," : "") << table.header[j];
  out << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t j = 0; j < row.size(); ++j) out << (j ? "," : "") << format_double(row[j]);
    out << '\n';
  }
  if (!out) throw Error(ErrorKind::kIo, "write failed for '" + path + "'");
}

Table read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open '" + path + "'");
  Table t;
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::kIo, "'" + path + "' is empty");
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) t.header.push_back(cell);
  }
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      char* end = nullptr;
      const double v = std::strtod(cell.c_str(), &end);
      if (end == cell.c_str())
        throw Error(ErrorKind::kIo, path + ":" + std::to_string(lineno) + ": bad number '" +
                                        cell + "'");
      row.push_back(v);
    }
    if (row.size() != t.header.size())
      throw Error(ErrorKind::kIo, path + ":" + std::to_string(lineno) + ": column count mismatch");
    t.rows.push_back(std::move(row));
  }
  return t;
}

}  // namespace hou
