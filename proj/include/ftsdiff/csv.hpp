#pragma once

#include <Eigen/Dense>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ftsdiff/errors.hpp"

namespace fts {

// Fixed 12-significant-digit formatting: all serialized numbers go through
// this, which is what makes outputs byte-reproducible across runs.
inline std::string format_sig12(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", x);
  return buf;
}

inline double round_sig12(double x) {
  return std::stod(format_sig12(x));
}

struct CsvTable {
  Eigen::MatrixXd values;  // rows = time points
  std::optional<Eigen::VectorXd> grid;
};

// Rows = time points, columns = grid samples. An optional "# grid:" comment
// carries the grid coordinates; other # lines and an optional non-numeric
// header row are skipped.
inline CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open input file: " + path);
  CsvTable table;
  std::vector<std::vector<double>> rows;
  std::string line;
  bool header_allowed = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      const std::string tag = "# grid:";
      if (line.rfind(tag, 0) == 0) {
        std::istringstream ss(line.substr(tag.size()));
        std::vector<double> g;
        double v;
        while (ss >> v) g.push_back(v);
        if (!g.empty()) {
          table.grid = Eigen::VectorXd::Map(g.data(),
                                            static_cast<Eigen::Index>(g.size()));
        }
      }
      continue;
    }
    std::vector<double> row;
    std::istringstream ss(line);
    std::string cell;
    bool numeric = true;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        const double v = std::stod(cell, &used);
        while (used < cell.size() &&
               std::isspace(static_cast<unsigned char>(cell[used])))
          ++used;
        if (used != cell.size()) {
          numeric = false;
          break;
        }
        row.push_back(v);
      } catch (const std::exception&) {
        numeric = false;
        break;
      }
    }
    if (!numeric) {
      if (header_allowed && rows.empty()) {
        header_allowed = false;
        continue;
      }
      throw io_error("non-numeric cell in " + path);
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw io_error("ragged rows in " + path);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw io_error("no rows in " + path);
  table.values.resize(static_cast<Eigen::Index>(rows.size()),
                      static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < rows.front().size(); ++c)
      table.values(static_cast<Eigen::Index>(r),
                   static_cast<Eigen::Index>(c)) = rows[r][c];
  return table;
}

inline void write_csv(const std::string& path, const Eigen::MatrixXd& values,
                      const std::optional<Eigen::VectorXd>& grid = {},
                      const std::string& header = "") {
  std::ofstream out(path);
  if (!out) throw io_error("cannot open output file: " + path);
  if (grid) {
    out << "# grid:";
    for (Eigen::Index i = 0; i < grid->size(); ++i)
      out << ' ' << format_sig12((*grid)[i]);
    out << '\n';
  }
  if (!header.empty()) out << header << '\n';
  for (Eigen::Index r = 0; r < values.rows(); ++r) {
    for (Eigen::Index c = 0; c < values.cols(); ++c) {
      if (c) out << ',';
      out << format_sig12(values(r, c));
    }
    out << '\n';
  }
  if (!out) throw io_error("failed writing " + path);
}

}  // namespace fts
