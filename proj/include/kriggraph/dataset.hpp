#pragma once

// Directory datasets:
//   nodes.csv      node_id[,x,y]
//   distances.csv  i,j,dist      (node ids; pairs not listed are unreachable)
//   series.csv     node_id,<timestamp>,...   one row per node
// When distances.csv is absent, Euclidean distances over x, y are used.

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "errors.hpp"
#include "graph.hpp"

namespace kriggraph {

struct Dataset {
  SeriesMatrix series;
  Matrix distances;  // N x N in node order of series
  std::vector<double> xs, ys;  // empty when nodes.csv has no coordinates
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
    out.push_back(cell);
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline double parse_decimal(const std::string& s, const std::string& where) {
  double v = 0.0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size())
    throw ValidationError(where + ": bad number '" + s + "'");
  return v;
}

inline std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw ValidationError("cannot open " + p.string());
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    rows.push_back(split_csv_line(line));
  }
  if (rows.empty()) throw ValidationError(p.string() + ": empty file");
  return rows;
}

}  // namespace detail

inline Dataset load_dataset(const std::filesystem::path& dir) {
  Dataset d;
  const auto series_rows = detail::read_csv(dir / "series.csv");
  const auto& header = series_rows.front();
  if (header.size() < 2) throw ValidationError("series.csv: need node_id and at least one time step");
  d.series.timestamps.assign(header.begin() + 1, header.end());
  const std::size_t n = series_rows.size() - 1, t = header.size() - 1;
  if (n == 0) throw ValidationError("series.csv: no nodes");
  d.series.values = Matrix(n, t);
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& row = series_rows[i + 1];
    if (row.size() != t + 1)
      throw ValidationError("series.csv: row " + std::to_string(i + 2) + " has wrong width");
    if (!index.emplace(row[0], i).second) throw ValidationError("series.csv: duplicate node " + row[0]);
    d.series.node_ids.push_back(row[0]);
    for (std::size_t k = 0; k < t; ++k) d.series.values(i, k) = detail::parse_decimal(row[k + 1], "series.csv");
  }

  auto lookup = [&](const std::string& id, const char* file) {
    auto it = index.find(id);
    if (it == index.end()) throw ValidationError(std::string(file) + ": unknown node " + id);
    return it->second;
  };

  if (std::filesystem::exists(dir / "nodes.csv")) {
    auto rows = detail::read_csv(dir / "nodes.csv");
    const bool coords = rows.front().size() >= 3;
    if (coords) {
      d.xs.assign(n, std::numeric_limits<double>::quiet_NaN());
      d.ys = d.xs;
    }
    for (std::size_t r = 1; r < rows.size(); ++r) {
      const auto i = lookup(rows[r].at(0), "nodes.csv");
      if (coords) {
        if (rows[r].size() < 3) throw ValidationError("nodes.csv: missing coordinates");
        d.xs[i] = detail::parse_decimal(rows[r][1], "nodes.csv");
        d.ys[i] = detail::parse_decimal(rows[r][2], "nodes.csv");
      }
    }
    for (double x : d.xs)
      if (std::isnan(x)) throw ValidationError("nodes.csv: a series node has no coordinates");
  }

  if (std::filesystem::exists(dir / "distances.csv")) {
    d.distances = Matrix(n, n, std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < n; ++i) d.distances(i, i) = 0.0;
    auto rows = detail::read_csv(dir / "distances.csv");
    for (std::size_t r = 1; r < rows.size(); ++r) {
      if (rows[r].size() != 3) throw ValidationError("distances.csv: expected i,j,dist");
      const auto i = lookup(rows[r][0], "distances.csv"), j = lookup(rows[r][1], "distances.csv");
      const double v = detail::parse_decimal(rows[r][2], "distances.csv");
      d.distances(i, j) = v;
      d.distances(j, i) = v;
    }
  } else if (!d.xs.empty()) {
    d.distances = euclidean_distances(d.xs, d.ys);
  } else {
    throw ValidationError("dataset: need distances.csv or coordinates in nodes.csv");
  }
  return d;
}

/// Kernel graph over the dataset; sigma <= 0 selects the distance std.
inline Graph dataset_graph(const Dataset& d, double sigma, double threshold) {
  return build_adjacency(d.distances, sigma > 0.0 ? std::optional<double>(sigma) : std::nullopt,
                         threshold);
}

inline void save_dataset(const std::filesystem::path& dir, const Dataset& d) {
  std::filesystem::create_directories(dir);
  const std::size_t n = d.series.values.rows();
  auto open = [&](const char* name) {
    std::ofstream out(dir / name);
    if (!out) throw ValidationError("cannot write " + (dir / name).string());
    out << std::setprecision(17);
    return out;
  };
  {
    auto out = open("nodes.csv");
    out << (d.xs.empty() ? "node_id\n" : "node_id,x,y\n");
    for (std::size_t i = 0; i < n; ++i) {
      out << d.series.node_ids[i];
      if (!d.xs.empty()) out << ',' << d.xs[i] << ',' << d.ys[i];
      out << '\n';
    }
  }
  {
    auto out = open("distances.csv");
    out << "i,j,dist\n";
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        if (std::isfinite(d.distances(i, j)))
          out << d.series.node_ids[i] << ',' << d.series.node_ids[j] << ',' << d.distances(i, j) << '\n';
  }
  {
    auto out = open("series.csv");
    out << "node_id";
    for (const auto& ts : d.series.timestamps) out << ',' << ts;
    out << '\n';
    for (std::size_t i = 0; i < n; ++i) {
      out << d.series.node_ids[i];
      for (double v : d.series.values.row(i)) out << ',' << v;
      out << '\n';
    }
  }
}

}  // namespace kriggraph
