#pragma once
/// @file io.hpp
/// @brief Time-series CSV and legacy VTK snapshots.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "qnsch/diagnostics.hpp"

namespace qnsch {

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline const char* csv_header() {
  return "time,mass_rho,mass_rhoc,energy,energy_delta,max_div,cycles,metric";
}

/// 17 significant digits: enough to round-trip any double.
inline std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

/// One CSV line without the newline. A metric pair is written as "a;b".
inline std::string csv_row(const StepReport& r) {
  std::string s = format_double(r.time) + ',' + format_double(r.mass_rho) + ',' +
                  format_double(r.mass_rhoc) + ',' + format_double(r.energy) + ',' +
                  format_double(r.energy_delta) + ',' + format_double(r.max_div) + ',' +
                  std::to_string(r.cycles) + ',';
  for (std::size_t k = 0; k < r.metric.size(); ++k) {
    if (k) s += ';';
    s += format_double(r.metric[k]);
  }
  return s;
}

inline StepReport parse_csv_row(const std::string& line) {
  std::vector<std::string> cols;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      cols.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  cols.push_back(cur);
  if (cols.size() != 8) throw IoError("csv row has " + std::to_string(cols.size()) + " columns: " + line);
  auto num = [&](const std::string& s) {
    // strtod rather than stod: subnormals must parse, not raise out_of_range
    char* end = nullptr;
    double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size()) throw IoError("bad number '" + s + "' in csv row: " + line);
    return v;
  };
  StepReport r;
  r.time = num(cols[0]);
  r.mass_rho = num(cols[1]);
  r.mass_rhoc = num(cols[2]);
  r.energy = num(cols[3]);
  r.energy_delta = num(cols[4]);
  r.max_div = num(cols[5]);
  r.cycles = static_cast<int>(num(cols[6]));
  std::string m = cols[7];
  if (!m.empty()) {
    std::size_t start = 0;
    while (true) {
      std::size_t semi = m.find(';', start);
      r.metric.push_back(num(m.substr(start, semi == std::string::npos ? std::string::npos : semi - start)));
      if (semi == std::string::npos) break;
      start = semi + 1;
    }
  }
  return r;
}

inline std::vector<StepReport> parse_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != csv_header()) throw IoError("csv header mismatch");
  std::vector<StepReport> rows;
  while (std::getline(in, line))
    if (!line.empty()) rows.push_back(parse_csv_row(line));
  return rows;
}

inline std::vector<StepReport> read_timeseries(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path);
  return parse_csv(in);
}

/// Appends rows as they come; the file holds a valid CSV after every append.
class TimeseriesWriter {
 public:
  explicit TimeseriesWriter(const std::string& path) : path_(path), out_(path, std::ios::binary) {
    if (!out_) throw IoError("cannot write " + path);
    out_ << csv_header() << '\n';
    check();
  }
  void append(const StepReport& r) {
    out_ << csv_row(r) << '\n';
    check();
  }

 private:
  void check() {
    out_.flush();
    if (!out_) throw IoError("write failed: " + path_);
  }
  std::string path_;
  std::ofstream out_;
};

inline void write_timeseries(const std::vector<StepReport>& rows, const std::string& path) {
  TimeseriesWriter w(path);
  for (const StepReport& r : rows) w.append(r);
}

/// Legacy VTK structured points: cell arrays c, mu_bar, p_bar, div_u and the
/// velocity averaged to the vertices. Ghosts must be filled.
inline void write_snapshot(const State& s, std::ostream& out) {
  const GridSpec& g = s.grid();
  out << "# vtk DataFile Version 3.0\n";
  out << "qnsch t=" << format_double(s.time) << '\n';
  out << "ASCII\nDATASET STRUCTURED_POINTS\n";
  out << "DIMENSIONS " << g.m1 + 1 << ' ' << g.m2 + 1 << " 1\n";
  out << "ORIGIN 0 0 0\n";
  out << "SPACING " << format_double(g.h) << ' ' << format_double(g.h) << " 1\n";
  out << "CELL_DATA " << g.m1 * g.m2 << '\n';
  CellField div = divergence_field(s);
  auto scalars = [&](const char* name, const CellField& f) {
    out << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
    for_cells(g, [&](int i, int j) { out << format_double(f(i, j)) << '\n'; });
  };
  scalars("c", s.c);
  scalars("mu_bar", s.mu_bar);
  scalars("p_bar", s.p_bar);
  scalars("div_u", div);
  VertexField pu = avg_y(s.u);
  VertexField pv = avg_x(s.v);
  out << "POINT_DATA " << (g.m1 + 1) * (g.m2 + 1) << '\n';
  out << "VECTORS velocity double\n";
  for (int j = 0; j <= g.m2; ++j)
    for (int i = 0; i <= g.m1; ++i)
      out << format_double(pu(i, j)) << ' ' << format_double(pv(i, j)) << " 0\n";
}

inline void write_snapshot(const State& s, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  write_snapshot(s, out);
  out.flush();
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace qnsch
