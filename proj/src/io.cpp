#include "crossdiff/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace crossdiff {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_snapshot(std::ostream& os, const GridState& s, double r_fill) {
  const auto t = to_transformed(s, r_fill);
  os << "t,x,rho,eta,sigma,r\n";
  for (int i = 0; i < s.grid.n_cells; ++i) {
    os << format_double(s.time) << ',' << format_double(s.grid.center(i)) << ',' << format_double(s.rho[i]) << ','
       << format_double(s.eta[i]) << ',' << format_double(t.sigma[i]) << ',' << format_double(t.r[i]) << '\n';
  }
}

void write_snapshot(const std::string& path, const GridState& s, double r_fill) {
  std::ofstream os(path);
  if (!os) throw Error(Errc::Io, "cannot write " + path);
  write_snapshot(os, s, r_fill);
  if (!os) throw Error(Errc::Io, "write failed for " + path);
}

Snapshot read_snapshot(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error(Errc::Io, "cannot read " + path);
  std::string line;
  if (!std::getline(is, line)) throw Error(Errc::Io, path + ": empty file");
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string col;
    while (std::getline(ss, col, ',')) header.push_back(col);
  }
  auto column = [&](const std::string& name) {
    for (std::size_t k = 0; k < header.size(); ++k)
      if (header[k] == name) return static_cast<int>(k);
    throw Error(Errc::Io, path + ": missing column '" + name + "'");
  };
  const int ct = column("t"), cx = column("x"), cr = column("rho"), ce = column("eta");
  std::vector<double> t, x, rho, eta;
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<double> vals;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      double v = 0.0;
      const auto r = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (r.ec != std::errc() || r.ptr != cell.data() + cell.size())
        throw Error(Errc::Io, path + ":" + std::to_string(lineno) + ": bad number '" + cell + "'");
      vals.push_back(v);
    }
    if (vals.size() != header.size())
      throw Error(Errc::Io, path + ":" + std::to_string(lineno) + ": wrong number of columns");
    t.push_back(vals[ct]);
    x.push_back(vals[cx]);
    rho.push_back(vals[cr]);
    eta.push_back(vals[ce]);
  }
  if (x.empty()) throw Error(Errc::Io, path + ": no rows");
  Snapshot s;
  s.t = t.front();
  s.x = Eigen::Map<Vector>(x.data(), x.size());
  s.rho = Eigen::Map<Vector>(rho.data(), rho.size());
  s.eta = Eigen::Map<Vector>(eta.data(), eta.size());
  return s;
}

Grid grid_from_centers(const Vector& x) {
  const Eigen::Index n = x.size();
  if (n < 4) throw Error(Errc::InvalidGrid, "snapshot has fewer than 4 cells");
  const double dx = (x[n - 1] - x[0]) / (n - 1);
  for (Eigen::Index i = 1; i < n; ++i)
    if (std::abs(x[i] - x[i - 1] - dx) > 1e-9 * std::max(1.0, std::abs(dx)))
      throw Error(Errc::InvalidGrid, "snapshot cell centers are not uniformly spaced");
  return Grid(x[0] - 0.5 * dx, x[n - 1] + 0.5 * dx, static_cast<int>(n));
}

}  // namespace crossdiff
