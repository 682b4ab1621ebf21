#include "crossdiff/fields.hpp"

#include <algorithm>
#include <cmath>

namespace crossdiff {

Grid::Grid(double left, double right, int n) : x_left(left), x_right(right), n_cells(n) {
  if (!std::isfinite(left) || !std::isfinite(right) || !(left < right))
    throw Error(Errc::InvalidGrid, "grid needs finite x_left < x_right");
  if (n < 4) throw Error(Errc::InvalidGrid, "grid needs at least 4 cells");
}

Vector Grid::centers() const {
  Vector c(n_cells);
  for (int i = 0; i < n_cells; ++i) c[i] = center(i);
  return c;
}

Vector Grid::faces() const {
  Vector f(n_cells + 1);
  for (int i = 0; i <= n_cells; ++i) f[i] = face(i);
  f[n_cells] = x_right;
  return f;
}

bool operator==(const Grid& a, const Grid& b) {
  return a.x_left == b.x_left && a.x_right == b.x_right && a.n_cells == b.n_cells;
}

GridState make_state(const Grid& grid, Vector rho, Vector eta, double time) {
  if (rho.size() != grid.n_cells || eta.size() != grid.n_cells)
    throw Error(Errc::InvalidArgument, "field size does not match grid");
  GridState s{grid, std::move(rho), std::move(eta), time};
  check_state(s);
  return s;
}

void check_state(const GridState& s) {
  for (int i = 0; i < s.grid.n_cells; ++i) {
    if (!std::isfinite(s.rho[i]) || !std::isfinite(s.eta[i]))
      throw Error(Errc::NonFiniteState, "non-finite density in cell " + std::to_string(i));
    if (s.rho[i] < 0.0 || s.eta[i] < 0.0)
      throw Error(Errc::NegativeDensity, "negative density in cell " + std::to_string(i));
  }
}

TransformedState to_transformed(const GridState& state, double r_fill) {
  const int n = state.grid.n_cells;
  TransformedState t{state.grid, Vector(n), Vector(n), state.time};
  for (int i = 0; i < n; ++i) {
    const double s = state.rho[i] + state.eta[i];
    t.sigma[i] = s;
    t.r[i] = s > kVacTol ? std::clamp(state.rho[i] / s, 0.0, 1.0) : r_fill;
  }
  return t;
}

GridState from_transformed(const TransformedState& t) {
  const int n = t.grid.n_cells;
  GridState s{t.grid, Vector(n), Vector(n), t.time};
  for (int i = 0; i < n; ++i) {
    s.rho[i] = t.r[i] * t.sigma[i];
    // sigma - rho keeps rho + eta == sigma to the last bit for r in [0,1]
    s.eta[i] = t.sigma[i] - s.rho[i];
    if (s.eta[i] < 0.0) s.eta[i] = 0.0;
  }
  return s;
}

double mass(const Vector& f, const Grid& grid) { return grid.dx() * f.sum(); }

double linf(const Vector& f) { return f.size() ? f.cwiseAbs().maxCoeff() : 0.0; }

double total_variation(const Vector& f) {
  double tv = 0.0;
  for (Eigen::Index i = 0; i + 1 < f.size(); ++i) tv += std::abs(f[i + 1] - f[i]);
  return tv;
}

double overlap(const Vector& rho, const Vector& eta, const Grid& grid) {
  return grid.dx() * rho.cwiseProduct(eta).sum();
}

double entropy_K(const Vector& sigma, const Grid& grid, const EnergySpec& spec) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < sigma.size(); ++i) acc += spec.K(sigma[i]);
  return grid.dx() * acc;
}

double dissipation(const Vector& sigma, const Grid& grid, const EnergySpec& spec) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i + 1 < sigma.size(); ++i) {
    const double d = spec.chi_prime(sigma[i + 1]) - spec.chi_prime(sigma[i]);
    acc += d * d;
  }
  return acc / grid.dx();
}

double l1_distance(const Vector& f, const Vector& g, const Grid& grid) {
  return grid.dx() * (f - g).cwiseAbs().sum();
}

DiagnosticsRecord diagnostics(const GridState& state, const EnergySpec& spec, double r_fill) {
  const auto t = to_transformed(state, r_fill);
  DiagnosticsRecord d;
  d.time = state.time;
  d.mass_rho = mass(state.rho, state.grid);
  d.mass_eta = mass(state.eta, state.grid);
  d.linf_sigma = linf(t.sigma);
  d.tv_sigma = total_variation(t.sigma);
  d.tv_r = total_variation(t.r);
  d.overlap = overlap(state.rho, state.eta, state.grid);
  d.entropy_K = entropy_K(t.sigma, state.grid, spec);
  d.dissipation = dissipation(t.sigma, state.grid, spec);
  return d;
}

}  // namespace crossdiff
