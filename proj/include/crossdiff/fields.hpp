#pragma once

#include "crossdiff/energy.hpp"
#include "crossdiff/error.hpp"

namespace crossdiff {

inline constexpr double kVacTol = 1e-14;
inline constexpr double kDefaultRFill = 0.5;

/// Uniform cell grid on [x_left, x_right].
struct Grid {
  double x_left = 0.0;
  double x_right = 1.0;
  int n_cells = 4;

  Grid() = default;
  Grid(double left, double right, int n);

  double dx() const { return (x_right - x_left) / n_cells; }
  double length() const { return x_right - x_left; }
  double center(int i) const { return x_left + (i + 0.5) * dx(); }
  double face(int i) const { return x_left + i * dx(); }
  Vector centers() const;
  Vector faces() const;
};

bool operator==(const Grid& a, const Grid& b);

struct GridState {
  Grid grid;
  Vector rho;
  Vector eta;
  double time = 0.0;
};

struct TransformedState {
  Grid grid;
  Vector sigma;
  Vector r;
  double time = 0.0;
};

struct DiagnosticsRecord {
  double time = 0.0;
  double mass_rho = 0.0;
  double mass_eta = 0.0;
  double linf_sigma = 0.0;
  double tv_sigma = 0.0;
  double tv_r = 0.0;
  double overlap = 0.0;
  double entropy_K = 0.0;
  double dissipation = 0.0;
};

GridState make_state(const Grid& grid, Vector rho, Vector eta, double time = 0.0);

TransformedState to_transformed(const GridState& state, double r_fill = kDefaultRFill);
GridState from_transformed(const TransformedState& t);

/// dx * sum(f)
double mass(const Vector& f, const Grid& grid);
double linf(const Vector& f);
/// Sum of absolute jumps between consecutive entries.
double total_variation(const Vector& f);
double overlap(const Vector& rho, const Vector& eta, const Grid& grid);
double entropy_K(const Vector& sigma, const Grid& grid, const EnergySpec& spec);
double dissipation(const Vector& sigma, const Grid& grid, const EnergySpec& spec);
double l1_distance(const Vector& f, const Vector& g, const Grid& grid);

DiagnosticsRecord diagnostics(const GridState& state, const EnergySpec& spec, double r_fill = kDefaultRFill);

/// Throws NonFiniteState / NegativeDensity when the state is not admissible.
void check_state(const GridState& state);

}  // namespace crossdiff
