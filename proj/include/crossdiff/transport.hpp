#pragma once

#include <vector>

#include "crossdiff/fields.hpp"

namespace crossdiff {

/// Lagrangian representation of sigma: parcel boundaries X_0 <= ... <= X_M,
/// the mass carried by each parcel and the ratio r it carries. Parcels are
/// equal-mass when built, but reaction steps rescale masses parcel by parcel,
/// so the masses are stored explicitly.
struct QuantileRep {
  Vector positions;  // M + 1
  Vector masses;     // M
  Vector parcel_r;   // M
  double total_mass = 0.0;

  int n_parcels() const { return static_cast<int>(masses.size()); }
  double dm() const { return total_mass / n_parcels(); }
  Vector widths() const;
  Vector densities() const;
};

/// Throws DegenerateParcel / InvalidArgument when the invariants do not hold.
void check_quantile(const QuantileRep& q, const Grid& grid, bool strict = false);

QuantileRep grid_to_quantile(const TransformedState& t, int M);

/// Rebuilds a rep with M parcels of (nearly) equal mass from an existing one,
/// keeping the support endpoints and pure-species interfaces in place.
QuantileRep rebalance(const QuantileRep& q, int M);

TransformedState quantile_to_grid(const QuantileRep& q, const Grid& grid, double r_fill = kDefaultRFill);
GridState quantile_to_state(const QuantileRep& q, const Grid& grid, double time = 0.0);

/// Pseudo-inverse CDF in normalized mass coordinates: piecewise linear through
/// (u_k, x_k), u non-decreasing from 0 to 1.
struct QuantileFn {
  std::vector<double> u;
  std::vector<double> x;
  double mass = 0.0;

  double operator()(double level) const;
};

QuantileFn quantile_fn(const Vector& f, const Grid& grid);
QuantileFn quantile_fn(const QuantileRep& q);

/// Integral over normalized mass of |Xa - Xb|^p, times the mass, with no root.
double wasserstein_pp(const QuantileFn& a, const QuantileFn& b, int p);

double wasserstein_p(const Vector& f, const Vector& g, const Grid& grid, int p);
double wasserstein_p(const QuantileRep& a, const QuantileRep& b, int p);

/// Flat metric between two densities on one grid: exact maximum of the
/// discretized dual over piecewise-linear test functions at the cell faces.
double bounded_lipschitz(const Vector& f, const Vector& g, const Grid& grid);
/// Product metric on (rho, eta): sum of the species distances.
double bounded_lipschitz(const GridState& a, const GridState& b);

struct MonotoneMap {
  Vector x;
  Vector y;

  double operator()(double at) const;
  bool monotone() const;
};

MonotoneMap optimal_map(const Vector& from, const Vector& to, const Grid& grid);

/// Resamples `from` through a monotone map: the density of T#from on the grid.
Vector push_forward(const Vector& from, const MonotoneMap& map, const Grid& grid);

double parcel_tv_r(const QuantileRep& q);
double parcel_tv_sigma(const QuantileRep& q);
/// TV on the domain of the density extended by zero outside [X_0, X_M].
double parcel_tv_sigma(const QuantileRep& q, const Grid& grid);

}  // namespace crossdiff
