#pragma once

#include <string>

#include "crossdiff/fields.hpp"

namespace crossdiff {

enum class InitialKind { Indicators, Cosine, Barenblatt, Gaussian, Csv };

const char* to_string(InitialKind kind);

/// Initial data; every kind is turned into exact cell averages.
struct InitialCondition {
  InitialKind kind = InitialKind::Gaussian;
  // Indicators: rho = rho_h on [rho_a, rho_b], eta = eta_h on [eta_a, eta_b]
  double rho_a = 0.0, rho_b = 0.0, rho_h = 0.0;
  double eta_a = 0.0, eta_b = 0.0, eta_h = 0.0;
  // Barenblatt: source solution of sigma_t = (sigma^2/2)_xx at time t0
  double t0 = 0.1;
  // Gaussian and Barenblatt: total mass and the share carried by rho;
  // a Gaussian with width <= 0 uses a tenth of the domain
  double mass = 1.0;
  double rho_fraction = 0.5;
  double center = 0.0;
  double width = 0.0;
  // Csv: a snapshot file with columns t,x,rho,eta[,sigma,r]
  std::string path;
  double r_fill = kDefaultRFill;
};

GridState make_initial(const InitialCondition& ic, const Grid& grid);

/// Closed-form source solution of sigma_t = (sigma^2 / 2)_xx:
///   sigma(t, x) = t^{-1/3} max(C - x^2 / (6 t^{2/3}), 0),
/// with C fixed by the mass, mass = (4/3) C sqrt(6 C).
struct Barenblatt {
  double C;
  explicit Barenblatt(double mass = 1.0);
  double operator()(double t, double x) const;
  double cdf(double t, double x) const;
  double half_width(double t) const;
  /// Exact cell averages at time t.
  Vector cell_averages(const Grid& grid, double t) const;
};

}  // namespace crossdiff
