#pragma once

#include "crossdiff/energy.hpp"
#include "crossdiff/transport.hpp"

namespace crossdiff {

struct JkoOptions {
  double grad_tol = 0.0;  // <= 0 selects 1e-10 * dm
  int max_iters = 200;
  double armijo_c = 1e-4;
  double min_gap_factor = 1e-3;
};

void validate(const JkoOptions& opts);

struct JkoReport {
  int iterations = 0;
  double final_grad_norm = 0.0;
  double w2_sq_increment = 0.0;
  double energy_before = 0.0;
  double energy_after = 0.0;
  double kkt_residual = 0.0;
  double entropy_drop = 0.0;
  double dissipation_lhs = 0.0;
  double grad_tol = 0.0;
  double noise_floor = 0.0;  // set when Newton stalled at round-off above grad_tol
};

class NoConvergence : public Error {
 public:
  NoConvergence(const std::string& what, QuantileRep best, JkoReport report)
      : Error(Errc::NoConvergence, what), best_(std::move(best)), report_(report) {}
  const QuantileRep& best() const noexcept { return best_; }
  const JkoReport& report() const noexcept { return report_; }

 private:
  QuantileRep best_;
  JkoReport report_;
};

struct ObjectiveValue {
  double value = 0.0;
  Vector gradient;
};

/// Discrete JKO functional in parcel positions X (M + 1 entries):
///   sum_i w_i (X_i - Y_i)^2 / (2 tau) + sum_j dX_j chi(m_j / dX_j)
/// with nodal weights w_i = (m_{i-1} + m_i) / 2 (half a parcel at the ends).
ObjectiveValue jko_objective(const Vector& X, const Vector& Y, double tau, const EnergySpec& spec,
                             const Vector& masses);
ObjectiveValue jko_objective(const Vector& X, const Vector& Y, double tau, const EnergySpec& spec, double dm);

/// Max over interior nodes of |(X_i - Y_i)/tau + (P(s_i) - P(s_{i-1})) / w_i|,
/// the discrete derivative of phi/tau + chi'(sigma).
double optimality_residual(const Vector& X, const Vector& Y, double tau, const EnergySpec& spec,
                           const Vector& masses);
double optimality_residual(const Vector& X, const Vector& Y, double tau, const EnergySpec& spec, double dm);

/// Lagrangian energies of a parcel configuration.
double parcel_energy(const Vector& X, const Vector& masses, const EnergySpec& spec);
double parcel_entropy(const Vector& X, const Vector& masses, const EnergySpec& spec);
/// sum over interior nodes of (chi'(s_i) - chi'(s_{i-1}))^2 / h_i, h_i the
/// mean width of the two parcels meeting at the node.
double parcel_dissipation(const Vector& X, const Vector& masses, const EnergySpec& spec);
/// Exact squared W2 between two parcel configurations with the same masses.
double parcel_w2_sq(const Vector& X, const Vector& Y, const Vector& masses);

struct JkoResult {
  QuantileRep rep;
  JkoReport report;
};

JkoResult jko_step(const QuantileRep& q, double tau, const EnergySpec& spec, const Grid& grid,
                   const JkoOptions& opts = {});

}  // namespace crossdiff
