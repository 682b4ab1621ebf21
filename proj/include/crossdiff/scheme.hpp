#pragma once

#include <memory>
#include <string>
#include <vector>

#include "crossdiff/energy.hpp"
#include "crossdiff/fields.hpp"
#include "crossdiff/initial.hpp"
#include "crossdiff/jko.hpp"
#include "crossdiff/reaction.hpp"
#include "crossdiff/transport.hpp"

namespace crossdiff {

struct FvOptions {
  double cfl = 0.4;
  double dt_max = 1e-2;
};

struct SchemeConfig {
  Grid grid;
  double tau = 1e-2;
  double t_final = 1.0;
  int n_parcels = 256;
  EnergySpec energy = EnergySpec::quadratic(0.5);
  ReactionSpec reaction = ReactionSpec::zero();
  InitialCondition initial;
  JkoOptions jko;
  FvOptions fv;
  int snapshot_every = 1;
  double substep_dt = 0.01;  // reaction RK4 substeps = ceil(tau / substep_dt)

  int n_steps() const;
};

/// Throws ConfigError-free `Error(InvalidArgument)` on a bad configuration and
/// InvalidEnergy / InvalidReaction when the model fails its admissibility checks.
void validate(const SchemeConfig& config);

/// Everything checked during one step n -> n+1 (reaction to n+1/2, then
/// diffusion). Parcel quantities are exact Lagrangian values; `diag` is the
/// grid state at t^{n+1}.
struct StepReport {
  int step = 0;
  double t_start = 0.0, t_end = 0.0;

  // reaction
  double clamp = 0.0, clamp_budget = 0.0;
  double linf_n = 0.0, linf_half = 0.0, linf_growth = 1.0;
  double tv_n = 0.0, tv_half = 0.0, tv_growth = 1.0;  // tv(sigma) + tv(r) over parcels
  double gronwall_rate = 0.0;

  // diffusion
  double max_density_half = 0.0, max_density_after = 0.0;
  double tv_r_half = 0.0, tv_r_after = 0.0;
  double tv_sigma_half = 0.0, tv_sigma_after = 0.0;
  double mass_rho_half = 0.0, mass_rho_after = 0.0;
  double mass_eta_half = 0.0, mass_eta_after = 0.0;
  double grid_mass_rho = 0.0, grid_mass_eta = 0.0;
  JkoReport jko;

  // energies along the step (parcel level)
  double energy_n = 0.0, energy_half = 0.0, energy_after = 0.0;
  double entropy_n = 0.0, entropy_half = 0.0, entropy_after = 0.0;

  bool rebalanced = false;
  bool parcels_segregated = false;
  DiagnosticsRecord diag;
  double overlap_bound = 0.0;  // dx * max rho * max eta
};

struct Trajectory {
  std::string solver = "jko";
  SchemeConfig config;
  std::vector<GridState> states;  // t^0 ... t^N
  std::vector<DiagnosticsRecord> diagnostics;
  std::vector<StepReport> steps;
  bool initially_segregated = false;
  double sigma_max = 0.0;  // largest parcel / cell density seen

  double tau() const { return config.tau; }
};

class InvariantViolation : public Error {
 public:
  InvariantViolation(int step, std::string which, const std::string& detail, StepReport report,
                     std::shared_ptr<const Trajectory> partial);
  int step() const noexcept { return step_; }
  const std::string& which() const noexcept { return which_; }
  const StepReport& report() const noexcept { return report_; }
  const std::shared_ptr<const Trajectory>& partial() const noexcept { return partial_; }

 private:
  int step_;
  std::string which_;
  StepReport report_;
  std::shared_ptr<const Trajectory> partial_;
};

Trajectory run_splitting(const SchemeConfig& config);

/// Snapshot n with t in [t^n, t^{n+1}); t = T gives the last one.
const GridState& piecewise_constant_eval(const Trajectory& traj, double t);

struct EstimateCheck {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  bool ok = true;
};

struct EstimateReport {
  std::vector<EstimateCheck> checks;
  double entropy_rate = 0.0;     // c in the entropy estimates
  double energy_rate = 0.0;      // C in the total-square estimate
  double eps_disc = 0.0;         // slack used in the dissipation sum
  double hoelder_constant = 0.0;  // fitted C in d_BL <= C (sqrt(t-s) + sqrt(tau))
  double total_square = 0.0;      // sum_n w2_sq / (2 tau)

  bool ok() const;
  const EstimateCheck* find(const std::string& name) const;
};

/// eps_disc: per-step slack allowed in the entropy-dissipation inequality.
EstimateReport check_cumulative_estimates(const Trajectory& traj, double eps_disc = 0.0);

/// Constants of the cumulative estimates, from the reaction bounds and |Omega|.
double entropy_rate_constant(const SchemeConfig& config, double sigma_max);
double energy_rate_constant(const SchemeConfig& config, double sigma_max);

/// Fitted C of d_BL(U(s), U(t)) <= C (sqrt(t - s) + sqrt(tau)) over pairs of
/// at most `samples` evenly spaced snapshots.
double hoelder_constant(const Trajectory& traj, int samples = 12);

/// Weak-formulation defect of the piecewise-constant interpolant, max over
/// bump test functions, both species and snapshot times.
double weak_form_residual(const Trajectory& traj, int test_fn_count = 8);

}  // namespace crossdiff
