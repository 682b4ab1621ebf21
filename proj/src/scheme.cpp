#include "crossdiff/scheme.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace crossdiff {

namespace {

bool all_pure(const Vector& r) {
  for (Eigen::Index k = 0; k < r.size(); ++k)
    if (r[k] != 0.0 && r[k] != 1.0) return false;
  return true;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

}  // namespace

int SchemeConfig::n_steps() const { return static_cast<int>(std::llround(t_final / tau)); }

void validate(const SchemeConfig& c) {
  if (!(c.tau > 0.0 && c.tau < 1.0)) throw Error(Errc::InvalidArgument, "tau must satisfy 0 < tau < 1");
  if (!(c.t_final >= 0.0) || !std::isfinite(c.t_final)) throw Error(Errc::InvalidArgument, "t_final must be >= 0");
  const double steps = c.t_final / c.tau;
  if (std::abs(steps - std::round(steps)) > 1e-9 * std::max(1.0, steps))
    throw Error(Errc::InvalidArgument, "t_final must be an integer multiple of tau");
  if (c.n_parcels < 2) throw Error(Errc::InvalidArgument, "n_parcels must be >= 2");
  if (c.snapshot_every < 1) throw Error(Errc::InvalidArgument, "snapshot_every must be >= 1");
  if (!(c.substep_dt > 0.0)) throw Error(Errc::InvalidArgument, "substep_dt must be positive");
  if (!(c.fv.cfl > 0.0 && c.fv.cfl < 1.0)) throw Error(Errc::InvalidArgument, "fv cfl must lie in (0,1)");
  if (!(c.fv.dt_max > 0.0)) throw Error(Errc::InvalidArgument, "fv dt_max must be positive");
  validate(c.jko);
  validate_reaction(c.reaction);
  require_valid_energy(c.energy, std::max(10.0, 2.0 * c.reaction.sigma_bound));
}

InvariantViolation::InvariantViolation(int step, std::string which, const std::string& detail, StepReport report,
                                       std::shared_ptr<const Trajectory> partial)
    : Error(Errc::InvariantViolation, "step " + std::to_string(step) + ": " + which + " (" + detail + ")"),
      step_(step),
      which_(std::move(which)),
      report_(std::move(report)),
      partial_(std::move(partial)) {}

Trajectory run_splitting(const SchemeConfig& config) {
  validate(config);
  const Grid& grid = config.grid;
  const double tau = config.tau;
  const int N = config.n_steps();
  const int M = config.n_parcels;
  const EnergySpec& energy = config.energy;
  const ReactionSpec& reaction = config.reaction;
  const int substeps = default_substeps(tau, config.substep_dt);

  Trajectory traj;
  traj.solver = "jko";
  traj.config = config;
  GridState s0 = make_initial(config.initial, grid);
  traj.states.push_back(s0);
  traj.diagnostics.push_back(diagnostics(s0, energy, config.initial.r_fill));
  traj.sigma_max = traj.diagnostics.back().linf_sigma;

  const auto t0 = to_transformed(s0, config.initial.r_fill);
  const bool empty = !(mass(t0.sigma, grid) > kVacTol);
  QuantileRep q;
  if (!empty) q = grid_to_quantile(t0, M);
  traj.initially_segregated = !empty && reaction.no_cross_reaction && all_pure(q.parcel_r);

  for (int n = 0; n < N; ++n) {
    StepReport rep;
    rep.step = n;
    rep.t_start = n * tau;
    rep.t_end = (n + 1) * tau;
    auto fail = [&](const std::string& which, const std::string& detail) {
      auto partial = std::make_shared<Trajectory>(traj);
      throw InvariantViolation(n, which, detail, rep, partial);
    };

    if (empty) {
      GridState s = s0;
      s.time = rep.t_end;
      rep.diag = diagnostics(s, energy, config.initial.r_fill);
      traj.states.push_back(s);
      traj.diagnostics.push_back(rep.diag);
      traj.steps.push_back(rep);
      continue;
    }

    // reaction, parcel by parcel: densities change, positions stay
    {
      const Vector w = q.widths();
      const Vector sig = q.densities();
      rep.energy_n = parcel_energy(q.positions, q.masses, energy);
      rep.entropy_n = parcel_entropy(q.positions, q.masses, energy);
      rep.linf_n = sig.maxCoeff();
      rep.tv_n = total_variation(sig) + total_variation(q.parcel_r);
      const bool inert = reaction.kind == ReactionKind::Zero;
      for (int j = 0; j < M && j < q.n_parcels() && !inert; ++j) {
        const auto p = reaction_point(reaction, sig[j], q.parcel_r[j], tau, substeps);
        q.masses[j] = p.sigma * w[j];
        q.parcel_r[j] = p.r;
        rep.clamp = std::max({rep.clamp, p.clamp_sigma, p.clamp_r});
      }
      q.total_mass = q.masses.sum();
      rep.clamp_budget = 10.0 * std::pow(tau / substeps, 5);
      const Vector sig_half = q.densities();
      rep.linf_half = sig_half.maxCoeff();
      rep.linf_growth = linf_growth_bound(reaction, tau);
      rep.tv_half = total_variation(sig_half) + total_variation(q.parcel_r);
      rep.gronwall_rate = tv_gronwall_rate(reaction, rep.linf_n * rep.linf_growth);
      rep.tv_growth = std::exp(rep.gronwall_rate * tau);

      if (rep.clamp > rep.clamp_budget) fail("reaction clamp budget", fmt(rep.clamp) + " > " + fmt(rep.clamp_budget));
      if (q.masses.minCoeff() < 0.0 || q.parcel_r.minCoeff() < 0.0 || q.parcel_r.maxCoeff() > 1.0)
        fail("reaction bounds", "sigma < 0 or r outside [0,1]");
      if (rep.linf_half > rep.linf_n * rep.linf_growth * (1.0 + 1e-12))
        fail("reaction L-infinity bound", fmt(rep.linf_half) + " > " + fmt(rep.linf_n * rep.linf_growth));
      if (rep.tv_half > rep.tv_n * rep.tv_growth * (1.0 + 1e-12) + 1e-14)
        fail("reaction TV Gronwall bound", fmt(rep.tv_half) + " > " + fmt(rep.tv_n * rep.tv_growth));
      if (!(q.total_mass > kVacTol)) fail("reaction", "all mass vanished");
    }

    // keep parcel masses comparable
    if (q.masses.maxCoeff() > 4.0 * q.masses.minCoeff()) {
      q = rebalance(q, M);
      rep.rebalanced = true;
    }
    rep.energy_half = parcel_energy(q.positions, q.masses, energy);
    rep.entropy_half = parcel_entropy(q.positions, q.masses, energy);
    rep.max_density_half = q.densities().maxCoeff();
    rep.tv_r_half = parcel_tv_r(q);
    rep.tv_sigma_half = parcel_tv_sigma(q, config.grid);
    rep.mass_rho_half = q.parcel_r.dot(q.masses);
    rep.mass_eta_half = q.total_mass - rep.mass_rho_half;

    // diffusion
    const Vector r_half = q.parcel_r;
    auto res = jko_step(q, tau, energy, grid, config.jko);
    q = std::move(res.rep);
    rep.jko = res.report;
    rep.energy_after = parcel_energy(q.positions, q.masses, energy);
    rep.entropy_after = parcel_entropy(q.positions, q.masses, energy);
    rep.max_density_after = q.densities().maxCoeff();
    rep.tv_r_after = parcel_tv_r(q);
    rep.tv_sigma_after = parcel_tv_sigma(q, config.grid);
    rep.mass_rho_after = q.parcel_r.dot(q.masses);
    rep.mass_eta_after = q.total_mass - rep.mass_rho_after;
    rep.parcels_segregated = all_pure(q.parcel_r);

    GridState s = quantile_to_state(q, grid, rep.t_end);
    rep.diag = diagnostics(s, energy, config.initial.r_fill);
    rep.grid_mass_rho = rep.diag.mass_rho;
    rep.grid_mass_eta = rep.diag.mass_eta;
    rep.overlap_bound = grid.dx() * linf(s.rho) * linf(s.eta);
    traj.sigma_max = std::max({traj.sigma_max, rep.linf_half, rep.diag.linf_sigma});

    // diffusion invariants
    if (rep.max_density_after > rep.max_density_half * (1.0 + 1e-8))
      fail("diffusion L-infinity stability", fmt(rep.max_density_after) + " > " + fmt(rep.max_density_half));
    if (!(q.parcel_r == r_half) || rep.tv_r_after != rep.tv_r_half) fail("diffusion TV of r", "parcel ratios changed");
    if (rep.tv_sigma_after > rep.tv_sigma_half * (1.0 + 1e-8) + 1e-14)
      fail("diffusion TV of sigma", fmt(rep.tv_sigma_after) + " > " + fmt(rep.tv_sigma_half));
    const double mtol = 1e-10 * q.total_mass;
    if (std::abs(rep.mass_rho_after - rep.mass_rho_half) > mtol ||
        std::abs(rep.mass_eta_after - rep.mass_eta_half) > mtol ||
        std::abs(rep.grid_mass_rho - rep.mass_rho_after) > mtol ||
        std::abs(rep.grid_mass_eta - rep.mass_eta_after) > mtol)
      fail("diffusion mass conservation", "species mass changed by more than 1e-10 relative");
    const double lhs = rep.jko.energy_after + rep.jko.w2_sq_increment / (2.0 * tau);
    if (lhs > rep.jko.energy_before + 1e-12 * (1.0 + std::abs(rep.jko.energy_before)))
      fail("minimising property", fmt(lhs) + " > " + fmt(rep.jko.energy_before));
    if (traj.initially_segregated && !rep.parcels_segregated) fail("segregation", "a parcel carries both species");
    if (traj.initially_segregated && rep.diag.overlap > rep.overlap_bound * (1.0 + 1e-12) + 1e-300)
      fail("segregation", "grid overlap " + fmt(rep.diag.overlap) + " > " + fmt(rep.overlap_bound));

    traj.states.push_back(std::move(s));
    traj.diagnostics.push_back(rep.diag);
    traj.steps.push_back(rep);
  }
  return traj;
}

const GridState& piecewise_constant_eval(const Trajectory& traj, double t) {
  const double T = traj.config.n_steps() * traj.config.tau;
  if (!(t >= 0.0) || t > T * (1.0 + 1e-12) + 1e-300) throw Error(Errc::OutOfRange, "time outside [0, T]");
  const int last = static_cast<int>(traj.states.size()) - 1;
  int n = static_cast<int>(std::floor(t / traj.config.tau * (1.0 + 1e-14)));
  n = std::clamp(n, 0, last);
  return traj.states[n];
}

}  // namespace crossdiff
