#include "crossdiff/fvref.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace crossdiff {

namespace {

double grid_energy(const Vector& sigma, const Grid& grid, const EnergySpec& spec) {
  double e = 0.0;
  for (Eigen::Index i = 0; i < sigma.size(); ++i) e += spec.chi(sigma[i]);
  return e * grid.dx();
}

double max_beta_prime(const Vector& sigma, const EnergySpec& spec) {
  double b = 0.0;
  for (Eigen::Index i = 0; i < sigma.size(); ++i)
    if (sigma[i] > 0.0) b = std::max(b, spec.beta_prime(sigma[i]));
  return b;
}

bool cellwise_segregated(const GridState& s) {
  for (Eigen::Index i = 0; i < s.rho.size(); ++i)
    if (s.rho[i] > 0.0 && s.eta[i] > 0.0) return false;
  return true;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

}  // namespace

double cfl_dt(const Vector& sigma, const EnergySpec& spec, const Grid& grid, const FvOptions& opts) {
  const double dx = grid.dx();
  return std::min(opts.dt_max, opts.cfl * dx * dx / (2.0 * max_beta_prime(sigma, spec) + 1e-30));
}

GridState fv_diffusion_step(const GridState& state, double dt, const EnergySpec& spec) {
  const Grid& g = state.grid;
  const int n = g.n_cells;
  const double dx = g.dx();
  const Vector sigma = state.rho + state.eta;
  const double bound = dx * dx / (2.0 * max_beta_prime(sigma, spec) + 1e-30);
  if (!(dt > 0.0) || dt > bound * (1.0 + 1e-12))
    throw Error(Errc::CflViolation, "dt " + fmt(dt) + " exceeds the explicit bound " + fmt(bound));

  Vector cp(n);
  for (int i = 0; i < n; ++i) cp[i] = spec.chi_prime(sigma[i]);
  Vector fr = Vector::Zero(n + 1), fe = Vector::Zero(n + 1);
  for (int i = 0; i + 1 < n; ++i) {
    const double u = -(cp[i + 1] - cp[i]) / dx;
    const double up = std::max(u, 0.0), um = std::min(u, 0.0);
    fr[i + 1] = up * state.rho[i] + um * state.rho[i + 1];
    fe[i + 1] = up * state.eta[i] + um * state.eta[i + 1];
  }
  GridState out = state;
  const double k = dt / dx;
  for (int i = 0; i < n; ++i) {
    out.rho[i] -= k * (fr[i + 1] - fr[i]);
    out.eta[i] -= k * (fe[i + 1] - fe[i]);
  }
  out.time = state.time + dt;
  return out;
}

Trajectory run_fv(const SchemeConfig& config, const FvOptions& opts) {
  validate(config);
  if (!(opts.cfl > 0.0 && opts.cfl < 1.0) || !(opts.dt_max > 0.0))
    throw Error(Errc::InvalidArgument, "fv options need 0 < cfl < 1 and dt_max > 0");
  const Grid& grid = config.grid;
  const double tau = config.tau;
  const int N = config.n_steps();
  const double r_fill = config.initial.r_fill;
  const EnergySpec& energy = config.energy;
  const ReactionSpec& reaction = config.reaction;
  const int substeps = default_substeps(tau, config.substep_dt);

  Trajectory traj;
  traj.solver = "fv";
  traj.config = config;
  traj.config.fv = opts;
  GridState s = make_initial(config.initial, grid);
  traj.states.push_back(s);
  traj.diagnostics.push_back(diagnostics(s, energy, r_fill));
  traj.sigma_max = traj.diagnostics.back().linf_sigma;
  traj.initially_segregated = reaction.no_cross_reaction && cellwise_segregated(s) &&
                              mass(s.rho + s.eta, grid) > kVacTol;

  for (int n = 0; n < N; ++n) {
    StepReport rep;
    rep.step = n;
    rep.t_start = n * tau;
    rep.t_end = (n + 1) * tau;
    auto fail = [&](const std::string& which, const std::string& detail) {
      auto partial = std::make_shared<Trajectory>(traj);
      throw InvariantViolation(n, which, detail, rep, partial);
    };

    // reaction, cell by cell
    const TransformedState tn = to_transformed(s, r_fill);
    rep.energy_n = grid_energy(tn.sigma, grid, energy);
    rep.entropy_n = entropy_K(tn.sigma, grid, energy);
    rep.linf_n = linf(tn.sigma);
    rep.tv_n = total_variation(tn.sigma) + total_variation(tn.r);
    ReactionStepInfo info;
    TransformedState th = reaction_step(tn, tau, reaction, substeps, &info);
    rep.clamp = info.max_clamp;
    rep.clamp_budget = info.clamp_budget;
    rep.linf_half = linf(th.sigma);
    rep.linf_growth = linf_growth_bound(reaction, tau);
    rep.tv_half = total_variation(th.sigma) + total_variation(th.r);
    rep.gronwall_rate = tv_gronwall_rate(reaction, rep.linf_n * rep.linf_growth);
    rep.tv_growth = std::exp(rep.gronwall_rate * tau);
    if (rep.clamp > rep.clamp_budget) fail("reaction clamp budget", fmt(rep.clamp) + " > " + fmt(rep.clamp_budget));
    if (th.sigma.minCoeff() < 0.0 || th.r.minCoeff() < 0.0 || th.r.maxCoeff() > 1.0)
      fail("reaction bounds", "sigma < 0 or r outside [0,1]");
    if (rep.linf_half > rep.linf_n * rep.linf_growth * (1.0 + 1e-12))
      fail("reaction L-infinity bound", fmt(rep.linf_half) + " > " + fmt(rep.linf_n * rep.linf_growth));

    GridState h = from_transformed(th);
    h.time = rep.t_start;
    rep.energy_half = grid_energy(th.sigma, grid, energy);
    rep.entropy_half = entropy_K(th.sigma, grid, energy);
    rep.max_density_half = linf(th.sigma);
    rep.tv_r_half = total_variation(th.r);
    rep.tv_sigma_half = total_variation(th.sigma);
    rep.mass_rho_half = mass(h.rho, grid);
    rep.mass_eta_half = mass(h.eta, grid);

    // diffusion, sub-cycled to cover tau exactly
    GridState d = h;
    double t = 0.0;
    int sub = 0;
    while (t < tau) {
      double dt = cfl_dt(d.rho + d.eta, energy, grid, opts);
      if (t + dt >= tau * (1.0 - 1e-12)) dt = tau - t;
      d = fv_diffusion_step(d, dt, energy);
      t = (t + dt >= tau * (1.0 - 1e-12)) ? tau : t + dt;
      ++sub;
      if (d.rho.minCoeff() < 0.0 || d.eta.minCoeff() < 0.0)
        fail("fv nonnegativity", "negative cell value after a sub-step");
    }
    d.time = rep.t_end;

    const Vector sig = d.rho + d.eta;
    rep.diag = diagnostics(d, energy, r_fill);
    rep.energy_after = grid_energy(sig, grid, energy);
    rep.entropy_after = rep.diag.entropy_K;
    rep.max_density_after = rep.diag.linf_sigma;
    rep.tv_r_after = rep.diag.tv_r;
    rep.tv_sigma_after = rep.diag.tv_sigma;
    rep.mass_rho_after = rep.diag.mass_rho;
    rep.mass_eta_after = rep.diag.mass_eta;
    rep.grid_mass_rho = rep.diag.mass_rho;
    rep.grid_mass_eta = rep.diag.mass_eta;
    rep.parcels_segregated = cellwise_segregated(d);
    rep.overlap_bound = grid.dx() * linf(d.rho) * linf(d.eta);

    JkoReport& jr = rep.jko;
    jr.iterations = sub;
    jr.energy_before = rep.energy_half;
    jr.energy_after = rep.energy_after;
    jr.entropy_drop = rep.entropy_half - rep.entropy_after;
    jr.dissipation_lhs = tau * rep.diag.dissipation;
    const double mh = mass(th.sigma, grid);
    if (mh > kVacTol) {
      const double w2 = wasserstein_p(th.sigma, sig, grid, 2);
      jr.w2_sq_increment = w2 * w2;
    }

    const double mtol = 1e-10 * std::max(mh, kVacTol);
    if (std::abs(rep.mass_rho_after - rep.mass_rho_half) > mtol ||
        std::abs(rep.mass_eta_after - rep.mass_eta_half) > mtol)
      fail("diffusion mass conservation", "species mass changed by more than 1e-10 relative");
    // upwinding smears a contact between the species over several cells, so
    // the overlap is only recorded here (diag.overlap against overlap_bound)

    traj.sigma_max = std::max({traj.sigma_max, rep.linf_half, rep.diag.linf_sigma});
    s = std::move(d);
    traj.states.push_back(s);
    traj.diagnostics.push_back(rep.diag);
    traj.steps.push_back(rep);
  }
  return traj;
}

}  // namespace crossdiff
