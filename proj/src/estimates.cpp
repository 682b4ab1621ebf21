#include <algorithm>
#include <cmath>

#include "crossdiff/scheme.hpp"

namespace crossdiff {

namespace {

// sup over (0, smax] of |f|, sampled on a log grid plus a linear grid.
template <class F>
double sampled_sup(const F& f, double smax) {
  double best = 0.0;
  for (int i = 0; i <= 2000; ++i) {
    const double s1 = smax * std::pow(1e-12, 1.0 - i / 2000.0);
    const double s2 = smax * i / 2000.0;
    best = std::max(best, std::abs(f(s1)));
    if (s2 > 0.0) best = std::max(best, std::abs(f(s2)));
  }
  return best;
}

}  // namespace

double entropy_rate_constant(const SchemeConfig& c, double sigma_max) {
  const double B = c.reaction.bound_F + c.reaction.bound_G;
  if (B == 0.0 || sigma_max <= 0.0) return 0.0;
  const auto& e = c.energy;
  // near the minimiser of s kappa(s) for the built-in families
  double sup = sampled_sup([&](double s) { return s * e.kappa(s); }, sigma_max);
  return c.grid.length() * B * sup;
}

double energy_rate_constant(const SchemeConfig& c, double sigma_max) {
  const double B = c.reaction.bound_F + c.reaction.bound_G;
  if (B == 0.0 || sigma_max <= 0.0) return 0.0;
  const auto& e = c.energy;
  return c.grid.length() * B * sampled_sup([&](double s) { return s * e.chi_prime(s); }, sigma_max);
}

bool EstimateReport::ok() const {
  return std::all_of(checks.begin(), checks.end(), [](const EstimateCheck& c) { return c.ok; });
}

const EstimateCheck* EstimateReport::find(const std::string& name) const {
  for (const auto& c : checks)
    if (c.name == name) return &c;
  return nullptr;
}

double hoelder_constant(const Trajectory& traj, int samples) {
  const int n = static_cast<int>(traj.states.size());
  if (n < 2) return 0.0;
  std::vector<int> idx;
  const int k = std::min(samples, n);
  for (int i = 0; i < k; ++i) idx.push_back(static_cast<int>(std::lround(double(i) * (n - 1) / (k - 1))));
  idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
  const double tau = traj.config.tau;
  double C = 0.0;
  for (std::size_t a = 0; a < idx.size(); ++a)
    for (std::size_t b = a + 1; b < idx.size(); ++b) {
      const auto& u = traj.states[idx[a]];
      const auto& v = traj.states[idx[b]];
      const double d = bounded_lipschitz(u, v);
      C = std::max(C, d / (std::sqrt(v.time - u.time) + std::sqrt(tau)));
    }
  return C;
}

EstimateReport check_cumulative_estimates(const Trajectory& traj, double eps_disc) {
  EstimateReport rep;
  rep.eps_disc = eps_disc;
  const auto& cfg = traj.config;
  const double tau = cfg.tau;
  const int N = static_cast<int>(traj.steps.size());
  const double T = N * tau;
  rep.entropy_rate = entropy_rate_constant(cfg, traj.sigma_max);
  rep.energy_rate = energy_rate_constant(cfg, traj.sigma_max);
  if (N == 0) {
    rep.checks.push_back({"entropy_step", 0.0, 0.0, true});
    rep.checks.push_back({"dissipation_sum", 0.0, 0.0, true});
    rep.checks.push_back({"total_square", 0.0, 0.0, true});
    return rep;
  }

  // (a) the reaction raises the entropy at most at rate c
  double worst = -INFINITY;
  for (const auto& s : traj.steps) worst = std::max(worst, s.entropy_half - s.entropy_n);
  const double slack_a = 1e-12 * (1.0 + std::abs(traj.steps.front().entropy_n));
  rep.checks.push_back({"entropy_step", worst, rep.entropy_rate * tau, worst <= rep.entropy_rate * tau + slack_a});

  // (b) summed dissipation
  double diss = 0.0, kmin = INFINITY, emin = INFINITY, w2 = 0.0, dstep = -INFINITY, mini = -INFINITY;
  for (const auto& s : traj.steps) {
    diss += s.jko.dissipation_lhs;
    kmin = std::min({kmin, s.entropy_n, s.entropy_after});
    emin = std::min({emin, s.energy_n, s.energy_after});
    w2 += s.jko.w2_sq_increment / (2.0 * tau);
    dstep = std::max(dstep, s.jko.dissipation_lhs - s.jko.entropy_drop);
    mini = std::max(mini, s.jko.energy_after + s.jko.w2_sq_increment / (2.0 * tau) - s.jko.energy_before);
  }
  const double k0 = traj.steps.front().entropy_n, e0 = traj.steps.front().energy_n;
  const double rhs_b = rep.entropy_rate * T + k0 - kmin + N * eps_disc;
  const double slack_b = 1e-12 * (1.0 + std::abs(k0)) * N;
  rep.checks.push_back({"dissipation_sum", diss, rhs_b, diss <= rhs_b + slack_b});
  // the per-step inequalities below only hold for the minimiser of a JKO step
  const bool jko = traj.solver == "jko";
  if (jko)
    rep.checks.push_back({"dissipation_step", dstep, eps_disc, dstep <= eps_disc + 1e-12 * (1.0 + std::abs(k0))});

  // (c) total square estimate and the minimising property behind it
  const double slack_c = 1e-12 * (1.0 + std::abs(e0)) * N;
  const double rhs_c = e0 - emin + rep.energy_rate * T;
  rep.total_square = w2;
  const bool min_ok = !jko || mini <= 1e-12 * (1.0 + std::abs(e0));
  if (jko) rep.checks.push_back({"minimising", mini, 0.0, min_ok});
  rep.checks.push_back({"total_square", w2, rhs_c, w2 <= rhs_c + slack_c && min_ok});

  rep.hoelder_constant = hoelder_constant(traj);
  return rep;
}

double weak_form_residual(const Trajectory& traj, int test_fn_count) {
  if (traj.states.size() < 2) throw Error(Errc::InsufficientSnapshots, "weak residual needs two snapshots");
  if (test_fn_count < 1) throw Error(Errc::InvalidArgument, "need at least one test function");
  const auto& cfg = traj.config;
  const Grid& g = cfg.grid;
  const int n = g.n_cells;
  const double dx = g.dx();
  const double L = g.length();

  // bumps (1 - y^2)^4 with y = (x - c) / w, supported inside the domain
  std::vector<Vector> zeta, dzeta;  // at centers and at faces (derivative)
  for (int k = 0; k < test_fn_count; ++k) {
    const double c = g.x_left + (k + 0.5) * L / test_fn_count;
    const double w = std::min({2.0 * L / test_fn_count, c - g.x_left, g.x_right - c});
    Vector z(n), dz(n + 1);
    for (int i = 0; i < n; ++i) {
      const double y = (g.center(i) - c) / w;
      z[i] = std::abs(y) < 1.0 ? std::pow(1.0 - y * y, 4) : 0.0;
    }
    for (int i = 0; i <= n; ++i) {
      const double y = (g.face(i) - c) / w;
      dz[i] = std::abs(y) < 1.0 ? -8.0 * y * std::pow(1.0 - y * y, 3) / w : 0.0;
    }
    zeta.push_back(std::move(z));
    dzeta.push_back(std::move(dz));
  }

  const auto& F1 = cfg.reaction.F1;
  const auto& F2 = cfg.reaction.F2;
  const auto& G1 = cfg.reaction.G1;
  const auto& G2 = cfg.reaction.G2;
  const double tau = cfg.tau;
  const auto& s0 = traj.states.front();
  std::vector<double> acc_rho(test_fn_count, 0.0), acc_eta(test_fn_count, 0.0);
  double worst = 0.0;
  for (std::size_t m = 0; m + 1 < traj.states.size(); ++m) {
    const auto& u = traj.states[m];
    Vector cp(n), src_r(n), src_e(n);
    for (int i = 0; i < n; ++i) {
      cp[i] = cfg.energy.chi_prime(u.rho[i] + u.eta[i]);
      src_r[i] = u.rho[i] * F1(u.rho[i], u.eta[i]) + u.eta[i] * G1(u.rho[i], u.eta[i]);
      src_e[i] = u.eta[i] * F2(u.rho[i], u.eta[i]) + u.rho[i] * G2(u.rho[i], u.eta[i]);
    }
    const auto& next = traj.states[m + 1];
    for (int k = 0; k < test_fn_count; ++k) {
      double flux_r = 0.0, flux_e = 0.0;
      for (int i = 0; i + 1 < n; ++i) {
        const double grad = (cp[i + 1] - cp[i]) / dx;
        flux_r += 0.5 * (u.rho[i] + u.rho[i + 1]) * grad * dzeta[k][i + 1];
        flux_e += 0.5 * (u.eta[i] + u.eta[i + 1]) * grad * dzeta[k][i + 1];
      }
      acc_rho[k] += tau * dx * (-flux_r + src_r.dot(zeta[k]));
      acc_eta[k] += tau * dx * (-flux_e + src_e.dot(zeta[k]));
      const double lhs_r = dx * (next.rho - s0.rho).dot(zeta[k]);
      const double lhs_e = dx * (next.eta - s0.eta).dot(zeta[k]);
      worst = std::max({worst, std::abs(lhs_r - acc_rho[k]), std::abs(lhs_e - acc_eta[k])});
    }
  }
  return worst;
}

}  // namespace crossdiff
