// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "crossdiff/config.hpp"
#include "crossdiff/fvref.hpp"
#include "crossdiff/jko.hpp"
#include "crossdiff/scheme.hpp"
#include "oracles.hpp"

using namespace crossdiff;

namespace {

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

SchemeConfig preset(const std::string& name) { return parse_config(std::string(CROSSDIFF_PRESET_DIR) + "/" + name); }

SchemeConfig refined(SchemeConfig c, int n, double tau) {
  c.grid = Grid(c.grid.x_left, c.grid.x_right, n);
  c.n_parcels = n;
  c.tau = tau;
  return c;
}

SchemeConfig barenblatt(int n, double tau) {
  SchemeConfig c;
  c.grid = Grid(-3.0, 3.0, n);
  c.n_parcels = n;
  c.tau = tau;
  c.t_final = 0.4;
  c.energy = EnergySpec::quadratic(0.5);
  c.initial.kind = InitialKind::Barenblatt;
  c.initial.t0 = 0.1;
  c.initial.mass = 1.0;
  return c;
}

double barenblatt_error(const Trajectory& tr) {
  const GridState& s = tr.states.back();
  const double C = oracle::barenblatt_C(1.0);
  const double t = 0.1 + tr.config.t_final;
  Vector ex(s.grid.n_cells);
  for (int i = 0; i < s.grid.n_cells; ++i)
    ex[i] = (oracle::barenblatt_cdf(t, s.grid.face(i + 1), C) - oracle::barenblatt_cdf(t, s.grid.face(i), C)) /
            s.grid.dx();
  return l1_distance(s.rho + s.eta, ex, s.grid);
}

double final_l1_sigma(const Trajectory& a, const Trajectory& b) {
  const GridState &x = a.states.back(), &y = b.states.back();
  return l1_distance(x.rho + x.eta, y.rho + y.eta, x.grid);
}

// Every JKO run of the suite is kept for the per-step theorem checks.
std::vector<std::pair<std::string, const Trajectory*>> g_runs;
std::map<std::string, Trajectory> g_cache;

const Trajectory& run(const std::string& label, const SchemeConfig& c) {
  auto it = g_cache.find(label);
  if (it != g_cache.end()) return it->second;
  const Trajectory& t = g_cache.emplace(label, run_splitting(c)).first->second;
  g_runs.emplace_back(label, &t);
  return t;
}

struct Line {
  bool pass;
  std::string detail;
};

int g_failures = 0;

void report(int id, const std::string& name, const std::function<Line()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Line l;
  try {
    l = body();
  } catch (const std::exception& e) {
    l = {false, std::string("exception: ") + e.what()};
  }
  if (!l.pass) ++g_failures;
  std::printf("[%s] %2d %s: %s (%.1f s)\n", l.pass ? "PASS" : "FAIL", id, name.c_str(), l.detail.c_str(),
              seconds_since(t0));
  std::fflush(stdout);
}

Vector random_density(const Grid& g, std::mt19937& rng, double mass_target) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Vector f = Vector::Zero(g.n_cells);
  const int bumps = 1 + static_cast<int>(3 * u(rng));
  for (int b = 0; b < bumps; ++b) {
    const int a = static_cast<int>(u(rng) * g.n_cells * 0.8);
    const int w = 2 + static_cast<int>(u(rng) * g.n_cells * 0.2);
    const double h = 0.2 + u(rng);
    for (int i = a; i < std::min(g.n_cells, a + w); ++i) f[i] += h;
  }
  if (mass_target > 0.0) f *= mass_target / mass(f, g);
  return f;
}

}  // namespace

int main() {
  std::printf("crossdiff acceptance suite\n");

  report(9, "objective gradient vs central differences", [] {
    std::mt19937 gen(2024);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst = 0.0;
    int points = 0;
    for (int trial = 0; trial < 50; ++trial, ++points) {
      const EnergySpec spec = trial % 2 ? EnergySpec::power_law(1.5 + 2.0 * u(gen), 0.5 + u(gen))
                                        : EnergySpec::quadratic(0.25 + u(gen));
      const int M = 4 + static_cast<int>(40 * u(gen));
      Vector X(M + 1), Y(M + 1), m(M);
      X[0] = -1.0 + 0.3 * u(gen);
      Y[0] = -1.0 + 0.3 * u(gen);
      for (int k = 0; k < M; ++k) {
        X[k + 1] = X[k] + 0.01 + 0.1 * u(gen);
        Y[k + 1] = Y[k] + 0.01 + 0.1 * u(gen);
        m[k] = 0.005 + 0.05 * u(gen);
      }
      const double tau = 0.005 + 0.2 * u(gen);
      const auto f = jko_objective(X, Y, tau, spec, m);
      for (int i = 0; i <= M; ++i) {
        const double h = 1e-7;
        Vector Xp = X, Xm = X;
        Xp[i] += h;
        Xm[i] -= h;
        const double fd =
            (jko_objective(Xp, Y, tau, spec, m).value - jko_objective(Xm, Y, tau, spec, m).value) / (2 * h);
        worst = std::max(worst, std::abs(fd - f.gradient[i]));
      }
    }
    return Line{worst <= 1e-5, fmt("max |analytic - central difference| = %.2e over %d points (tol 1e-5)", worst,
                                   points)};
  });

  report(1, "Barenblatt accuracy", [] {
    const auto t0 = std::chrono::steady_clock::now();
    const Trajectory& a = run("barenblatt M=400", barenblatt(400, 1e-3));
    const double secs = seconds_since(t0);
    const Trajectory& b = run("barenblatt M=800", barenblatt(800, 5e-4));
    const double ea = barenblatt_error(a), eb = barenblatt_error(b);
    const double ratio = ea / eb;
    return Line{ea <= 1e-2 && ratio >= 1.6 && secs <= 60.0,
                fmt("L1 = %.3e at M=N=400 tau=1e-3 (tol 1e-2), %.3e at M=N=800 tau=5e-4, ratio %.2f (>= 1.6), "
                    "runtime %.2f s (<= 60)",
                    ea, eb, ratio, secs)};
  });

  report(3, "entropy dissipation per step", [] {
    const Trajectory& a = run("barenblatt M=200", barenblatt(200, 1e-3));
    const Trajectory& b = run("barenblatt M=400", barenblatt(400, 1e-3));
    auto defect = [](const Trajectory& t) {
      double d = -INFINITY;
      for (const auto& s : t.steps) d = std::max(d, s.jko.dissipation_lhs - s.jko.entropy_drop);
      return d;
    };
    const double da = defect(a), db = defect(b);
    const double eps_a = std::max(0.0, da), eps_b = std::max(0.0, db);
    const bool holds = db <= eps_a;
    const bool halves = eps_b <= 0.5 * eps_a;
    return Line{holds && halves,
                fmt("max_n (tau*dissipation - entropy drop) = %.3e at M=200, %.3e at M=400; fitted eps_disc %.3e -> "
                    "%.3e",
                    da, db, eps_a, eps_b)};
  });

  report(6, "steady state of the Fig.-1 preset", [] {
    const Trajectory& t = run("fig1", preset("fig1.toml"));
    const GridState& s = t.states.back();
    const double dev = ((s.rho + s.eta).array() - 1.0).abs().maxCoeff();
    return Line{dev <= 1e-2 && std::abs(s.time - 10.0) < 1e-9,
                fmt("||sigma - 1||_inf = %.3e at t = %.2f (tol 1e-2)", dev, s.time)};
  });

  report(5, "segregation on the Fig.-1 and Fig.-3 presets", [] {
    std::string detail;
    bool ok = true;
    for (const char* name : {"fig1", "fig3"}) {
      const Trajectory& t = run(name, preset(std::string(name) + ".toml"));
      bool pure = t.initially_segregated;
      double worst = 0.0;
      const GridState& s0 = t.states.front();
      const double b0 = s0.grid.dx() * linf(s0.rho) * linf(s0.eta);
      bool within = overlap(s0.rho, s0.eta, s0.grid) <= b0;
      for (const auto& s : t.steps) {
        pure = pure && s.parcels_segregated;
        within = within && s.diag.overlap <= s.overlap_bound;
        if (s.overlap_bound > 0) worst = std::max(worst, s.diag.overlap / s.overlap_bound);
      }
      const double T = t.states.back().time;
      ok = ok && pure && within && T >= 10.0 - 1e-9;
      detail += fmt("%s: parcel r in {0,1} %s, max overlap/bound %.3f over [0, %.0f]; ", name, pure ? "yes" : "NO",
                    worst, T);
    }
    return Line{ok, detail.substr(0, detail.size() - 2)};
  });

  report(4, "total-square estimate", [] {
    std::string detail;
    bool ok = true;
    const std::vector<std::pair<std::string, std::string>> presets = {
        {"fig1", "fig1.toml"}, {"fig3", "fig3.toml"}, {"fig5", "fig5.toml"},
        {"barenblatt preset", "barenblatt.toml"}, {"gaussian preset", "gaussian.toml"}};
    for (const auto& [label, file] : presets) {
      const auto rep = check_cumulative_estimates(run(label, preset(file)));
      const auto* c = rep.find("total_square");
      ok = ok && c && c->ok;
      detail += fmt("%s %.3e <= %.3e; ", label.c_str(), c->lhs, c->rhs);
    }
    const SchemeConfig f1 = preset("fig1.toml");
    SchemeConfig half = f1;
    half.tau = f1.tau / 2;
    const double s1 = check_cumulative_estimates(run("fig1", f1)).total_square;
    const double s2 = check_cumulative_estimates(run("fig1 tau/2", half)).total_square;
    const double change = std::abs(s2 - s1) / s1;
    ok = ok && change < 0.25;
    detail += fmt("fig1 sum %.4e -> %.4e at tau/2 (change %.1f%%, < 25%%)", s1, s2, 100 * change);
    return Line{ok, detail};
  });

  report(7, "cross-solver agreement", [] {
    std::string detail;
    const SchemeConfig g = preset("gaussian.toml");
    std::vector<double> dg;
    for (int k = 0; k < 3; ++k) {
      const SchemeConfig c = refined(g, 400 << k, 1e-3 / (1 << k));
      dg.push_back(final_l1_sigma(run("gaussian level " + std::to_string(k), c), run_fv(c)));
    }
    const bool g_ok = dg[0] <= 5e-2 && dg[1] < dg[0] && dg[2] < dg[1];
    detail += fmt("Gaussian L1(sigma) %.3e, %.3e, %.3e (first <= 5e-2, decreasing); ", dg[0], dg[1], dg[2]);
    const SchemeConfig f3 = preset("fig3.toml");
    std::vector<double> df;
    for (int k = 0; k < 2; ++k) {
      const SchemeConfig c = refined(f3, 400 << k, 1e-3 / (1 << k));
      df.push_back(final_l1_sigma(run("fig3 level " + std::to_string(k), c), run_fv(c)));
    }
    const bool f_ok = df[0] <= 1e-1 && df[1] < df[0];
    detail += fmt("Fig.-3 with reaction to t=%.0f: %.3e, %.3e (first <= 1e-1, decreasing)", f3.t_final, df[0], df[1]);
    return Line{g_ok && f_ok, detail};
  });

  report(8, "metric layer", [] {
    std::mt19937 rng(99);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const Grid g(-4.0, 4.0, 400);
    // translations by whole cells of compactly supported densities
    double worst_tr = 0.0;
    for (int k = 0; k < 20; ++k) {
      Vector f = Vector::Zero(400);
      const Vector core = random_density(Grid(-1.0, 1.0, 100), rng, 0.5 + u(rng));
      f.segment(150, 100) = core;
      const int shift = static_cast<int>(std::lround((u(rng) - 0.5) * 200));
      Vector h = Vector::Zero(400);
      h.segment(150 + shift, 100) = core;
      const double a = shift * g.dx();
      const double expect = std::abs(a) * std::sqrt(mass(f, g));
      worst_tr = std::max(worst_tr, std::abs(wasserstein_p(f, h, g, 2) - expect));
    }
    // d_BL against L1 and W1
    double worst_bl = -INFINITY;
    for (int k = 0; k < 100; ++k) {
      const bool equal = k % 2 == 0;
      const Vector f = random_density(g, rng, equal ? 1.0 : 0.0);
      const Vector h = random_density(g, rng, equal ? 1.0 : 0.0);
      double bound = l1_distance(f, h, g);
      if (equal) bound = std::min(bound, wasserstein_p(f, h, g, 1));
      worst_bl = std::max(worst_bl, bounded_lipschitz(f, h, g) - bound);
    }
    // triangle inequality
    double worst_tri = -INFINITY;
    for (int k = 0; k < 100; ++k) {
      const Vector a = random_density(g, rng, 1.0), b = random_density(g, rng, 1.0), c = random_density(g, rng, 1.0);
      for (int p : {1, 2})
        worst_tri = std::max(worst_tri, wasserstein_p(a, c, g, p) - wasserstein_p(a, b, g, p) -
                                            wasserstein_p(b, c, g, p));
    }
    const bool ok = worst_tr <= 1e-6 && worst_bl <= 1e-12 && worst_tri <= 1e-8;
    return Line{ok, fmt("translation error %.2e (tol 1e-6), max d_BL - min(L1, W1) %.2e, max triangle defect %.2e "
                        "(tol 1e-8)",
                        worst_tr, worst_bl, worst_tri)};
  });

  report(10, "weak-form residual under refinement", [] {
    const SchemeConfig f1 = preset("fig1.toml");
    std::vector<double> r;
    for (int k = 0; k < 3; ++k) {
      const double tau = 4e-2 / (1 << k);
      const int n = 64 << k;
      r.push_back(weak_form_residual(run("fig1 weak level " + std::to_string(k), refined(f1, n, tau)), 8));
    }
    return Line{r[1] < r[0] && r[2] < r[1],
                fmt("residual %.3e (tau=4e-2, N=64), %.3e (2e-2, 128), %.3e (1e-2, 256)", r[0], r[1], r[2])};
  });

  // runs last so that it covers every trajectory produced above
  report(2, "per-step theorem suite", [] {
    int steps = 0;
    double worst_linf = -INFINITY, worst_gron = -INFINITY, worst_mass = 0.0;
    bool r_ok = true, sigma_ok = true, tv_r_ok = true;
    for (const auto& [label, t] : g_runs) {
      for (const auto& s : t->states) {
        const TransformedState tr = to_transformed(s, t->config.initial.r_fill);
        r_ok = r_ok && tr.r.minCoeff() >= 0.0 && tr.r.maxCoeff() <= 1.0;
        sigma_ok = sigma_ok && tr.sigma.minCoeff() >= 0.0;
      }
      for (const auto& s : t->steps) {
        ++steps;
        worst_linf = std::max(worst_linf, (s.max_density_after - s.max_density_half) / s.max_density_half);
        tv_r_ok = tv_r_ok && s.tv_r_after == s.tv_r_half;
        worst_gron = std::max(worst_gron, s.tv_half - s.tv_n * s.tv_growth);
        const double m = s.mass_rho_half + s.mass_eta_half;
        worst_mass = std::max({worst_mass, std::abs(s.mass_rho_after - s.mass_rho_half) / m,
                               std::abs(s.mass_eta_after - s.mass_eta_half) / m,
                               std::abs(s.grid_mass_rho - s.mass_rho_after) / m,
                               std::abs(s.grid_mass_eta - s.mass_eta_after) / m});
      }
    }
    const bool ok = r_ok && sigma_ok && tv_r_ok && worst_linf <= 1e-8 && worst_gron <= 1e-12 && worst_mass <= 1e-10;
    return Line{ok, fmt("%zu runs, %d steps: r in [0,1] %s, sigma >= 0 %s, max density change %.2e (<= 1e-8 rel), "
                        "TV(r) invariant %s, TV growth over Gronwall bound %.2e, species mass drift %.2e (<= 1e-10)",
                        g_runs.size(), steps, r_ok ? "yes" : "NO", sigma_ok ? "yes" : "NO", worst_linf,
                        tv_r_ok ? "yes" : "NO", worst_gron, worst_mass)};
  });

  std::printf("%s: %d criteria failed\n", g_failures ? "FAILED" : "ALL PASSED", g_failures);
  return g_failures ? 1 : 0;
}
