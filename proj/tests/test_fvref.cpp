#include <cmath>
#include <random>

#include "crossdiff/fvref.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace crossdiff;

namespace {

GridState random_state(const Grid& g, std::mt19937& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Vector rho(g.n_cells), eta(g.n_cells);
  for (int i = 0; i < g.n_cells; ++i) {
    rho[i] = u(rng);
    eta[i] = u(rng) < 0.3 ? 0.0 : u(rng);
  }
  return make_state(g, rho, eta);
}

SchemeConfig adjacent_lv(int n, double tau, double T) {
  SchemeConfig c;
  c.grid = Grid(-2.0, 2.0, n);
  c.n_parcels = n;
  c.tau = tau;
  c.t_final = T;
  c.reaction = ReactionSpec::lv_asymmetric();
  c.initial.kind = InitialKind::Indicators;
  c.initial.rho_a = -1.0;
  c.initial.rho_b = 0.0;
  c.initial.rho_h = 0.5;
  c.initial.eta_a = 0.0;
  c.initial.eta_b = 1.0;
  c.initial.eta_h = 0.5;
  return c;
}

}  // namespace

TEST_CASE("explicit step bound") {
  const EnergySpec e = EnergySpec::quadratic(0.5);
  FvOptions o;
  o.dt_max = 1.0;
  const Grid g(0.0, 1.0, 100);
  CHECK(cfl_dt(Vector::Zero(100), e, g, o) == 1.0);
  CHECK(cfl_dt(Vector::Ones(100), e, g, o) == doctest::Approx(2e-5).epsilon(1e-12));
  const Grid h(0.0, 1.0, 200);
  CHECK(cfl_dt(Vector::Ones(200), e, h, o) == doctest::Approx(0.25 * cfl_dt(Vector::Ones(100), e, g, o)));
  o.dt_max = 1e-6;
  CHECK(cfl_dt(Vector::Ones(100), e, g, o) == 1e-6);
}

TEST_CASE("constant sigma is stationary") {
  const Grid g(-1.0, 1.0, 50);
  Vector rho(50), eta(50);
  for (int i = 0; i < 50; ++i) {
    rho[i] = 0.3 + 0.4 * (i % 3 == 0);
    eta[i] = 1.0 - rho[i];
  }
  const auto s = make_state(g, rho, eta);
  const auto t = fv_diffusion_step(s, 1e-4, EnergySpec::quadratic(0.5));
  CHECK(t.rho == s.rho);
  CHECK(t.eta == s.eta);
}

TEST_CASE("mass conservation, positivity and sigma consistency") {
  std::mt19937 rng(7);
  const Grid g(-1.0, 2.0, 60);
  for (const auto& e : {EnergySpec::quadratic(0.5), EnergySpec::power_law(3.0, 1.0)}) {
    for (int trial = 0; trial < 20; ++trial) {
      const auto s = random_state(g, rng);
      const double dt = cfl_dt(s.rho + s.eta, e, g, FvOptions{});
      const auto t = fv_diffusion_step(s, dt, e);
      CHECK(std::abs(mass(t.rho, g) - mass(s.rho, g)) <= 1e-14 * mass(s.rho, g));
      CHECK(std::abs(mass(t.eta, g) - mass(s.eta, g)) <= 1e-14 * mass(s.eta, g));
      CHECK(t.rho.minCoeff() >= 0.0);
      CHECK(t.eta.minCoeff() >= 0.0);
      // the sum evolves like sigma carried by the same velocity
      const auto only = fv_diffusion_step(make_state(g, s.rho + s.eta, Vector::Zero(60)), dt, e);
      CHECK(((t.rho + t.eta) - only.rho).cwiseAbs().maxCoeff() <= 1e-14);
    }
  }
}

TEST_CASE("step above the explicit bound is rejected") {
  const Grid g(0.0, 1.0, 100);
  const auto s = make_state(g, Vector::Ones(100), Vector::Zero(100));
  CHECK_THROWS_AS(fv_diffusion_step(s, 1e-3, EnergySpec::quadratic(0.5)), Error);
}

TEST_CASE("zero data stays zero") {
  SchemeConfig c = adjacent_lv(40, 0.1, 1.0);
  c.reaction = ReactionSpec::zero();
  c.initial.rho_h = c.initial.eta_h = 0.0;
  const auto tr = run_fv(c);
  REQUIRE(tr.states.size() == 11);
  CHECK(tr.solver == "fv");
  for (const auto& s : tr.states) CHECK((s.rho + s.eta).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("Barenblatt accuracy of the finite-volume solver") {
  SchemeConfig c;
  c.grid = Grid(-3.0, 3.0, 800);
  c.tau = 1e-2;
  c.t_final = 0.4;
  c.initial.kind = InitialKind::Barenblatt;
  c.initial.t0 = 0.1;
  const auto tr = run_fv(c);
  const GridState& s = tr.states.back();
  const double C = oracle::barenblatt_C(1.0);
  Vector ex(800);
  for (int i = 0; i < 800; ++i)
    ex[i] = (oracle::barenblatt_cdf(0.5, s.grid.face(i + 1), C) - oracle::barenblatt_cdf(0.5, s.grid.face(i), C)) /
            s.grid.dx();
  CHECK(l1_distance(s.rho + s.eta, ex, s.grid) <= 1e-2);
  CHECK(check_cumulative_estimates(tr).ok());
}

TEST_CASE("asymmetric Lotka-Volterra from adjacent indicators") {
  const auto a = run_fv(adjacent_lv(128, 1e-2, 5.0));
  const auto& d0 = a.diagnostics.front();
  const auto& d1 = a.diagnostics.back();
  CHECK(d1.mass_rho > d0.mass_rho);
  CHECK(d1.mass_eta > d0.mass_eta);
  // the region occupied by rho grows
  auto support = [](const GridState& s) {
    return static_cast<double>((s.rho.array() > 1e-3).count()) * s.grid.dx();
  };
  CHECK(support(a.states.back()) > support(a.states.front()));
  // upwinding smears the contact: the overlap is not confined to one cell,
  // but it decreases under refinement
  auto worst_overlap = [](const Trajectory& t) {
    double w = 0.0;
    for (const auto& s : t.steps) w = std::max(w, s.diag.overlap);
    return w;
  };
  const auto b = run_fv(adjacent_lv(256, 1e-2, 5.0));
  CHECK(worst_overlap(b) < worst_overlap(a));
}

TEST_CASE("finite volumes agree with the JKO scheme on a smooth bump") {
  auto cfg = [](int n, double tau) {
    SchemeConfig c;
    c.grid = Grid(-2.0, 2.0, n);
    c.n_parcels = n;
    c.tau = tau;
    c.t_final = 0.1;
    c.initial.kind = InitialKind::Gaussian;
    c.initial.width = 0.3;
    return c;
  };
  auto diff = [](const SchemeConfig& c) {
    const auto a = run_splitting(c), b = run_fv(c);
    const auto &x = a.states.back(), &y = b.states.back();
    return l1_distance(x.rho + x.eta, y.rho + y.eta, c.grid);
  };
  const double d1 = diff(cfg(100, 4e-3)), d2 = diff(cfg(200, 2e-3));
  CHECK(d1 <= 0.1);
  CHECK(d2 < d1);
}
