#include <cmath>
#include <random>

#include "crossdiff/transport.hpp"
#include "doctest.h"

using namespace crossdiff;

namespace {

Vector indicator(const Grid& g, double a, double b, double h) {
  Vector f = Vector::Zero(g.n_cells);
  for (int i = 0; i < g.n_cells; ++i) {
    const double lo = std::max(a, g.face(i)), hi = std::min(b, g.face(i + 1));
    if (hi > lo) f[i] = h * (hi - lo) / g.dx();
  }
  return f;
}

Vector smooth(const Grid& g, double c, double w) {
  Vector f(g.n_cells);
  for (int i = 0; i < g.n_cells; ++i) f[i] = std::exp(-std::pow((g.center(i) - c) / w, 2)) + 0.05;
  return f;
}

// Brute-force maximum of the discrete dual over a fine lattice.
double bl_brute(const Vector& f, const Vector& g, const Grid& grid, int refine) {
  const int n = grid.n_cells;
  const double dx = grid.dx();
  const double step = dx / refine;
  const int nv = static_cast<int>(std::lround(2.0 / step)) + 1;
  std::vector<double> vals(nv);
  for (int k = 0; k < nv; ++k) vals[k] = -1.0 + k * step;
  std::vector<int> idx(n + 1, 0);
  double best = -1e300;
  while (true) {
    bool ok = true;
    for (int k = 0; k < n && ok; ++k) ok = std::abs(vals[idx[k + 1]] - vals[idx[k]]) <= dx + 1e-12;
    if (ok) {
      double v = 0.0;
      for (int i = 0; i < n; ++i) v += 0.5 * dx * (f[i] - g[i]) * (vals[idx[i]] + vals[idx[i + 1]]);
      best = std::max(best, v);
    }
    int p = 0;
    while (p <= n && ++idx[p] == nv) idx[p++] = 0;
    if (p > n) break;
  }
  return best;
}

}  // namespace

TEST_CASE("uniform quantiles") {
  const Grid g(0.0, 1.0, 4);
  TransformedState t{g, Vector::Ones(4), Vector::Ones(4), 0.0};
  const auto q = grid_to_quantile(t, 4);
  for (int k = 0; k <= 4; ++k) CHECK(q.positions[k] == doctest::Approx(0.25 * k));
  CHECK(q.parcel_r == Vector::Ones(4));
  CHECK(q.masses.sum() == q.total_mass);

  const auto back = quantile_to_grid(q, g);
  for (int i = 0; i < 4; ++i) CHECK(back.sigma[i] == doctest::Approx(1.0));

  QuantileRep q0 = q;
  q0.parcel_r.setZero();
  const auto s = quantile_to_state(q0, g);
  CHECK(s.rho.cwiseAbs().maxCoeff() == 0.0);
  CHECK(s.eta[2] == doctest::Approx(1.0));
}

TEST_CASE("round trip refines at first order") {
  // The piecewise-constant parcel deposit aliases against the cells, so the
  // error is about dx * tv(sigma) / 6; the 1e-3 bound at N = M = 400 is checked
  // on a mildly varying profile and the halving on a Gaussian.
  for (int pass = 0; pass < 2; ++pass) {
    double prev = 0.0;
    for (int n : {400, 800}) {
      const Grid g(-1.0, 1.0, n);
      Vector f = smooth(g, 0.1, 0.5);
      if (pass == 0)
        for (int i = 0; i < n; ++i) f[i] = 1.0 + 0.25 * std::cos(M_PI * g.center(i));
      TransformedState t{g, f, Vector::Constant(n, 0.3), 0.0};
      const auto q = grid_to_quantile(t, n);
      const auto back = quantile_to_grid(q, g);
      const double err = l1_distance(back.sigma, t.sigma, g);
      if (pass == 0 && n == 400) CHECK(err <= 1e-3);
      CHECK(std::abs(mass(back.sigma, g) - q.total_mass) <= 1e-12 * q.total_mass);
      if (prev > 0.0) CHECK(err <= 0.55 * prev);
      prev = err;
    }
  }
}

TEST_CASE("pure species and interfaces") {
  const Grid g(-2.0, 2.0, 64);
  const Vector rho = indicator(g, -1.0, 0.0, 0.5), eta = indicator(g, 0.0, 1.0, 0.5);
  const auto t = to_transformed(make_state(g, rho, eta));
  const auto q = grid_to_quantile(t, 50);
  for (int k = 0; k < 50; ++k) CHECK((q.parcel_r[k] == 0.0 || q.parcel_r[k] == 1.0));
  CHECK(q.positions[0] == doctest::Approx(-1.0));
  CHECK(q.positions[50] == doctest::Approx(1.0));
  CHECK(q.masses.sum() == doctest::Approx(1.0).epsilon(1e-15));

  // a smeared interface cell is split back into two pure pieces
  Vector rho2 = rho, eta2 = eta;
  rho2[32] = 0.2;
  eta2[32] = 0.3;
  rho2[31] = 0.5;
  const auto q2 = grid_to_quantile(to_transformed(make_state(g, rho2, eta2)), 40);
  for (int k = 0; k < 40; ++k) CHECK((q2.parcel_r[k] == 0.0 || q2.parcel_r[k] == 1.0));
  const auto s2 = quantile_to_state(q2, g);
  CHECK(std::abs(mass(s2.rho, g) - mass(rho2, g)) <= 1e-13);
  CHECK(std::abs(mass(s2.eta, g) - mass(eta2, g)) <= 1e-13);

  const auto reb = rebalance(q2, 60);
  CHECK(reb.n_parcels() == 60);
  CHECK(reb.positions[0] == q2.positions[0]);
  CHECK(reb.positions[60] == q2.positions[40]);
  for (int k = 0; k < 60; ++k) CHECK((reb.parcel_r[k] == 0.0 || reb.parcel_r[k] == 1.0));
  CHECK(std::abs(reb.parcel_r.dot(reb.masses) - q2.parcel_r.dot(q2.masses)) <= 1e-14);
}

TEST_CASE("mass conservation on random reps") {
  std::mt19937 gen(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const Grid g(-1.0, 3.0, 57);
  for (int trial = 0; trial < 100; ++trial) {
    const int M = 3 + trial % 40;
    QuantileRep q;
    std::vector<double> x(M + 1);
    for (auto& v : x) v = g.x_left + g.length() * u(gen);
    std::sort(x.begin(), x.end());
    if (trial % 10 == 0) x[M / 2 + 1] = x[M / 2];  // degenerate parcel
    q.positions = Eigen::Map<Vector>(x.data(), M + 1);
    q.masses = Vector::Constant(M, 0.37);
    q.parcel_r.resize(M);
    for (int k = 0; k < M; ++k) q.parcel_r[k] = u(gen);
    q.total_mass = q.masses.sum();
    const auto t = quantile_to_grid(q, g);
    CHECK(std::abs(mass(t.sigma, g) - q.total_mass) <= 1e-12 * q.total_mass);
    const auto s = quantile_to_state(q, g);
    CHECK(std::abs(mass(s.rho, g) - q.parcel_r.dot(q.masses)) <= 1e-12 * q.total_mass);
  }
}

TEST_CASE("Wasserstein distances") {
  const Grid g(0.0, 2.0, 200);
  const Vector f = indicator(g, 0.0, 1.0, 1.0), h = indicator(g, 0.0, 2.0, 0.5);
  CHECK(wasserstein_p(f, f, g, 2) == 0.0);
  // X_f(m) = m, X_h(m) = 2m
  CHECK(wasserstein_p(f, h, g, 2) == doctest::Approx(std::sqrt(1.0 / 3.0)).epsilon(1e-12));
  CHECK(wasserstein_p(f, h, g, 1) == doctest::Approx(0.5).epsilon(1e-12));

  const Vector a = indicator(g, 0.3, 0.8, 2.0), b = indicator(g, 0.5, 1.0, 2.0);
  CHECK(wasserstein_p(a, b, g, 2) == doctest::Approx(0.2 * std::sqrt(1.0)).epsilon(1e-10));
  CHECK(wasserstein_p(a, b, g, 1) == doctest::Approx(0.2).epsilon(1e-10));

  CHECK_THROWS_AS(wasserstein_p(f, 2.0 * f, g, 2), Error);
  CHECK_THROWS_AS(wasserstein_p(Vector::Zero(200), Vector::Zero(200), g, 2), Error);
}

TEST_CASE("bounded Lipschitz distance") {
  const Grid g(0.0, 1.0, 50);
  const Vector one = Vector::Ones(50);
  CHECK(bounded_lipschitz(one, one, g) == 0.0);
  CHECK(bounded_lipschitz(2.0 * one, one, g) == doctest::Approx(1.0).epsilon(1e-12));

  // exactness against brute force on a tiny grid, including a finer lattice
  const Grid tiny(0.0, 1.0, 4);
  std::mt19937 gen(11);
  std::uniform_real_distribution<double> u(0.0, 3.0);
  for (int trial = 0; trial < 6; ++trial) {
    Vector f(4), h(4);
    for (int i = 0; i < 4; ++i) {
      f[i] = u(gen);
      h[i] = u(gen);
    }
    const double dp = bounded_lipschitz(f, h, tiny);
    CHECK(dp == doctest::Approx(bl_brute(f, h, tiny, 1)).epsilon(1e-12));
    CHECK(dp >= bl_brute(f, h, tiny, 2) - 1e-12);
  }

  // translation by a small amount: W1 = a * mass and d_BL <= W1
  const Grid gg(-2.0, 2.0, 200);
  const Vector p = indicator(gg, -0.5, 0.5, 1.0), q = indicator(gg, -0.3, 0.7, 1.0);
  const double w1 = wasserstein_p(p, q, gg, 1);
  CHECK(w1 == doctest::Approx(0.2).epsilon(1e-10));
  const double bl = bounded_lipschitz(p, q, gg);
  CHECK(bl <= w1 + 1e-12);
  CHECK(bl >= 0.9 * w1);
}

TEST_CASE("optimal maps") {
  const Grid g(-2.0, 2.0, 400);
  Vector f(400);
  for (int i = 0; i < 400; ++i) f[i] = std::exp(-std::pow(g.center(i) / 0.4, 2));
  const auto id = optimal_map(f, f, g);
  CHECK(id.monotone());
  // away from the far tails, where the CDF is flat to round-off
  for (Eigen::Index k = 1; k + 1 < id.x.size(); ++k)
    if (f[(k - 1) / 2] > 1e-4) CHECK(std::abs(id.y[k] - id.x[k]) <= 1e-9);

  Vector shifted(400);
  for (int i = 0; i < 400; ++i) shifted[i] = std::exp(-std::pow((g.center(i) - 0.25) / 0.4, 2));
  shifted *= mass(f, g) / mass(shifted, g);
  const auto T = optimal_map(f, shifted, g);
  CHECK(T.monotone());
  for (double x : {-0.5, 0.0, 0.3}) CHECK(T(x) == doctest::Approx(x + 0.25).epsilon(2e-3));

  const auto back = push_forward(f, T, g);
  CHECK(l1_distance(back, shifted, g) <= 1e-3);
}
