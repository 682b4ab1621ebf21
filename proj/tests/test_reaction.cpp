#include <cmath>
#include <random>

#include "crossdiff/reaction.hpp"
#include "doctest.h"

using namespace crossdiff;

namespace {

// RK4 on the untransformed system rho' = rho F1 + eta G1, eta' = eta F2 + rho G2.
std::pair<double, double> rk4_untransformed(const ReactionSpec& s, double rho, double eta, double dt, int n) {
  auto rhs = [&](double a, double b) {
    return std::pair{a * s.F1(a, b) + b * s.G1(a, b), b * s.F2(a, b) + a * s.G2(a, b)};
  };
  const double h = dt / n;
  for (int k = 0; k < n; ++k) {
    const auto k1 = rhs(rho, eta);
    const auto k2 = rhs(rho + 0.5 * h * k1.first, eta + 0.5 * h * k1.second);
    const auto k3 = rhs(rho + 0.5 * h * k2.first, eta + 0.5 * h * k2.second);
    const auto k4 = rhs(rho + h * k3.first, eta + h * k3.second);
    rho += h / 6 * (k1.first + 2 * k2.first + 2 * k3.first + k4.first);
    eta += h / 6 * (k1.second + 2 * k2.second + 2 * k3.second + k4.second);
  }
  return {rho, eta};
}

TransformedState uniform(double sigma, double r) {
  const Grid g(0.0, 1.0, 8);
  return {g, Vector::Constant(8, sigma), Vector::Constant(8, r), 0.0};
}

}  // namespace

TEST_CASE("eval_A examples") {
  const auto z = eval_A(ReactionSpec::zero(), 0.7, 0.3);
  CHECK(z.A1 == 0.0);
  CHECK(z.A2 == 0.0);
  CHECK(z.A3 == 0.0);
  CHECK(z.G1t == 0.0);
  CHECK(z.G2t == 0.0);
  const auto s = eval_A(ReactionSpec::lv_symmetric(), 0.5, 0.4);
  CHECK(s.A1 == doctest::Approx(0.5));
  CHECK(s.A2 == doctest::Approx(0.5));
  CHECK(s.A3 == 0.0);
  for (double r : {0.0, 0.3, 1.0}) CHECK(eval_A(ReactionSpec::lv_asymmetric(), 1.0, r).A3 == doctest::Approx(-0.5));
}

TEST_CASE("reaction step special cases") {
  const auto t = uniform(0.6, 0.4);
  const auto z = reaction_step(t, 0.1, ReactionSpec::zero(), 3);
  CHECK(z.sigma == t.sigma);
  CHECK(z.r == t.r);
  CHECK(z.time == doctest::Approx(0.1));

  const auto v = reaction_step(uniform(0.0, 0.3), 0.5, ReactionSpec::lv_asymmetric(), 4);
  CHECK(v.sigma.cwiseAbs().maxCoeff() == 0.0);

  // logistic growth: sigma(t) = s0 e^t / (1 + s0 (e^t - 1))
  const double dt = std::log(2.0);
  const auto l = reaction_step(uniform(0.5, 0.25), dt, ReactionSpec::lv_symmetric(), 8);
  CHECK(std::abs(l.sigma[0] - 2.0 / 3.0) <= 1e-6);
  CHECK(l.r[0] == 0.25);

  // pure cells stay pure without cross reactions
  for (double r : {0.0, 1.0}) {
    const auto p = reaction_step(uniform(0.3, r), 0.7, ReactionSpec::lv_asymmetric(), 5);
    CHECK(p.r[0] == r);
  }
  CHECK(default_substeps(0.01) == 1);
  CHECK(default_substeps(0.025) == 3);
  CHECK(default_substeps(1e-3) == 1);
}

TEST_CASE("transformed RK4 matches the untransformed system") {
  std::mt19937 gen(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto custom = ReactionSpec::linear({0.5, -0.3, -0.2}, {0.2, -0.1, -0.4}, {0.1, 0.0, 0.05}, {0.05, 0.02, 0.0},
                                           1.0, 0.3, 0.4, 0.1);
  for (const auto& spec : {ReactionSpec::lv_symmetric(), ReactionSpec::lv_asymmetric(), custom}) {
    for (int trial = 0; trial < 30; ++trial) {
      const double s = 1.5 * u(gen), r = u(gen);
      const auto p = reaction_point(spec, s, r, 0.1, 40);
      const auto [rho, eta] = rk4_untransformed(spec, r * s, (1 - r) * s, 0.1, 40);
      CHECK(std::abs(p.r * p.sigma - rho) <= 1e-8);
      CHECK(std::abs((1 - p.r) * p.sigma - eta) <= 1e-8);
    }
  }
}

TEST_CASE("stability bounds hold on random states") {
  std::mt19937 gen(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const Grid g(0.0, 1.0, 50);
  for (const auto& spec : {ReactionSpec::lv_symmetric(), ReactionSpec::lv_asymmetric()}) {
    for (int trial = 0; trial < 20; ++trial) {
      TransformedState t{g, Vector(50), Vector(50), 0.0};
      for (int i = 0; i < 50; ++i) {
        t.sigma[i] = 1.8 * u(gen);
        t.r[i] = u(gen);
      }
      const double dt = 0.05;
      ReactionStepInfo info;
      const auto o = reaction_step(t, dt, spec, 5, &info);
      CHECK(info.max_clamp <= info.clamp_budget);
      CHECK(linf(o.sigma) <= linf(t.sigma) * linf_growth_bound(spec, dt) + 1e-14);
      const double smax = linf(t.sigma) * linf_growth_bound(spec, dt);
      const double tv0 = total_variation(t.sigma) + total_variation(t.r);
      const double tv1 = total_variation(o.sigma) + total_variation(o.r);
      CHECK(tv1 <= tv0 * std::exp(tv_gronwall_rate(spec, smax) * dt));
    }
  }
}

TEST_CASE("reaction validation") {
  CHECK_NOTHROW(validate_reaction(ReactionSpec::lv_symmetric()));
  CHECK_NOTHROW(validate_reaction(ReactionSpec::lv_asymmetric()));
  CHECK_NOTHROW(validate_reaction(ReactionSpec::zero()));
  // G1(0, eta) < 0 violates positivity
  const auto bad = ReactionSpec::linear({}, {}, {-0.1, 0, 0}, {}, 0.0, 1.0, 0.0, 0.0);
  CHECK_THROWS_AS(validate_reaction(bad), Error);
  const auto loose = ReactionSpec::linear({2.0, 0, 0}, {}, {}, {}, 1.0, 0.0, 0.0, 0.0);
  CHECK_THROWS_AS(validate_reaction(loose), Error);
  CHECK(ReactionSpec::linear({}, {}, {}, {}, 0, 0, 0, 0).no_cross_reaction);
}
