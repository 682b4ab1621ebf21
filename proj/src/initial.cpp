#include "crossdiff/initial.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "crossdiff/io.hpp"

namespace crossdiff {

namespace {

Vector indicator_average(const Grid& g, double a, double b, double h) {
  Vector f = Vector::Zero(g.n_cells);
  if (!(b > a) || h == 0.0) return f;
  for (int i = 0; i < g.n_cells; ++i) {
    const double lo = std::max(a, g.face(i)), hi = std::min(b, g.face(i + 1));
    if (hi > lo) f[i] = h * (hi - lo) / g.dx();
  }
  return f;
}

// 5-point Gauss-Legendre average of f over [a, b], split at the given kinks.
template <class F>
double cell_average(const F& f, double a, double b, std::initializer_list<double> kinks) {
  static const double xs[5] = {0.0, -0.5384693101056831, 0.5384693101056831, -0.9061798459386640,
                               0.9061798459386640};
  static const double ws[5] = {0.5688888888888889, 0.4786286704993665, 0.4786286704993665, 0.2369268850561891,
                               0.2369268850561891};
  std::vector<double> pts{a};
  for (double k : kinks)
    if (k > a && k < b) pts.push_back(k);
  pts.push_back(b);
  std::sort(pts.begin(), pts.end());
  double acc = 0.0;
  for (std::size_t s = 0; s + 1 < pts.size(); ++s) {
    const double c = 0.5 * (pts[s] + pts[s + 1]), h = 0.5 * (pts[s + 1] - pts[s]);
    for (int k = 0; k < 5; ++k) acc += ws[k] * h * f(c + h * xs[k]);
  }
  return acc / (b - a);
}

void require_fraction(double f) {
  if (!(f >= 0.0 && f <= 1.0)) throw Error(Errc::InvalidArgument, "rho_fraction must lie in [0,1]");
}

}  // namespace

const char* to_string(InitialKind kind) {
  switch (kind) {
    case InitialKind::Indicators: return "indicators";
    case InitialKind::Cosine: return "cosine";
    case InitialKind::Barenblatt: return "barenblatt";
    case InitialKind::Gaussian: return "gaussian";
    case InitialKind::Csv: return "csv";
  }
  return "?";
}

Barenblatt::Barenblatt(double mass) {
  if (!(mass > 0.0)) throw Error(Errc::InvalidArgument, "Barenblatt mass must be positive");
  C = std::cbrt(9.0 * mass * mass / 96.0);
}

double Barenblatt::operator()(double t, double x) const {
  const double v = C - x * x / (6.0 * std::cbrt(t * t));
  return v > 0.0 ? v / std::cbrt(t) : 0.0;
}

double Barenblatt::half_width(double t) const { return std::sqrt(6.0 * C) * std::cbrt(t); }

double Barenblatt::cdf(double t, double x) const {
  const double a = half_width(t);
  const double t13 = std::cbrt(t);
  auto prim = [&](double y) { return (C * y - y * y * y / (18.0 * t13 * t13)) / t13; };
  return prim(std::clamp(x, -a, a)) - prim(-a);
}

Vector Barenblatt::cell_averages(const Grid& g, double t) const {
  Vector f(g.n_cells);
  for (int i = 0; i < g.n_cells; ++i) f[i] = std::max(0.0, (cdf(t, g.face(i + 1)) - cdf(t, g.face(i))) / g.dx());
  return f;
}

GridState make_initial(const InitialCondition& ic, const Grid& g) {
  const int n = g.n_cells;
  switch (ic.kind) {
    case InitialKind::Indicators: {
      if (ic.rho_h < 0.0 || ic.eta_h < 0.0) throw Error(Errc::NegativeDensity, "indicator heights must be >= 0");
      return make_state(g, indicator_average(g, ic.rho_a, ic.rho_b, ic.rho_h),
                        indicator_average(g, ic.eta_a, ic.eta_b, ic.eta_h));
    }
    case InitialKind::Cosine: {
      const double a = std::numbers::pi / 3.0, k = std::numbers::pi / 6.0;
      auto rho = [a](double x) { return std::abs(x) <= a ? 1.0 + std::cos(3.0 * x) : 0.0; };
      auto eta = [&](double x) { return std::max(1.0 - rho(x), 0.0); };
      Vector r(n), e(n);
      for (int i = 0; i < n; ++i) {
        r[i] = cell_average(rho, g.face(i), g.face(i + 1), {-a, a});
        e[i] = cell_average(eta, g.face(i), g.face(i + 1), {-a, -k, k, a});
      }
      return make_state(g, r, e);
    }
    case InitialKind::Barenblatt: {
      require_fraction(ic.rho_fraction);
      if (!(ic.t0 > 0.0)) throw Error(Errc::InvalidArgument, "Barenblatt t0 must be positive");
      const Vector s = Barenblatt(ic.mass).cell_averages(g, ic.t0);
      return make_state(g, ic.rho_fraction * s, (1.0 - ic.rho_fraction) * s);
    }
    case InitialKind::Gaussian: {
      require_fraction(ic.rho_fraction);
      if (!(ic.mass > 0.0)) throw Error(Errc::InvalidArgument, "Gaussian mass must be positive");
      const double w = ic.width > 0.0 ? ic.width : 0.1 * g.length();
      Vector s(n);
      for (int i = 0; i < n; ++i)
        s[i] = 0.5 * (std::erf((g.face(i + 1) - ic.center) / w) - std::erf((g.face(i) - ic.center) / w));
      s *= ic.mass / (g.dx() * s.sum());
      return make_state(g, ic.rho_fraction * s, (1.0 - ic.rho_fraction) * s);
    }
    case InitialKind::Csv: {
      const auto snap = read_snapshot(ic.path);
      const Grid from = grid_from_centers(snap.x);
      if (from.n_cells != g.n_cells || std::abs(from.x_left - g.x_left) > 1e-9 * g.length() ||
          std::abs(from.x_right - g.x_right) > 1e-9 * g.length())
        throw Error(Errc::InvalidGrid, ic.path + ": snapshot grid does not match the configured grid");
      return make_state(g, snap.rho, snap.eta);
    }
  }
  throw Error(Errc::InvalidArgument, "unknown initial condition");
}

}  // namespace crossdiff
