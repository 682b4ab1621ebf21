#include "crossdiff/energy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace crossdiff {

namespace {

struct SimpsonState {
  int evaluations = 0;
  bool failed = false;
};

template <class F>
double simpson_recurse(const F& f, double a, double b, double fa, double fm, double fb, double whole,
                       double tol, int depth, SimpsonState& st) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  st.evaluations += 2;
  if (!std::isfinite(flm) || !std::isfinite(frm)) {
    st.failed = true;
    return 0.0;
  }
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  if (depth <= 0 || st.evaluations > 2'000'000) {
    st.failed = true;
    return left + right;
  }
  return simpson_recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, st) +
         simpson_recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, st);
}

template <class F>
double adaptive_simpson(const F& f, double a, double b, double tol, bool& ok) {
  SimpsonState st;
  ok = true;
  if (a == b) return 0.0;
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  if (!std::isfinite(fa) || !std::isfinite(fb) || !std::isfinite(fm)) {
    ok = false;
    return 0.0;
  }
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  const double r = simpson_recurse(f, a, b, fa, fm, fb, whole, tol, 50, st);
  ok = !st.failed && std::isfinite(r);
  return r;
}

void require_positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v))
    throw Error(Errc::InvalidEnergy, std::string(name) + " must be positive and finite");
}

}  // namespace

EnergySpec EnergySpec::quadratic(double c, double sigma_floor) {
  require_positive(c, "c");
  require_positive(sigma_floor, "sigma_floor");
  EnergySpec e;
  e.family_ = EnergyFamily::Quadratic;
  e.c_ = c;
  e.m_ = 2.0;
  e.sigma_floor_ = sigma_floor;
  return e;
}

EnergySpec EnergySpec::power_law(double m, double c, double sigma_floor) {
  require_positive(c, "c");
  require_positive(sigma_floor, "sigma_floor");
  if (!(m > 1.0) || !std::isfinite(m)) throw Error(Errc::InvalidEnergy, "power-law exponent m must exceed 1");
  EnergySpec e;
  e.family_ = EnergyFamily::PowerLaw;
  e.c_ = c;
  e.m_ = m;
  e.sigma_floor_ = sigma_floor;
  return e;
}

EnergySpec EnergySpec::custom(CustomEnergy fns, double sigma_floor) {
  require_positive(sigma_floor, "sigma_floor");
  if (!fns.chi || !fns.chi_prime || !fns.chi_pp)
    throw Error(Errc::InvalidEnergy, "custom energy needs chi, chi_prime and chi_pp");
  EnergySpec e;
  e.family_ = EnergyFamily::Custom;
  e.custom_ = std::move(fns);
  e.sigma_floor_ = sigma_floor;
  return e;
}

std::string EnergySpec::describe() const {
  std::ostringstream os;
  os.precision(17);
  switch (family_) {
    case EnergyFamily::Quadratic: os << "quadratic(c=" << c_ << ")"; break;
    case EnergyFamily::PowerLaw: os << "powerlaw(m=" << m_ << ", c=" << c_ << ")"; break;
    case EnergyFamily::Custom: os << "custom(chi=" << custom_.chi_expr << ")"; break;
  }
  return os.str();
}

double EnergySpec::chi(double s) const {
  switch (family_) {
    case EnergyFamily::Quadratic: return c_ * s * s;
    case EnergyFamily::PowerLaw: return s > 0.0 ? c_ * std::pow(s, m_) : 0.0;
    case EnergyFamily::Custom: return custom_.chi(s);
  }
  return 0.0;
}

double EnergySpec::chi_prime(double s) const {
  switch (family_) {
    case EnergyFamily::Quadratic: return 2.0 * c_ * s;
    case EnergyFamily::PowerLaw: return s > 0.0 ? c_ * m_ * std::pow(s, m_ - 1.0) : 0.0;
    case EnergyFamily::Custom: return custom_.chi_prime(s);
  }
  return 0.0;
}

double EnergySpec::chi_pp(double s) const {
  const double sf = s > sigma_floor_ ? s : sigma_floor_;
  switch (family_) {
    case EnergyFamily::Quadratic: return 2.0 * c_;
    case EnergyFamily::PowerLaw: return c_ * m_ * (m_ - 1.0) * std::pow(sf, m_ - 2.0);
    case EnergyFamily::Custom: return custom_.chi_pp(sf);
  }
  return 0.0;
}

double EnergySpec::kappa(double s) const {
  if (!(s > 0.0)) throw Error(Errc::InvalidArgument, "kappa needs s > 0");
  switch (family_) {
    case EnergyFamily::Quadratic: return 2.0 * c_ * std::log(s);
    case EnergyFamily::PowerLaw: {
      const double ls = std::log(s);
      const double a = m_ - 2.0;
      // (s^a - 1)/a, stable as a -> 0
      const double ratio = std::abs(a) < 1e-12 ? ls : std::expm1(a * ls) / a;
      return c_ * m_ * (m_ - 1.0) * ratio;
    }
    case EnergyFamily::Custom: {
      // kappa(s) = int_0^{ln s} chi''(e^u) du
      const auto& fpp = custom_.chi_pp;
      auto integrand = [&fpp](double u) { return fpp(std::exp(u)); };
      bool ok = true;
      const double v = adaptive_simpson(integrand, 0.0, std::log(s), 1e-10, ok);
      if (!ok) throw Error(Errc::NonIntegrableKappa, "kappa quadrature diverged at s=" + std::to_string(s));
      return v;
    }
  }
  return 0.0;
}

double EnergySpec::K(double s) const {
  if (s <= 0.0) return 0.0;
  return s * kappa(s) - chi_prime(s);
}

EnergyValues energy_eval(const EnergySpec& spec, double s) {
  if (s < 0.0 || std::isnan(s)) throw Error(Errc::NegativeDensity, "density " + std::to_string(s));
  return {spec.chi(s), spec.chi_prime(s), spec.chi_pp(s), spec.beta_prime(s)};
}

KappaK energy_kappa_K(const EnergySpec& spec, double s) {
  if (s < 0.0 || std::isnan(s)) throw Error(Errc::NegativeDensity, "density " + std::to_string(s));
  if (s == 0.0) return {-std::numeric_limits<double>::infinity(), 0.0};
  const double kap = spec.kappa(s);
  const double K = s * kap - spec.chi_prime(s);
  if (!std::isfinite(kap) || !std::isfinite(K))
    throw Error(Errc::NonIntegrableKappa, "kappa or K not finite at s=" + std::to_string(s));
  return {kap, K};
}

EnergyValidation validate_energy(const EnergySpec& spec, double s_max) {
  EnergyValidation rep;
  if (!(s_max > 0.0)) throw Error(Errc::InvalidArgument, "validate_energy needs s_max > 0");
  const double lo = spec.sigma_floor();
  const double hi = std::max(s_max, 2.0 * lo);
  constexpr int kSamples = 200;
  auto note = [&rep](bool& flag, std::string msg) {
    if (flag) rep.failures.push_back(std::move(msg));
    flag = false;
  };

  for (int i = 0; i < kSamples; ++i) {
    const double s = lo * std::pow(hi / lo, double(i) / (kSamples - 1));
    const double pp = spec.chi_pp(s);
    if (!(pp > 0.0) || !std::isfinite(pp)) note(rep.convex, "chi'' not positive at s=" + std::to_string(s));
    if (!(pp / s > 0.0) || !std::isfinite(pp / s))
      note(rep.displacement_convex, "K'' = chi''/s not positive at s=" + std::to_string(s));
  }

  // chi'(s) must decay towards zero: compare the two probe points.
  const double a = std::abs(spec.chi_prime(1e-6));
  const double b = std::abs(spec.chi_prime(1e-8));
  if (!std::isfinite(a) || !std::isfinite(b) || !(b <= 1e-6 || b <= 0.99 * a))
    note(rep.vanishing_slope, "chi'(s) does not vanish as s -> 0 (|chi'(1e-6)|=" + std::to_string(a) +
                                  ", |chi'(1e-8)|=" + std::to_string(b) + ")");

  try {
    for (int i = 0; i < 40; ++i) {
      const double s = 1e-8 * std::pow(hi / 1e-8, double(i) / 39.0);
      const auto kk = energy_kappa_K(spec, s);
      (void)kk;
    }
    // K finite requires s kappa(s) -> 0 at the origin.
    const double ka = std::abs(1e-6 * spec.kappa(1e-6));
    const double kb = std::abs(1e-8 * spec.kappa(1e-8));
    if (!(kb <= 1e-6 || kb <= 0.99 * ka))
      note(rep.integrable, "s*kappa(s) does not vanish as s -> 0; K is not integrable");
  } catch (const Error& e) {
    note(rep.integrable, e.what());
  }
  return rep;
}

void require_valid_energy(const EnergySpec& spec, double s_max) {
  const auto rep = validate_energy(spec, s_max);
  if (rep.ok()) return;
  std::string msg = spec.describe() + " rejected:";
  for (const auto& f : rep.failures) msg += " " + f + ";";
  throw Error(Errc::InvalidEnergy, msg);
}

}  // namespace crossdiff
