#include "crossdiff/reaction.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace crossdiff {

namespace {

double zero_rate(double, double) { return 0.0; }

}  // namespace

const char* to_string(ReactionKind kind) {
  switch (kind) {
    case ReactionKind::Zero: return "zero";
    case ReactionKind::LotkaVolterraSymmetric: return "lv_symmetric";
    case ReactionKind::LotkaVolterraAsymmetric: return "lv_asymmetric";
    case ReactionKind::Custom: return "custom";
  }
  return "?";
}

ReactionSpec ReactionSpec::zero() {
  ReactionSpec s;
  s.kind = ReactionKind::Zero;
  s.F1 = s.F2 = s.G1 = s.G2 = zero_rate;
  return s;
}

ReactionSpec ReactionSpec::lv_symmetric() {
  ReactionSpec s = zero();
  s.kind = ReactionKind::LotkaVolterraSymmetric;
  s.F1 = s.F2 = [](double rho, double eta) { return 1.0 - rho - eta; };
  s.bound_F = 1.0;
  s.lip_F = 1.0;
  return s;
}

ReactionSpec ReactionSpec::lv_asymmetric() {
  ReactionSpec s = zero();
  s.kind = ReactionKind::LotkaVolterraAsymmetric;
  s.F1 = [](double rho, double eta) { return 1.0 - rho - eta; };
  s.F2 = [](double rho, double eta) { return 1.0 - 0.5 * (rho + eta); };
  s.bound_F = 1.0;
  s.lip_F = 1.0;
  return s;
}

ReactionSpec ReactionSpec::linear(Linear f1, Linear f2, Linear g1, Linear g2, double bound_F, double bound_G,
                                  double lip_F, double lip_G) {
  for (double v : {bound_F, bound_G, lip_F, lip_G})
    if (!(v >= 0.0) || !std::isfinite(v)) throw Error(Errc::InvalidReaction, "bounds must be finite and >= 0");
  ReactionSpec s;
  s.kind = ReactionKind::Custom;
  s.F1 = f1;
  s.F2 = f2;
  s.G1 = g1;
  s.G2 = g2;
  s.bound_F = bound_F;
  s.bound_G = bound_G;
  s.lip_F = lip_F;
  s.lip_G = lip_G;
  s.no_cross_reaction = g1.is_zero() && g2.is_zero();
  s.linear_coeffs[0] = f1;
  s.linear_coeffs[1] = f2;
  s.linear_coeffs[2] = g1;
  s.linear_coeffs[3] = g2;
  return s;
}

std::string ReactionSpec::describe() const {
  std::ostringstream os;
  os << to_string(kind) << "(bound_F=" << bound_F << ", bound_G=" << bound_G << ", lip_F=" << lip_F
     << ", lip_G=" << lip_G << ")";
  return os.str();
}

ReactionCoefficients eval_A(const ReactionSpec& spec, double sigma, double r) {
  const double rho = r * sigma, eta = (1.0 - r) * sigma;
  const double f1 = spec.F1(rho, eta), f2 = spec.F2(rho, eta);
  const double g1 = spec.G1(rho, eta), g2 = spec.G2(rho, eta);
  return {f1 + g2, g1 + f2, f1 - f2, g1, g2};
}

ReactionRhs reaction_rhs(const ReactionSpec& spec, double sigma, double r) {
  const auto a = eval_A(spec, sigma, r);
  const double q = 1.0 - r;
  return {sigma * (r * a.A1 + q * a.A2), r * q * a.A3 + q * q * a.G1t - r * r * a.G2t};
}

ReactionPoint reaction_point(const ReactionSpec& spec, double sigma, double r, double dt, int substeps) {
  const double h = dt / substeps;
  double s = sigma, q = r;
  for (int k = 0; k < substeps; ++k) {
    const auto k1 = reaction_rhs(spec, s, q);
    const auto k2 = reaction_rhs(spec, s + 0.5 * h * k1.dsigma, q + 0.5 * h * k1.dr);
    const auto k3 = reaction_rhs(spec, s + 0.5 * h * k2.dsigma, q + 0.5 * h * k2.dr);
    const auto k4 = reaction_rhs(spec, s + h * k3.dsigma, q + h * k3.dr);
    s += h / 6.0 * (k1.dsigma + 2.0 * k2.dsigma + 2.0 * k3.dsigma + k4.dsigma);
    q += h / 6.0 * (k1.dr + 2.0 * k2.dr + 2.0 * k3.dr + k4.dr);
  }
  if (!std::isfinite(s) || !std::isfinite(q))
    throw Error(Errc::NonFiniteState, "reaction step produced a non-finite value");
  ReactionPoint out{std::max(s, 0.0), std::clamp(q, 0.0, 1.0)};
  out.clamp_sigma = out.sigma - s;
  out.clamp_r = std::abs(out.r - q);
  return out;
}

int default_substeps(double dt, double substep_dt) {
  if (!(substep_dt > 0.0)) throw Error(Errc::InvalidArgument, "substep_dt must be positive");
  return std::max(1, static_cast<int>(std::ceil(dt / substep_dt - 1e-12)));
}

TransformedState reaction_step(const TransformedState& t, double dt, const ReactionSpec& spec, int substeps,
                               ReactionStepInfo* info) {
  if (!(dt > 0.0)) throw Error(Errc::InvalidArgument, "reaction step needs dt > 0");
  if (substeps < 1) throw Error(Errc::InvalidArgument, "substeps must be >= 1");
  TransformedState out = t;
  double clamp = 0.0;
  for (int i = 0; i < t.grid.n_cells; ++i) {
    const auto p = reaction_point(spec, t.sigma[i], t.r[i], dt, substeps);
    out.sigma[i] = p.sigma;
    out.r[i] = p.r;
    clamp = std::max({clamp, p.clamp_sigma, p.clamp_r});
  }
  out.time = t.time + dt;
  if (info) {
    info->max_clamp = clamp;
    info->clamp_budget = 10.0 * std::pow(dt / substeps, 5);
  }
  return out;
}

double linf_growth_bound(const ReactionSpec& spec, double dt) { return std::exp((spec.bound_F + spec.bound_G) * dt); }

double tv_gronwall_rate(const ReactionSpec& spec, double sigma_max) {
  const double B = spec.bound_F + spec.bound_G;
  const double L = spec.lip_F + spec.lip_G;
  const double s = sigma_max;
  const double dS_ds = B + s * L;
  const double dS_dr = s * (2.0 * B + 2.0 * s * L);
  const double dR_ds = 0.5 * spec.lip_F + 2.0 * spec.lip_G;
  const double dR_dr = 2.0 * spec.bound_F + s * spec.lip_F + 4.0 * spec.bound_G + 4.0 * s * spec.lip_G;
  return std::max(dS_ds + dR_ds, dS_dr + dR_dr);
}

void validate_reaction(const ReactionSpec& spec) {
  if (!spec.F1 || !spec.F2 || !spec.G1 || !spec.G2) throw Error(Errc::InvalidReaction, "missing rate function");
  constexpr int n = 41;
  const double smax = spec.sigma_bound;
  const double slack = 1e-12;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; i + j < n; ++j) {
      const double rho = smax * i / (n - 1), eta = smax * j / (n - 1);
      const double f1 = spec.F1(rho, eta), f2 = spec.F2(rho, eta);
      const double g1 = spec.G1(rho, eta), g2 = spec.G2(rho, eta);
      for (double v : {f1, f2, g1, g2})
        if (!std::isfinite(v)) throw Error(Errc::InvalidReaction, "rate is not finite");
      if (std::abs(f1) > spec.bound_F + slack || std::abs(f2) > spec.bound_F + slack)
        throw Error(Errc::InvalidReaction, "|F| exceeds bound_F at rho=" + std::to_string(rho) +
                                               ", eta=" + std::to_string(eta));
      if (std::abs(g1) > spec.bound_G + slack || std::abs(g2) > spec.bound_G + slack)
        throw Error(Errc::InvalidReaction, "|G| exceeds bound_G at rho=" + std::to_string(rho) +
                                               ", eta=" + std::to_string(eta));
      if (i == 0 && g1 < -slack) throw Error(Errc::InvalidReaction, "G1(0, eta) must be >= 0");
      if (j == 0 && g2 < -slack) throw Error(Errc::InvalidReaction, "G2(rho, 0) must be >= 0");
    }
  }
}

}  // namespace crossdiff
