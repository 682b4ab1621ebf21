#pragma once

#include <functional>
#include <string>

#include "crossdiff/fields.hpp"

namespace crossdiff {

enum class ReactionKind { Zero, LotkaVolterraSymmetric, LotkaVolterraAsymmetric, Custom };

using RateFn = std::function<double(double rho, double eta)>;

/// Reaction terms of
///   rho_t = ... + rho F1 + eta G1,   eta_t = ... + eta F2 + rho G2
/// plus the bound / Lipschitz metadata used by the stability checks.
struct ReactionSpec {
  ReactionKind kind = ReactionKind::Zero;
  RateFn F1, F2, G1, G2;
  double bound_F = 0.0, bound_G = 0.0;
  double lip_F = 0.0, lip_G = 0.0;
  /// Largest sigma for which the declared bounds were checked.
  double sigma_bound = 2.0;
  /// G1 == G2 == 0 identically: pure species stay pure.
  bool no_cross_reaction = true;

  static ReactionSpec zero();
  static ReactionSpec lv_symmetric();
  static ReactionSpec lv_asymmetric();

  /// Linear rates F1 = f1_const + f1_rho rho + f1_eta eta etc.
  struct Linear {
    double c = 0.0, rho = 0.0, eta = 0.0;
    double operator()(double r, double e) const { return c + rho * r + eta * e; }
    bool is_zero() const { return c == 0.0 && rho == 0.0 && eta == 0.0; }
  };
  static ReactionSpec linear(Linear f1, Linear f2, Linear g1, Linear g2, double bound_F, double bound_G,
                             double lip_F, double lip_G);
  /// Coefficients of a `linear` spec (F1, F2, G1, G2), kept for echoing.
  Linear linear_coeffs[4];

  std::string describe() const;
};

const char* to_string(ReactionKind kind);

struct ReactionCoefficients {
  double A1, A2, A3, G1t, G2t;
};

ReactionCoefficients eval_A(const ReactionSpec& spec, double sigma, double r);

/// Sigma' = Sigma(sigma, r), r' = R(sigma, r) of the transformed system.
struct ReactionRhs {
  double dsigma, dr;
};
ReactionRhs reaction_rhs(const ReactionSpec& spec, double sigma, double r);

struct ReactionPoint {
  double sigma, r;
  double clamp_sigma = 0.0;  // amount removed by clamping
  double clamp_r = 0.0;
};

/// RK4 with `substeps` equal substeps on one (sigma, r) pair, then clamping.
ReactionPoint reaction_point(const ReactionSpec& spec, double sigma, double r, double dt, int substeps);

int default_substeps(double dt, double substep_dt = 0.01);

struct ReactionStepInfo {
  double max_clamp = 0.0;
  double clamp_budget = 0.0;
};

TransformedState reaction_step(const TransformedState& t, double dt, const ReactionSpec& spec, int substeps,
                               ReactionStepInfo* info = nullptr);

/// Growth factor bound for the sup norm of sigma over one step.
double linf_growth_bound(const ReactionSpec& spec, double dt);
/// Gronwall rate for tv(sigma) + tv(r) given the current sup of sigma.
double tv_gronwall_rate(const ReactionSpec& spec, double sigma_max);

/// Samples the spec on [0, sigma_bound]^2 and checks the positivity hypothesis
/// G1(0, .) >= 0, G2(., 0) >= 0 and the declared sup bounds. Throws
/// InvalidReaction.
void validate_reaction(const ReactionSpec& spec);

}  // namespace crossdiff
