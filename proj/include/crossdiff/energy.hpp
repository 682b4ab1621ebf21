#pragma once

#include <functional>
#include <string>
#include <vector>

#include "crossdiff/error.hpp"

namespace crossdiff {

inline constexpr double kDefaultSigmaFloor = 1e-12;

enum class EnergyFamily { Quadratic, PowerLaw, Custom };

/// User-supplied evaluators for a custom internal energy density. The
/// expression strings are optional and only used to echo the configuration.
struct CustomEnergy {
  std::function<double(double)> chi;
  std::function<double(double)> chi_prime;
  std::function<double(double)> chi_pp;
  std::string chi_expr, chi_prime_expr, chi_pp_expr;
};

/// Internal energy density chi together with the derived quantities used by
/// the diffusion step and the entropy estimates:
///
///   pressure P(s)  = s chi'(s) - chi(s)
///   beta'(s)       = s chi''(s)
///   kappa(x)       = int_1^x chi''(s)/s ds
///   K(sigma)       = int_0^sigma kappa(x) dx,  normalized so that K(0) = 0
///
/// chi'' is evaluated at max(s, sigma_floor). Immutable after construction.
class EnergySpec {
 public:
  static EnergySpec quadratic(double c, double sigma_floor = kDefaultSigmaFloor);
  static EnergySpec power_law(double m, double c, double sigma_floor = kDefaultSigmaFloor);
  static EnergySpec custom(CustomEnergy fns, double sigma_floor = kDefaultSigmaFloor);

  EnergyFamily family() const noexcept { return family_; }
  double c() const noexcept { return c_; }
  double m() const noexcept { return m_; }
  double sigma_floor() const noexcept { return sigma_floor_; }
  const CustomEnergy& custom_fns() const noexcept { return custom_; }
  std::string describe() const;

  double chi(double s) const;
  double chi_prime(double s) const;
  double chi_pp(double s) const;
  double pressure(double s) const { return s * chi_prime(s) - chi(s); }
  double beta_prime(double s) const { return s * chi_pp(s); }

  /// kappa(s) for s > 0. Closed form for built-in families, adaptive Simpson
  /// in log-coordinates otherwise. Throws NonIntegrableKappa on divergence.
  double kappa(double s) const;
  /// K(s) = s kappa(s) - chi'(s), which is int_0^s kappa once chi'(0+) = 0.
  double K(double s) const;

 private:
  EnergySpec() = default;

  EnergyFamily family_ = EnergyFamily::Quadratic;
  double c_ = 0.5;
  double m_ = 2.0;
  double sigma_floor_ = kDefaultSigmaFloor;
  CustomEnergy custom_;
};

struct EnergyValues {
  double chi;
  double chi_prime;
  double chi_pp;
  double beta_prime;
};

EnergyValues energy_eval(const EnergySpec& spec, double s);

struct KappaK {
  double kappa;
  double K;
};

KappaK energy_kappa_K(const EnergySpec& spec, double s);

struct EnergyValidation {
  bool convex = true;               // chi'' > 0 above the floor
  bool vanishing_slope = true;      // chi'(s) -> 0 as s -> 0
  bool integrable = true;           // kappa and K finite
  bool displacement_convex = true;  // K'' = chi''/s > 0
  std::vector<std::string> failures;

  bool ok() const { return convex && vanishing_slope && integrable && displacement_convex; }
};

EnergyValidation validate_energy(const EnergySpec& spec, double s_max);

/// Throws InvalidEnergy with the report's failures unless the spec passes.
void require_valid_energy(const EnergySpec& spec, double s_max);

}  // namespace crossdiff
