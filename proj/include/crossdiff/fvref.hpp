#pragma once

#include "crossdiff/scheme.hpp"

namespace crossdiff {

/// Explicit step bound min(dt_max, cfl dx^2 / (2 max beta'(sigma) + 1e-30)).
double cfl_dt(const Vector& sigma, const EnergySpec& spec, const Grid& grid, const FvOptions& opts);

/// One explicit upwind step of the shared-velocity system with zero boundary
/// flux. Throws CflViolation when dt exceeds the bound at cfl = 1.
GridState fv_diffusion_step(const GridState& state, double dt, const EnergySpec& spec);

/// Same splitting as run_splitting with the diffusion solved by sub-cycled
/// fv_diffusion_step; the report holds grid-level quantities.
Trajectory run_fv(const SchemeConfig& config, const FvOptions& opts);
inline Trajectory run_fv(const SchemeConfig& config) { return run_fv(config, config.fv); }

}  // namespace crossdiff
