#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "crossdiff/fields.hpp"

namespace crossdiff {

struct Snapshot {
  double t = 0.0;
  Vector x, rho, eta;
};

/// Columns t,x,rho,eta,sigma,r with 17 significant digits.
void write_snapshot(std::ostream& os, const GridState& s, double r_fill = kDefaultRFill);
void write_snapshot(const std::string& path, const GridState& s, double r_fill = kDefaultRFill);
Snapshot read_snapshot(const std::string& path);

/// Rebuilds a grid from the cell centers of a snapshot (uniform spacing).
Grid grid_from_centers(const Vector& x);

std::string format_double(double v);

}  // namespace crossdiff
