#include "crossdiff/jko.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace crossdiff {

namespace {

Vector node_weights(const Vector& masses) {
  const Eigen::Index M = masses.size();
  Vector w = Vector::Zero(M + 1);
  w.head(M) += 0.5 * masses;
  w.tail(M) += 0.5 * masses;
  return w;
}

Vector widths_of(const Vector& X) {
  const Eigen::Index M = X.size() - 1;
  return X.tail(M) - X.head(M);
}

void require_increasing(const Vector& X) {
  for (Eigen::Index j = 0; j + 1 < X.size(); ++j)
    if (!(X[j + 1] > X[j]))
      throw Error(Errc::DegenerateParcel, "parcel " + std::to_string(j) + " has non-positive width");
}

// Solves the tridiagonal system (diag, off) x = rhs in place (Thomas).
void thomas(Vector diag, const Vector& off, Vector& rhs) {
  const Eigen::Index n = diag.size();
  for (Eigen::Index i = 1; i < n; ++i) {
    const double w = off[i - 1] / diag[i - 1];
    diag[i] -= w * off[i - 1];
    rhs[i] -= w * rhs[i - 1];
  }
  rhs[n - 1] /= diag[n - 1];
  for (Eigen::Index i = n - 2; i >= 0; --i) rhs[i] = (rhs[i] - off[i] * rhs[i + 1]) / diag[i];
}

}  // namespace

void validate(const JkoOptions& o) {
  if (!(o.max_iters > 0)) throw Error(Errc::InvalidArgument, "jko max_iters must be positive");
  if (!(o.armijo_c > 0.0 && o.armijo_c < 1.0)) throw Error(Errc::InvalidArgument, "jko armijo_c must lie in (0,1)");
  if (!(o.min_gap_factor > 0.0 && o.min_gap_factor < 1.0))
    throw Error(Errc::InvalidArgument, "jko min_gap_factor must lie in (0,1)");
  if (!std::isfinite(o.grad_tol)) throw Error(Errc::InvalidArgument, "jko grad_tol must be finite");
}

ObjectiveValue jko_objective(const Vector& X, const Vector& Y, double tau, const EnergySpec& spec,
                             const Vector& masses) {
  require_increasing(X);
  const Eigen::Index M = masses.size();
  const Vector w = node_weights(masses);
  ObjectiveValue out;
  out.gradient.resize(M + 1);
  double transport = 0.0;
  for (Eigen::Index i = 0; i <= M; ++i) {
    const double d = X[i] - Y[i];
    transport += w[i] * d * d;
    out.gradient[i] = w[i] * d / tau;
  }
  double energy = 0.0;
  for (Eigen::Index j = 0; j < M; ++j) {
    const double width = X[j + 1] - X[j];
    const double s = masses[j] / width;
    energy += width * spec.chi(s);
    const double h = -spec.pressure(s);
    out.gradient[j + 1] += h;
    out.gradient[j] -= h;
  }
  out.value = transport / (2.0 * tau) + energy;
  return out;
}

ObjectiveValue jko_objective(const Vector& X, const Vector& Y, double tau, const EnergySpec& spec, double dm) {
  return jko_objective(X, Y, tau, spec, Vector::Constant(X.size() - 1, dm));
}

double optimality_residual(const Vector& X, const Vector& Y, double tau, const EnergySpec& spec,
                           const Vector& masses) {
  require_increasing(X);
  const Eigen::Index M = masses.size();
  const Vector w = node_weights(masses);
  double res = 0.0;
  for (Eigen::Index i = 1; i < M; ++i) {
    const double pl = spec.pressure(masses[i - 1] / (X[i] - X[i - 1]));
    const double pr = spec.pressure(masses[i] / (X[i + 1] - X[i]));
    res = std::max(res, std::abs((X[i] - Y[i]) / tau + (pr - pl) / w[i]));
  }
  return res;
}

double optimality_residual(const Vector& X, const Vector& Y, double tau, const EnergySpec& spec, double dm) {
  return optimality_residual(X, Y, tau, spec, Vector::Constant(X.size() - 1, dm));
}

double parcel_energy(const Vector& X, const Vector& masses, const EnergySpec& spec) {
  double e = 0.0;
  for (Eigen::Index j = 0; j < masses.size(); ++j) {
    const double width = X[j + 1] - X[j];
    if (masses[j] > 0.0) e += width * spec.chi(masses[j] / width);
  }
  return e;
}

double parcel_entropy(const Vector& X, const Vector& masses, const EnergySpec& spec) {
  double e = 0.0;
  for (Eigen::Index j = 0; j < masses.size(); ++j) {
    const double width = X[j + 1] - X[j];
    if (masses[j] > 0.0) e += width * spec.K(masses[j] / width);
  }
  return e;
}

double parcel_dissipation(const Vector& X, const Vector& masses, const EnergySpec& spec) {
  double acc = 0.0;
  for (Eigen::Index i = 1; i < masses.size(); ++i) {
    const double wl = X[i] - X[i - 1], wr = X[i + 1] - X[i];
    const double d = spec.chi_prime(masses[i] / wr) - spec.chi_prime(masses[i - 1] / wl);
    acc += d * d / (0.5 * (wl + wr));
  }
  return acc;
}

double parcel_w2_sq(const Vector& X, const Vector& Y, const Vector& masses) {
  double acc = 0.0;
  for (Eigen::Index j = 0; j < masses.size(); ++j) {
    const double d0 = X[j] - Y[j], d1 = X[j + 1] - Y[j + 1];
    acc += masses[j] * (d0 * d0 + d0 * d1 + d1 * d1) / 3.0;
  }
  return acc;
}

JkoResult jko_step(const QuantileRep& q, double tau, const EnergySpec& spec, const Grid& grid,
                   const JkoOptions& opts) {
  if (!(tau > 0.0)) throw Error(Errc::InvalidArgument, "jko_step needs tau > 0");
  validate(opts);
  const Eigen::Index M = q.n_parcels();
  const Vector& Y = q.positions;
  const Vector& m = q.masses;
  JkoResult res{q, {}};
  JkoReport& rep = res.report;
  rep.grad_tol = opts.grad_tol > 0.0 ? opts.grad_tol : 1e-10 * q.dm();
  if (!(q.total_mass > kVacTol)) return res;  // nothing to transport
  require_increasing(Y);

  const double xl = grid.x_left, xr = grid.x_right;
  const Vector w = node_weights(m);
  Vector X = Y;
  auto f = jko_objective(X, Y, tau, spec, m);
  rep.energy_before = f.value;

  Vector diag(M + 1), off(M), dir(M + 1);
  std::vector<bool> active(M + 1, false);
  auto projected_norm = [&](const Vector& g) {
    double n = 0.0;
    for (Eigen::Index i = 0; i <= M; ++i) {
      active[i] = (i == 0 && X[0] <= xl && g[0] > 0.0) || (i == M && X[M] >= xr && g[M] < 0.0);
      if (!active[i]) n = std::max(n, std::abs(g[i]));
    }
    return n;
  };

  // projected gradient norm at a trial point, without touching the active set
  auto free_norm = [&](const Vector& g, const Vector& P) {
    double n = 0.0;
    for (Eigen::Index i = 0; i <= M; ++i) {
      const bool held = (i == 0 && P[0] <= xl && g[0] > 0.0) || (i == M && P[M] >= xr && g[M] < 0.0);
      if (!held) n = std::max(n, std::abs(g[i]));
    }
    return n;
  };

  double gnorm = projected_norm(f.gradient);
  double best_gnorm = gnorm;
  int it = 0;
  bool stalled = false;
  int flat_steps = 0;
  double best_value = f.value;
  while (gnorm > rep.grad_tol && it < opts.max_iters) {
    ++it;
    // tridiagonal Hessian, active rows replaced by identity
    diag = w / tau;
    off.setZero();
    for (Eigen::Index j = 0; j < M; ++j) {
      const double width = X[j + 1] - X[j];
      const double s = m[j] / width;
      const double a = s * s * spec.chi_pp(s) / width;
      diag[j] += a;
      diag[j + 1] += a;
      off[j] = -a;
    }
    for (Eigen::Index i = 0; i <= M; ++i) {
      dir[i] = active[i] ? 0.0 : -f.gradient[i];
      if (active[i]) {
        diag[i] = 1.0;
        if (i > 0) off[i - 1] = 0.0;
        if (i < M) off[i] = 0.0;
      }
    }
    thomas(diag, off, dir);

    // backtracking with the width floor and projection onto the box
    const Vector widths = widths_of(X);
    double alpha = 1.0;
    bool accepted = false;
    Vector Xn(M + 1);
    ObjectiveValue fn;
    const double slack = 10.0 * std::numeric_limits<double>::epsilon() * std::abs(f.value);
    for (int ls = 0; ls < 60; ++ls, alpha *= 0.5) {
      Xn = X + alpha * dir;
      Xn[0] = std::max(Xn[0], xl);
      Xn[M] = std::min(Xn[M], xr);
      bool wide = true;
      for (Eigen::Index j = 0; j < M && wide; ++j)
        wide = Xn[j + 1] - Xn[j] >= opts.min_gap_factor * widths[j];
      if (!wide) continue;
      fn = jko_objective(Xn, Y, tau, spec, m);
      const double decrease = f.gradient.dot(Xn - X);
      // below the roundoff of the objective only the gradient can tell progress
      if (-decrease < 100.0 * slack) {
        if (free_norm(fn.gradient, Xn) < gnorm) {
          accepted = true;
          break;
        }
        continue;
      }
      if (fn.value <= f.value + opts.armijo_c * decrease + slack) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      stalled = true;
      break;
    }
    const bool moved = (Xn - X).cwiseAbs().maxCoeff() > 0.0;
    X = Xn;
    f = std::move(fn);
    gnorm = projected_norm(f.gradient);
    if (f.value < best_value || gnorm < 0.5 * best_gnorm) {
      best_value = std::min(best_value, f.value);
      best_gnorm = std::min(best_gnorm, gnorm);
      flat_steps = 0;
    } else {
      ++flat_steps;
    }
    if (!moved || flat_steps >= 3) {
      stalled = true;
      break;
    }
  }

  res.rep.positions = X;
  rep.iterations = it;
  rep.final_grad_norm = gnorm;
  rep.energy_before = parcel_energy(Y, m, spec);
  rep.energy_after = parcel_energy(X, m, spec);
  rep.w2_sq_increment = parcel_w2_sq(X, Y, m);
  rep.kkt_residual = optimality_residual(X, Y, tau, spec, m);
  rep.entropy_drop = parcel_entropy(Y, m, spec) - parcel_entropy(X, m, spec);
  rep.dissipation_lhs = tau * parcel_dissipation(X, m, spec);

  if (gnorm > rep.grad_tol) {
    // Positions carry a relative error of one ulp, which moves each gradient
    // entry by about |X| * (curvature of the energy term). Newton stalls at
    // that level; accept it when the requested tolerance is below it.
    double curv = 0.0, hmax = 0.0;
    for (Eigen::Index j = 0; j < M; ++j) {
      const double width = X[j + 1] - X[j];
      const double s = m[j] / width;
      curv = std::max(curv, s * s * spec.chi_pp(s) / width);
      hmax = std::max(hmax, std::abs(spec.pressure(s)));
    }
    const double xmax = std::max(std::abs(xl), std::abs(xr));
    const double noise = 16.0 * std::numeric_limits<double>::epsilon() * (xmax * curv + hmax);
    rep.noise_floor = noise;
    if (!(stalled && gnorm <= noise)) {
      char buf[160];
      std::snprintf(buf, sizeof buf, "JKO Newton stopped after %d iterations with gradient %.3e > tolerance %.3e", it,
                    gnorm, rep.grad_tol);
      throw NoConvergence(buf, res.rep, rep);
    }
  }
  return res;
}

}  // namespace crossdiff
