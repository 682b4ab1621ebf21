#include "crossdiff/transport.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

namespace crossdiff {

namespace {

// A stretch of uniform density carrying a single ratio value.
struct Piece {
  double xa, xb, mass, r;
};

bool is_pure(double r) { return r == 0.0 || r == 1.0; }

std::vector<Piece> pieces_from_grid(const TransformedState& t) {
  const Grid& g = t.grid;
  const int n = g.n_cells;
  const double dx = g.dx();
  auto occupied = [&](int i) { return i >= 0 && i < n && t.sigma[i] > kVacTol; };
  std::vector<Piece> out;
  for (int i = 0; i < n; ++i) {
    if (!occupied(i)) continue;
    const double xa = g.face(i), xb = (i + 1 == n) ? g.x_right : g.face(i + 1);
    const double m = t.sigma[i] * dx;
    const double r = t.r[i];
    // A mixed cell squeezed between two opposite pure cells is a smeared
    // interface: split it into two pure halves ordered like its neighbours.
    if (!is_pure(r) && occupied(i - 1) && occupied(i + 1) && is_pure(t.r[i - 1]) && is_pure(t.r[i + 1]) &&
        t.r[i - 1] != t.r[i + 1]) {
      const double left_r = t.r[i - 1];
      const double frac = left_r == 1.0 ? r : 1.0 - r;
      const double xm = xa + frac * (xb - xa);
      const double ml = frac * m;
      if (ml > 0.0 && m - ml > 0.0 && xm > xa && xm < xb) {
        out.push_back({xa, xm, ml, left_r});
        out.push_back({xm, xb, m - ml, t.r[i + 1]});
        continue;
      }
    }
    out.push_back({xa, xb, m, r});
  }
  return out;
}

std::vector<Piece> pieces_from_rep(const QuantileRep& q) {
  std::vector<Piece> out;
  for (int k = 0; k < q.n_parcels(); ++k)
    if (q.masses[k] > 0.0) out.push_back({q.positions[k], q.positions[k + 1], q.masses[k], q.parcel_r[k]});
  return out;
}

QuantileRep build_from_pieces(const std::vector<Piece>& pieces, int M) {
  if (M < 2) throw Error(Errc::InvalidArgument, "need at least 2 parcels");
  if (pieces.empty()) throw Error(Errc::ZeroMass, "no mass to represent");
  const std::size_t np = pieces.size();
  std::vector<double> cum(np + 1, 0.0);
  for (std::size_t k = 0; k < np; ++k) cum[k + 1] = cum[k] + pieces[k].mass;
  const double total = cum[np];
  if (!(total > kVacTol)) throw Error(Errc::ZeroMass, "total mass below vacuum tolerance");

  std::vector<double> level(M + 1);
  for (int k = 0; k <= M; ++k) level[k] = total * k / M;
  level[M] = total;

  // Snap one level onto every boundary between opposite pure species so that
  // no parcel straddles a segregation front.
  std::vector<bool> snapped(M + 1, false);
  snapped[0] = snapped[M] = true;
  for (std::size_t k = 0; k + 1 < np; ++k) {
    const double ra = pieces[k].r, rb = pieces[k + 1].r;
    if (!(is_pure(ra) && is_pure(rb) && ra != rb)) continue;
    const double c = cum[k + 1];
    const int j0 = static_cast<int>(std::lround(c / total * M));
    for (int j : {j0, j0 - 1, j0 + 1}) {
      if (j <= 0 || j >= M || snapped[j]) continue;
      if (!(level[j - 1] < c && c < level[j + 1])) continue;
      level[j] = c;
      snapped[j] = true;
      break;
    }
  }

  QuantileRep q;
  q.positions.resize(M + 1);
  q.masses.resize(M);
  q.parcel_r.resize(M);
  q.total_mass = total;

  // Leftmost preimage of each level under the piecewise-linear CDF.
  std::size_t p = 0;
  for (int j = 0; j <= M; ++j) {
    const double L = level[j];
    while (p + 1 < np && cum[p + 1] < L) ++p;
    const Piece& pc = pieces[p];
    const double frac = std::clamp((L - cum[p]) / pc.mass, 0.0, 1.0);
    q.positions[j] = j == M ? pieces.back().xb : pc.xa + frac * (pc.xb - pc.xa);
  }
  q.positions[0] = pieces.front().xa;
  for (int j = 1; j <= M; ++j) q.positions[j] = std::max(q.positions[j], q.positions[j - 1]);

  // Masses and ratios parcel by parcel from the overlap with the pieces.
  p = 0;
  for (int j = 0; j < M; ++j) {
    const double a = level[j], b = level[j + 1];
    q.masses[j] = b - a;
    double wr = 0.0, w = 0.0;
    while (p < np && cum[p + 1] <= a) ++p;
    for (std::size_t k = p; k < np && cum[k] < b; ++k) {
      const double ov = std::min(b, cum[k + 1]) - std::max(a, cum[k]);
      if (ov <= 0.0) continue;
      w += ov;
      wr += ov * pieces[k].r;
    }
    q.parcel_r[j] = w > 0.0 ? std::clamp(wr / w, 0.0, 1.0) : 0.5;
  }
  return q;
}

}  // namespace

Vector QuantileRep::widths() const {
  const int M = n_parcels();
  return positions.tail(M) - positions.head(M);
}

Vector QuantileRep::densities() const { return masses.cwiseQuotient(widths()); }

void check_quantile(const QuantileRep& q, const Grid& grid, bool strict) {
  const int M = q.n_parcels();
  if (M < 2 || q.positions.size() != M + 1 || q.parcel_r.size() != M)
    throw Error(Errc::InvalidArgument, "inconsistent quantile representation sizes");
  const double slack = 1e-12 * grid.length();
  if (q.positions[0] < grid.x_left - slack || q.positions[M] > grid.x_right + slack)
    throw Error(Errc::InvalidArgument, "parcel positions leave the domain");
  for (int k = 0; k < M; ++k) {
    const double w = q.positions[k + 1] - q.positions[k];
    if (w < 0.0 || (strict && w <= 0.0) || !std::isfinite(w))
      throw Error(Errc::DegenerateParcel, "parcel " + std::to_string(k) + " has width " + std::to_string(w));
    if (!(q.parcel_r[k] >= 0.0 && q.parcel_r[k] <= 1.0))
      throw Error(Errc::InvalidArgument, "parcel ratio outside [0,1]");
    if (!(q.masses[k] >= 0.0)) throw Error(Errc::NegativeDensity, "negative parcel mass");
  }
}

QuantileRep grid_to_quantile(const TransformedState& t, int M) {
  if (M < 2) throw Error(Errc::InvalidArgument, "need at least 2 parcels");
  auto q = build_from_pieces(pieces_from_grid(t), M);
  check_quantile(q, t.grid);
  return q;
}

QuantileRep rebalance(const QuantileRep& q, int M) { return build_from_pieces(pieces_from_rep(q), M); }

namespace {

// Accumulates (sigma mass, rho mass) per cell.
void deposit(const QuantileRep& q, const Grid& grid, Vector& sm, Vector& rm) {
  const int n = grid.n_cells;
  const double dx = grid.dx();
  const double floor_w = 1e-13 * grid.length();
  sm = Vector::Zero(n);
  rm = Vector::Zero(n);
  auto cell_of = [&](double x) { return std::clamp(static_cast<int>(std::floor((x - grid.x_left) / dx)), 0, n - 1); };
  for (int k = 0; k < q.n_parcels(); ++k) {
    const double m = q.masses[k];
    if (m <= 0.0) continue;
    const double a = q.positions[k], b = q.positions[k + 1];
    const double mr = q.parcel_r[k] * m;
    if (b - a < floor_w) {
      const int c = cell_of(0.5 * (a + b));
      sm[c] += m;
      rm[c] += mr;
      continue;
    }
    const int ca = cell_of(a), cb = cell_of(b);
    if (ca == cb) {
      sm[ca] += m;
      rm[ca] += mr;
      continue;
    }
    double given = 0.0, given_r = 0.0;
    for (int c = ca; c < cb; ++c) {
      const double lo = std::max(a, grid.face(c)), hi = std::min(b, grid.face(c + 1));
      const double frac = std::max(hi - lo, 0.0) / (b - a);
      sm[c] += frac * m;
      rm[c] += frac * mr;
      given += frac * m;
      given_r += frac * mr;
    }
    // the last cell takes the remainder so parcel mass is deposited exactly
    sm[cb] += m - given;
    rm[cb] += std::max(mr - given_r, 0.0);
  }
}

}  // namespace

TransformedState quantile_to_grid(const QuantileRep& q, const Grid& grid, double r_fill) {
  Vector sm, rm;
  deposit(q, grid, sm, rm);
  const int n = grid.n_cells;
  TransformedState t{grid, sm / grid.dx(), Vector(n), 0.0};
  for (int i = 0; i < n; ++i)
    t.r[i] = t.sigma[i] > kVacTol ? std::clamp(rm[i] / sm[i], 0.0, 1.0) : r_fill;
  return t;
}

GridState quantile_to_state(const QuantileRep& q, const Grid& grid, double time) {
  Vector sm, rm;
  deposit(q, grid, sm, rm);
  const int n = grid.n_cells;
  GridState s{grid, Vector(n), Vector(n), time};
  for (int i = 0; i < n; ++i) {
    const double r = std::min(rm[i], sm[i]);
    s.rho[i] = r / grid.dx();
    s.eta[i] = (sm[i] - r) / grid.dx();
  }
  return s;
}

double QuantileFn::operator()(double level) const {
  if (u.empty()) return 0.0;
  if (level <= u.front()) return x.front();
  if (level >= u.back()) return x.back();
  // leftmost preimage: first segment whose right end reaches the level
  const auto it = std::lower_bound(u.begin(), u.end(), level);
  const std::size_t k = static_cast<std::size_t>(it - u.begin());
  const double ua = u[k - 1], ub = u[k];
  if (ub <= ua) return x[k];
  return x[k - 1] + (level - ua) / (ub - ua) * (x[k] - x[k - 1]);
}

QuantileFn quantile_fn(const Vector& f, const Grid& grid) {
  const int n = grid.n_cells;
  QuantileFn q;
  const double dx = grid.dx();
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    if (f[i] < 0.0) throw Error(Errc::NegativeDensity, "negative density in distance computation");
    total += f[i] * dx;
  }
  if (!(total > 0.0)) throw Error(Errc::ZeroMass, "distance between empty measures");
  q.mass = total;
  double cum = 0.0;
  q.u.push_back(0.0);
  q.x.push_back(grid.x_left);
  for (int i = 0; i < n; ++i) {
    if (f[i] <= 0.0) {
      // vacuum cell: move the current node to the right end of the gap only
      // when nothing has been placed yet, so the first point is supp start
      if (q.u.size() == 1) q.x[0] = grid.face(i + 1);
      continue;
    }
    if (q.x.back() < grid.face(i)) {
      // skip a vacuum gap with a flat CDF stretch
      q.u.push_back(cum / total);
      q.x.push_back(grid.face(i));
    }
    cum += f[i] * dx;
    q.u.push_back(std::min(cum / total, 1.0));
    q.x.push_back(i + 1 == n ? grid.x_right : grid.face(i + 1));
  }
  q.u.back() = 1.0;
  return q;
}

QuantileFn quantile_fn(const QuantileRep& q) {
  QuantileFn out;
  out.mass = q.total_mass;
  if (!(q.total_mass > 0.0)) throw Error(Errc::ZeroMass, "distance between empty measures");
  double cum = 0.0;
  out.u.push_back(0.0);
  out.x.push_back(q.positions[0]);
  for (int k = 0; k < q.n_parcels(); ++k) {
    cum += q.masses[k];
    out.u.push_back(std::min(cum / q.total_mass, 1.0));
    out.x.push_back(q.positions[k + 1]);
  }
  out.u.back() = 1.0;
  return out;
}

namespace {

double segment_integral(double d0, double d1, int p) {
  if (p == 2) return (d0 * d0 + d0 * d1 + d1 * d1) / 3.0;
  if (d0 * d1 >= 0.0) return 0.5 * (std::abs(d0) + std::abs(d1));
  return (d0 * d0 + d1 * d1) / (2.0 * std::abs(d0 - d1));
}

}  // namespace

double wasserstein_pp(const QuantileFn& a, const QuantileFn& b, int p) {
  if (p != 1 && p != 2) throw Error(Errc::InvalidArgument, "only p = 1, 2 are supported");
  // merged breakpoints; on each sub-interval both quantile functions are affine
  std::vector<double> br;
  br.reserve(a.u.size() + b.u.size());
  std::merge(a.u.begin(), a.u.end(), b.u.begin(), b.u.end(), std::back_inserter(br));
  double acc = 0.0;
  std::size_t ia = 1, ib = 1;
  for (std::size_t k = 0; k + 1 < br.size(); ++k) {
    const double lo = br[k], hi = br[k + 1];
    if (!(hi > lo)) continue;
    while (ia + 1 < a.u.size() && a.u[ia] <= lo) ++ia;
    while (ib + 1 < b.u.size() && b.u[ib] <= lo) ++ib;
    auto eval = [](const QuantileFn& q, std::size_t s, double v) {
      const double ua = q.u[s - 1], ub = q.u[s];
      if (ub <= ua) return q.x[s];
      return q.x[s - 1] + (v - ua) / (ub - ua) * (q.x[s] - q.x[s - 1]);
    };
    const double d0 = eval(a, ia, lo) - eval(b, ib, lo);
    const double d1 = eval(a, ia, hi) - eval(b, ib, hi);
    acc += (hi - lo) * segment_integral(d0, d1, p);
  }
  return acc * a.mass;
}

namespace {

void require_equal_mass(double ma, double mb) {
  if (!(ma > 0.0) || !(mb > 0.0)) throw Error(Errc::ZeroMass, "Wasserstein distance needs positive mass");
  if (std::abs(ma - mb) > 1e-9 * ma)
    throw Error(Errc::MassMismatch, "masses differ: " + std::to_string(ma) + " vs " + std::to_string(mb));
}

double root(double v, int p) { return p == 2 ? std::sqrt(std::max(v, 0.0)) : std::max(v, 0.0); }

}  // namespace

double wasserstein_p(const Vector& f, const Vector& g, const Grid& grid, int p) {
  const auto qa = quantile_fn(f, grid);
  const auto qb = quantile_fn(g, grid);
  require_equal_mass(qa.mass, qb.mass);
  return root(wasserstein_pp(qa, qb, p), p);
}

double wasserstein_p(const QuantileRep& a, const QuantileRep& b, int p) {
  require_equal_mass(a.total_mass, b.total_mass);
  return root(wasserstein_pp(quantile_fn(a), quantile_fn(b), p), p);
}

double bounded_lipschitz(const Vector& f, const Vector& g, const Grid& grid) {
  const int n = grid.n_cells;
  const double dx = grid.dx();
  // objective coefficients of the face values of a piecewise-linear test fn
  std::vector<double> b(n + 1, 0.0);
  for (int i = 0; i < n; ++i) {
    const double d = 0.5 * dx * (f[i] - g[i]);
    b[i] += d;
    b[i + 1] += d;
  }
  // Vertices of {|phi| <= 1, |phi_k+1 - phi_k| <= dx} sit on the lattice
  // {-1 + j dx} u {1 - j dx}; exact DP over it.
  std::vector<double> lat;
  const int jmax = static_cast<int>(std::floor(2.0 / dx + 1e-9));
  lat.reserve(2 * jmax + 2);
  for (int j = 0; j <= jmax; ++j) {
    lat.push_back(-1.0 + j * dx);
    lat.push_back(1.0 - j * dx);
  }
  std::sort(lat.begin(), lat.end());
  lat.erase(std::unique(lat.begin(), lat.end(), [](double x, double y) { return std::abs(x - y) < 1e-13; }),
            lat.end());
  const std::size_t L = lat.size();
  const double reach = dx * (1.0 + 1e-9);
  std::vector<double> val(L), next(L);
  for (std::size_t v = 0; v < L; ++v) val[v] = b[0] * lat[v];
  for (int k = 1; k <= n; ++k) {
    // sliding-window maximum of val over lattice points within reach
    std::deque<std::size_t> win;
    std::size_t hi = 0, lo = 0;
    for (std::size_t v = 0; v < L; ++v) {
      while (hi < L && lat[hi] <= lat[v] + reach) {
        while (!win.empty() && val[win.back()] <= val[hi]) win.pop_back();
        win.push_back(hi++);
      }
      while (lat[lo] < lat[v] - reach) ++lo;
      while (win.front() < lo) win.pop_front();
      next[v] = val[win.front()] + b[k] * lat[v];
    }
    val.swap(next);
  }
  return std::max(0.0, *std::max_element(val.begin(), val.end()));
}

double bounded_lipschitz(const GridState& a, const GridState& b) {
  if (!(a.grid == b.grid)) throw Error(Errc::InvalidArgument, "states live on different grids");
  return bounded_lipschitz(a.rho, b.rho, a.grid) + bounded_lipschitz(a.eta, b.eta, a.grid);
}

double MonotoneMap::operator()(double at) const {
  const Eigen::Index n = x.size();
  if (at <= x[0]) return y[0];
  if (at >= x[n - 1]) return y[n - 1];
  const auto it = std::upper_bound(x.data(), x.data() + n, at);
  const Eigen::Index k = it - x.data();
  const double xa = x[k - 1], xb = x[k];
  if (xb <= xa) return y[k];
  return y[k - 1] + (at - xa) / (xb - xa) * (y[k] - y[k - 1]);
}

bool MonotoneMap::monotone() const {
  for (Eigen::Index k = 0; k + 1 < y.size(); ++k)
    if (y[k + 1] < y[k] || x[k + 1] < x[k]) return false;
  return true;
}

MonotoneMap optimal_map(const Vector& from, const Vector& to, const Grid& grid) {
  const auto qt = quantile_fn(to, grid);
  const int n = grid.n_cells;
  const double dx = grid.dx();
  double total = 0.0;
  for (int i = 0; i < n; ++i) total += from[i] * dx;
  require_equal_mass(total, qt.mass);
  MonotoneMap map;
  map.x.resize(2 * n + 1);
  map.y.resize(2 * n + 1);
  double cum = 0.0;
  for (int i = 0; i < n; ++i) {
    const double c = from[i] * dx;
    map.x[2 * i] = grid.face(i);
    map.y[2 * i] = qt(cum / total);
    map.x[2 * i + 1] = grid.center(i);
    map.y[2 * i + 1] = qt((cum + 0.5 * c) / total);
    cum += c;
  }
  map.x[2 * n] = grid.x_right;
  map.y[2 * n] = qt(1.0);
  for (Eigen::Index k = 1; k < map.y.size(); ++k) map.y[k] = std::max(map.y[k], map.y[k - 1]);
  return map;
}

Vector push_forward(const Vector& from, const MonotoneMap& map, const Grid& grid) {
  // Every cell is a uniform piece; its image under the piecewise-linear map is
  // deposited piece by piece between consecutive sample points.
  const int n = grid.n_cells;
  const double dx = grid.dx();
  QuantileRep q;
  const int M = 2 * n;
  q.positions.resize(M + 1);
  q.masses.resize(M);
  q.parcel_r = Vector::Ones(M);
  for (int k = 0; k <= M; ++k) q.positions[k] = map(grid.x_left + 0.5 * k * dx);
  for (int i = 0; i < n; ++i) q.masses[2 * i] = q.masses[2 * i + 1] = 0.5 * from[i] * dx;
  q.total_mass = q.masses.sum();
  return quantile_to_grid(q, grid).sigma;
}

double parcel_tv_r(const QuantileRep& q) { return total_variation(q.parcel_r); }

double parcel_tv_sigma(const QuantileRep& q) { return total_variation(q.densities()); }

double parcel_tv_sigma(const QuantileRep& q, const Grid& grid) {
  if (q.n_parcels() == 0) return 0.0;
  const Vector d = q.densities();
  const double tol = 1e-12 * grid.length();
  double tv = total_variation(d);
  if (q.positions[0] > grid.x_left + tol) tv += std::abs(d[0]);
  if (q.positions[q.n_parcels()] < grid.x_right - tol) tv += std::abs(d[d.size() - 1]);
  return tv;
}

}  // namespace crossdiff
