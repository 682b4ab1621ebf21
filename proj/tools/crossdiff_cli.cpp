#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "crossdiff/config.hpp"
#include "crossdiff/fvref.hpp"
#include "crossdiff/io.hpp"
#include "crossdiff/scheme.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace crossdiff;

namespace {

enum class Status { Ok = 0, InvariantViolation = 2, NoConvergence = 3, ConfigError = 4 };

const char* status_name(Status s) {
  switch (s) {
    case Status::Ok: return "Ok";
    case Status::InvariantViolation: return "InvariantViolation";
    case Status::NoConvergence: return "NoConvergence";
    case Status::ConfigError: return "ConfigError";
  }
  return "?";
}

Status worst(Status a, Status b) { return static_cast<int>(a) >= static_cast<int>(b) ? a : b; }

struct Outcome {
  Status status = Status::Ok;
  std::string message;
  std::shared_ptr<const Trajectory> traj;  // partial on InvariantViolation, null on NoConvergence
  double wall_time_s = 0.0;
};

Outcome solve(const SchemeConfig& config, const std::string& solver) {
  Outcome out;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    auto t = solver == "fv" ? run_fv(config) : run_splitting(config);
    out.traj = std::make_shared<const Trajectory>(std::move(t));
  } catch (const InvariantViolation& e) {
    out.status = Status::InvariantViolation;
    out.message = e.what();
    out.traj = e.partial();
  } catch (const NoConvergence& e) {
    out.status = Status::NoConvergence;
    out.message = e.what();
  }
  out.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

double num_or_nan(double v) { return std::isfinite(v) ? v : NAN; }

json report_json(const Trajectory& traj) {
  const EstimateReport rep = check_cumulative_estimates(traj);
  json j;
  j["ok"] = rep.ok();
  json checks = json::array();
  for (const auto& c : rep.checks) checks.push_back({{"name", c.name}, {"lhs", c.lhs}, {"rhs", c.rhs}, {"ok", c.ok}});
  j["checks"] = checks;
  j["entropy_rate"] = rep.entropy_rate;
  j["energy_rate"] = rep.energy_rate;
  j["eps_disc"] = rep.eps_disc;
  j["hoelder_constant"] = rep.hoelder_constant;
  j["total_square"] = rep.total_square;
  if (traj.states.size() >= 2) j["weak_form_residual"] = num_or_nan(weak_form_residual(traj));
  return j;
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw Error(Errc::Io, "cannot write " + p.string());
  os << text;
  if (!os) throw Error(Errc::Io, "write failed for " + p.string());
}

void write_diagnostics(const fs::path& p, const Trajectory& traj) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw Error(Errc::Io, "cannot write " + p.string());
  os << "t,mass_rho,mass_eta,linf_sigma,tv_sigma,tv_r,overlap,entropy_K,dissipation,"
        "w2_sq_step,kkt_residual,newton_iters,entropy_drop,dissipation_lhs,overlap_bound\n";
  for (std::size_t n = 0; n < traj.diagnostics.size(); ++n) {
    const auto& d = traj.diagnostics[n];
    const StepReport* s = n > 0 && n - 1 < traj.steps.size() ? &traj.steps[n - 1] : nullptr;
    const auto& st = traj.states[n];
    const double bound = s ? s->overlap_bound : st.grid.dx() * linf(st.rho) * linf(st.eta);
    for (double v : {d.time, d.mass_rho, d.mass_eta, d.linf_sigma, d.tv_sigma, d.tv_r, d.overlap, d.entropy_K,
                     d.dissipation})
      os << format_double(v) << ',';
    os << format_double(s ? s->jko.w2_sq_increment : 0.0) << ',' << format_double(s ? s->jko.kkt_residual : 0.0)
       << ',' << (s ? s->jko.iterations : 0) << ',' << format_double(s ? s->jko.entropy_drop : 0.0) << ','
       << format_double(s ? s->jko.dissipation_lhs : 0.0) << ',' << format_double(bound) << '\n';
  }
}

// Snapshots every `snapshot_every` steps plus the last state.
std::vector<std::size_t> snapshot_indices(const Trajectory& traj) {
  std::vector<std::size_t> idx;
  const std::size_t every = static_cast<std::size_t>(traj.config.snapshot_every);
  for (std::size_t n = 0; n < traj.states.size(); ++n)
    if (n % every == 0 || n + 1 == traj.states.size()) idx.push_back(n);
  return idx;
}

json write_run(const fs::path& dir, const SchemeConfig& config, const std::string& solver, const Outcome& out,
               const std::string& config_path, std::uint64_t seed) {
  fs::create_directories(dir);
  write_text(dir / "config.toml", config_to_toml(config));
  if (out.traj) {
    for (std::size_t n : snapshot_indices(*out.traj))
      write_snapshot((dir / ("snap_" + std::to_string(n) + ".csv")).string(), out.traj->states[n],
                     config.initial.r_fill);
    write_diagnostics(dir / "diagnostics.csv", *out.traj);
  }
  json j;
  j["config"] = json::parse(config_to_json(config));
  j["config_path"] = config_path;
  j["seed"] = seed;
  j["solver"] = solver;
  j["status"] = status_name(out.status);
  if (!out.message.empty()) j["message"] = out.message;
  j["estimate_report"] = out.traj ? report_json(*out.traj) : json(nullptr);
  j["steps_completed"] = out.traj ? out.traj->steps.size() : 0;
  j["wall_time_s"] = out.wall_time_s;
  return j;
}

// Output directories appear atomically: everything is written to a staging
// directory that is renamed into place once run.json (written last) exists.
class Staging {
 public:
  explicit Staging(fs::path target) : target_(std::move(target)) {
    if (fs::exists(target_) && !fs::is_empty(target_) && !fs::exists(target_ / "run.json"))
      throw Error(Errc::Io, "output directory " + target_.string() + " exists and is not a previous run");
    path_ = target_;
    path_ += ".partial";
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  const fs::path& path() const { return path_; }
  void commit(const json& manifest) {
    write_text(path_ / "run.json", manifest.dump(2) + "\n");
    fs::remove_all(target_);
    fs::rename(path_, target_);
  }

 private:
  fs::path target_, path_;
};

struct Common {
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool quiet = false;
};

void say(const Common& c, const std::string& msg) {
  if (!c.quiet) std::cout << msg << std::endl;
}

int cmd_run(const Common& c, const std::string& solver) {
  const SchemeConfig config = parse_config(c.config_path);
  say(c, "running " + solver + ": " + std::to_string(config.n_steps()) + " steps");
  const Outcome out = solve(config, solver);
  Staging st(c.out_dir.empty() ? fs::path("run_" + solver) : fs::path(c.out_dir));
  json j = write_run(st.path(), config, solver, out, c.config_path, c.seed);
  st.commit(j);
  if (out.status != Status::Ok) std::cerr << out.message << "\n";
  say(c, std::string("status ") + status_name(out.status) + ", estimates " +
             (j["estimate_report"].is_null() ? "n/a" : (j["estimate_report"]["ok"].get<bool>() ? "ok" : "FAILED")));
  return static_cast<int>(out.status);
}

struct Distances {
  double l1_sigma, l1_rho, l1_eta, w1_sigma, w2_sigma, d_bl;
};

Distances distances(const GridState& a, const GridState& b) {
  Distances d{};
  const Grid& g = a.grid;
  const Vector sa = a.rho + a.eta, sb = b.rho + b.eta;
  d.l1_sigma = l1_distance(sa, sb, g);
  d.l1_rho = l1_distance(a.rho, b.rho, g);
  d.l1_eta = l1_distance(a.eta, b.eta, g);
  d.w1_sigma = d.w2_sigma = NAN;
  if (mass(sa, g) > kVacTol && mass(sb, g) > kVacTol) {
    try {
      d.w1_sigma = wasserstein_p(sa, sb, g, 1);
      d.w2_sigma = wasserstein_p(sa, sb, g, 2);
    } catch (const Error& e) {
      if (e.code() != Errc::MassMismatch) throw;
    }
  } else if (!(mass(sa, g) > kVacTol) && !(mass(sb, g) > kVacTol)) {
    d.w1_sigma = d.w2_sigma = 0.0;
  }
  d.d_bl = bounded_lipschitz(a, b);
  return d;
}

int cmd_compare(const Common& c) {
  const SchemeConfig config = parse_config(c.config_path);
  say(c, "comparing jko and fv: " + std::to_string(config.n_steps()) + " steps");
  auto fj = std::async(std::launch::async, [&] { return solve(config, "jko"); });
  auto ff = std::async(std::launch::async, [&] { return solve(config, "fv"); });
  const Outcome oj = fj.get(), of = ff.get();
  Staging st(c.out_dir.empty() ? fs::path("compare") : fs::path(c.out_dir));
  json j;
  j["config"] = json::parse(config_to_json(config));
  j["config_path"] = c.config_path;
  j["seed"] = c.seed;
  j["solver"] = "jko+fv";
  j["runs"]["jko"] = write_run(st.path() / "jko", config, "jko", oj, c.config_path, c.seed);
  j["runs"]["fv"] = write_run(st.path() / "fv", config, "fv", of, c.config_path, c.seed);
  const Status status = worst(oj.status, of.status);
  j["status"] = status_name(status);
  if (oj.traj && of.traj) {
    std::ofstream os(st.path() / "compare.csv", std::ios::binary);
    os << "t,l1_sigma,l1_rho,l1_eta,w1_sigma,w2_sigma,d_bl\n";
    const std::size_t n = std::min(oj.traj->states.size(), of.traj->states.size());
    double last = NAN;
    for (std::size_t k : snapshot_indices(*oj.traj)) {
      if (k >= n) break;
      const Distances d = distances(oj.traj->states[k], of.traj->states[k]);
      os << format_double(oj.traj->states[k].time) << ',' << format_double(d.l1_sigma) << ','
         << format_double(d.l1_rho) << ',' << format_double(d.l1_eta) << ',' << format_double(d.w1_sigma) << ','
         << format_double(d.w2_sigma) << ',' << format_double(d.d_bl) << '\n';
      last = d.l1_sigma;
    }
    j["final_l1_sigma"] = num_or_nan(last);
    say(c, "final L1(sigma) difference " + format_double(last));
  }
  j["wall_time_s"] = oj.wall_time_s + of.wall_time_s;
  st.commit(j);
  if (!oj.message.empty()) std::cerr << "jko: " << oj.message << "\n";
  if (!of.message.empty()) std::cerr << "fv: " << of.message << "\n";
  return static_cast<int>(status);
}

// The closed-form source solution applies to zero reaction, chi(s) = s^2 / 2
// and Barenblatt initial data.
bool has_oracle(const SchemeConfig& c) {
  return c.initial.kind == InitialKind::Barenblatt && c.reaction.kind == ReactionKind::Zero &&
         c.energy.family() == EnergyFamily::Quadratic && c.energy.c() == 0.5;
}

// Cell averages of a fine field on a grid coarser by an integer factor.
Vector restrict_to(const Vector& fine, int factor) {
  Vector out(fine.size() / factor);
  for (Eigen::Index i = 0; i < out.size(); ++i) out[i] = fine.segment(i * factor, factor).mean();
  return out;
}

int cmd_convergence(const Common& c, int levels, const std::string& solver) {
  if (levels < 2) throw Error(Errc::InvalidArgument, "--levels must be at least 2");
  const SchemeConfig base = parse_config(c.config_path);
  std::vector<SchemeConfig> cfgs;
  for (int k = 0; k < levels; ++k) {
    SchemeConfig s = base;
    s.tau = base.tau / (1 << k);
    s.grid = Grid(base.grid.x_left, base.grid.x_right, base.grid.n_cells << k);
    s.n_parcels = base.n_parcels << k;
    s.snapshot_every = base.snapshot_every << k;
    cfgs.push_back(s);
  }
  say(c, "convergence study with " + std::to_string(levels) + " levels (" + solver + ")");
  std::vector<std::future<Outcome>> fut;
  for (const auto& s : cfgs) fut.push_back(std::async(std::launch::async, [&s, &solver] { return solve(s, solver); }));
  std::vector<Outcome> outs;
  for (auto& f : fut) outs.push_back(f.get());

  Staging st(c.out_dir.empty() ? fs::path("convergence") : fs::path(c.out_dir));
  json j;
  j["config"] = json::parse(config_to_json(base));
  j["config_path"] = c.config_path;
  j["seed"] = c.seed;
  j["solver"] = solver;
  Status status = Status::Ok;
  for (int k = 0; k < levels; ++k) {
    status = worst(status, outs[k].status);
    j["runs"].push_back(write_run(st.path() / ("level_" + std::to_string(k)), cfgs[k], solver, outs[k],
                                  c.config_path, c.seed));
  }
  j["status"] = status_name(status);
  const bool oracle = has_oracle(base);
  j["reference"] = oracle ? "closed-form source solution" : "finest level";
  if (status == Status::Ok) {
    std::ofstream os(st.path() / "convergence.csv", std::ios::binary);
    os << "level,tau,n_cells,n_parcels,l1_sigma_error,order\n";
    const Trajectory& finest = *outs.back().traj;
    const int last = oracle ? levels : levels - 1;
    double prev = NAN;
    json table = json::array();
    for (int k = 0; k < last; ++k) {
      const Trajectory& t = *outs[k].traj;
      const GridState& s = t.states.back();
      const Vector sig = s.rho + s.eta;
      double err;
      if (oracle) {
        const Barenblatt b(base.initial.mass);
        err = l1_distance(sig, b.cell_averages(s.grid, base.initial.t0 + base.t_final), s.grid);
      } else {
        const GridState& f = finest.states.back();
        err = l1_distance(sig, restrict_to(f.rho + f.eta, 1 << (levels - 1 - k)), s.grid);
      }
      const double order = k > 0 ? std::log2(prev / err) : NAN;
      os << k << ',' << format_double(cfgs[k].tau) << ',' << cfgs[k].grid.n_cells << ',' << cfgs[k].n_parcels << ','
         << format_double(err) << ',' << format_double(order) << '\n';
      table.push_back({{"level", k}, {"tau", cfgs[k].tau}, {"error", err}, {"order", num_or_nan(order)}});
      say(c, "level " + std::to_string(k) + "  tau " + format_double(cfgs[k].tau) + "  error " + format_double(err) +
                 (k > 0 ? "  order " + format_double(order) : ""));
      prev = err;
    }
    j["errors"] = table;
    // least-squares slope of log2(error) against the level
    if (table.size() >= 2) {
      double sx = 0, sy = 0, sxx = 0, sxy = 0;
      const double m = static_cast<double>(table.size());
      for (const auto& row : table) {
        const double x = row["level"].get<double>(), y = std::log2(row["error"].get<double>());
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
      }
      const double fitted = -(m * sxy - sx * sy) / (m * sxx - sx * sx);
      j["fitted_order"] = num_or_nan(fitted);
      say(c, "fitted order " + format_double(fitted));
    }
  }
  double wall = 0.0;
  for (const auto& o : outs) wall += o.wall_time_s;
  j["wall_time_s"] = wall;
  st.commit(j);
  for (const auto& o : outs)
    if (!o.message.empty()) std::cerr << o.message << "\n";
  return static_cast<int>(status);
}

GridState load_state(const std::string& path) {
  const Snapshot s = read_snapshot(path);
  return make_state(grid_from_centers(s.x), s.rho, s.eta, s.t);
}

int cmd_distances(const Common& c, const std::string& a, const std::string& b) {
  const GridState sa = load_state(a), sb = load_state(b);
  if (!(sa.grid == sb.grid)) throw Error(Errc::InvalidGrid, "snapshots live on different grids");
  const Distances d = distances(sa, sb);
  json j;
  j["w1"] = num_or_nan(d.w1_sigma);
  j["w2"] = num_or_nan(d.w2_sigma);
  j["d_bl"] = d.d_bl;
  j["l1_sigma"] = d.l1_sigma;
  std::cout << j.dump(2) << std::endl;
  (void)c;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Splitting scheme for two-species cross-diffusion with reaction (JKO diffusion step)"};
  app.footer(config_reference() +
             "\nExit codes: 0 ok, 2 invariant violation, 3 Newton non-convergence, 4 config error, 1 other errors.");
  app.require_subcommand(1);
  Common common;
  app.add_option("--seed", common.seed, "Seed recorded in run.json")->default_val(0);
  app.add_flag("--quiet", common.quiet, "No progress output");

  std::string solver = "jko";
  int levels = 3;
  auto* run = app.add_subcommand("run", "Run one solver and write snapshots, diagnostics.csv and run.json");
  run->add_option("--config", common.config_path, "Config file")->required()->check(CLI::ExistingFile);
  run->add_option("--out", common.out_dir, "Output directory (default run_<solver>)");
  run->add_option("--solver", solver, "jko or fv")->check(CLI::IsMember({"jko", "fv"}))->default_val("jko");

  auto* cmp = app.add_subcommand("compare", "Run both solvers and tabulate their distances per snapshot");
  cmp->add_option("--config", common.config_path, "Config file")->required()->check(CLI::ExistingFile);
  cmp->add_option("--out", common.out_dir, "Output directory (default compare)");

  auto* conv = app.add_subcommand("convergence", "Rerun at tau/2^k with matched grid refinement");
  conv->add_option("--config", common.config_path, "Config file")->required()->check(CLI::ExistingFile);
  conv->add_option("--out", common.out_dir, "Output directory (default convergence)");
  conv->add_option("--levels", levels, "Number of refinement levels")->default_val(3)->check(CLI::Range(2, 8));
  conv->add_option("--solver", solver, "jko or fv")->check(CLI::IsMember({"jko", "fv"}))->default_val("jko");

  std::string snap_a, snap_b;
  auto* dist = app.add_subcommand("distances", "W1, W2 and d_BL between two snapshot CSVs");
  dist->add_option("a", snap_a, "First snapshot")->required()->check(CLI::ExistingFile);
  dist->add_option("b", snap_b, "Second snapshot")->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(common, solver);
    if (*cmp) return cmd_compare(common);
    if (*conv) return cmd_convergence(common, levels, solver);
    if (*dist) return cmd_distances(common, snap_a, snap_b);
  } catch (const ConfigError& e) {
    std::cerr << e.what() << "\n";
    return static_cast<int>(Status::ConfigError);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
