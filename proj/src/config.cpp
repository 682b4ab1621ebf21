#include "crossdiff/config.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <toml.hpp>

#include "crossdiff/io.hpp"

namespace crossdiff {

namespace {

int line_of(const toml::node& n) { return static_cast<int>(n.source().begin.line); }

// Reads one table, remembering which keys were consumed so that leftovers
// can be reported as unknown.
class Section {
 public:
  Section(const toml::table* t, std::string name, int line) : t_(t), name_(std::move(name)), line_(line) {}

  bool present() const { return t_ != nullptr; }
  std::string path(const std::string& key) const { return name_ + "." + key; }
  int line() const { return line_; }
  int line(const std::string& key) const {
    if (t_)
      if (const toml::node* n = t_->get(key)) return line_of(*n);
    return line_;
  }

  bool has(const std::string& key) const { return t_ && t_->contains(key); }

  double real(const std::string& key, double def) {
    const toml::node* n = take(key);
    if (!n) return def;
    if (auto v = n->value_exact<double>()) return *v;
    if (auto v = n->value_exact<int64_t>()) return static_cast<double>(*v);
    throw ConfigError(path(key), line_of(*n), "expected a number");
  }
  int integer(const std::string& key, int def) {
    const toml::node* n = take(key);
    if (!n) return def;
    if (auto v = n->value_exact<int64_t>()) {
      if (*v < -2147483647 || *v > 2147483647) throw ConfigError(path(key), line_of(*n), "integer out of range");
      return static_cast<int>(*v);
    }
    throw ConfigError(path(key), line_of(*n), "expected an integer");
  }
  std::string text(const std::string& key, const std::string& def) {
    const toml::node* n = take(key);
    if (!n) return def;
    if (auto v = n->value_exact<std::string>()) return *v;
    throw ConfigError(path(key), line_of(*n), "expected a string");
  }
  double required_real(const std::string& key) {
    if (!has(key)) throw ConfigError(path(key), line_, "required key missing");
    return real(key, 0.0);
  }

  void finish() const {
    if (!t_) return;
    for (const auto& [k, v] : *t_)
      if (!used_.count(std::string(k.str())))
        throw ConfigError(path(std::string(k.str())), line_of(v), "unknown key");
  }

 private:
  const toml::node* take(const std::string& key) {
    if (!t_) return nullptr;
    const toml::node* n = t_->get(key);
    if (n) used_.insert(key);
    return n;
  }

  const toml::table* t_;
  std::string name_;
  int line_;
  std::set<std::string> used_;
};

const std::set<std::string> kSections = {"domain", "grid", "time",    "energy", "reaction",
                                         "initial", "jko", "fv", "output"};

void require(bool ok, const Section& s, const std::string& key, const std::string& msg) {
  if (!ok) throw ConfigError(s.path(key), s.line(key), msg);
}

SchemeConfig build(const toml::table& root) {
  for (const auto& [k, v] : root) {
    const std::string name(k.str());
    if (!kSections.count(name)) throw ConfigError(name, line_of(v), "unknown section");
    if (!v.is_table()) throw ConfigError(name, line_of(v), "expected a table");
  }
  auto section = [&](const std::string& name) {
    const toml::node* n = root.get(name);
    return Section(n ? n->as_table() : nullptr, name, n ? line_of(*n) : 0);
  };

  SchemeConfig c;

  Section dom = section("domain");
  if (!dom.present()) throw ConfigError("domain", 0, "required section missing");
  const double left = dom.required_real("left");
  const double right = dom.required_real("right");
  require(std::isfinite(left) && std::isfinite(right) && left < right, dom, "right", "need left < right");
  dom.finish();

  Section grid = section("grid");
  const int n_cells = grid.integer("n_cells", 256);
  require(n_cells >= 4, grid, "n_cells", "need at least 4 cells");
  c.n_parcels = grid.integer("n_parcels", 256);
  require(c.n_parcels >= 2, grid, "n_parcels", "need at least 2 parcels");
  grid.finish();
  c.grid = Grid(left, right, n_cells);

  Section time = section("time");
  if (!time.present()) throw ConfigError("time", 0, "required section missing");
  c.tau = time.required_real("tau");
  require(c.tau > 0.0 && c.tau < 1.0, time, "tau", "the time step must satisfy 0 < tau < 1");
  c.t_final = time.required_real("t_final");
  require(c.t_final >= 0.0 && std::isfinite(c.t_final), time, "t_final", "t_final must be finite and >= 0");
  const double steps = c.t_final / c.tau;
  require(std::abs(steps - std::round(steps)) <= 1e-9 * std::max(1.0, steps), time, "t_final",
          "t_final must be an integer multiple of tau");
  time.finish();

  Section en = section("energy");
  const std::string family = en.text("family", "quadratic");
  const double ec = en.real("c", 0.5);
  const double em = en.real("m", 2.0);
  const double floor = en.real("sigma_floor", kDefaultSigmaFloor);
  require(floor > 0.0, en, "sigma_floor", "sigma_floor must be positive");
  require(ec > 0.0, en, "c", "c must be positive");
  if (family == "quadratic") {
    require(!en.has("m"), en, "m", "m only applies to family = \"powerlaw\"");
    c.energy = EnergySpec::quadratic(ec, floor);
  } else if (family == "powerlaw") {
    require(em > 1.0, en, "m", "need m > 1");
    c.energy = EnergySpec::power_law(em, ec, floor);
  } else if (family == "custom") {
    throw ConfigError(en.path("family"), en.line("family"), "custom energies are available through the library API only");
  } else {
    throw ConfigError(en.path("family"), en.line("family"), "unknown family '" + family + "'");
  }
  en.finish();

  Section re = section("reaction");
  const std::string kind = re.text("kind", "zero");
  c.substep_dt = re.real("substep_dt", 0.01);
  require(c.substep_dt > 0.0, re, "substep_dt", "substep_dt must be positive");
  if (kind == "zero") {
    c.reaction = ReactionSpec::zero();
  } else if (kind == "lv_symmetric") {
    c.reaction = ReactionSpec::lv_symmetric();
  } else if (kind == "lv_asymmetric") {
    c.reaction = ReactionSpec::lv_asymmetric();
  } else if (kind == "custom") {
    ReactionSpec::Linear l[4];
    const char* names[4] = {"f1", "f2", "g1", "g2"};
    for (int k = 0; k < 4; ++k) {
      const std::string b = names[k];
      l[k].c = re.real(b + "_c", 0.0);
      l[k].rho = re.real(b + "_rho", 0.0);
      l[k].eta = re.real(b + "_eta", 0.0);
    }
    const double bF = re.real("bound_F", -1.0), bG = re.real("bound_G", -1.0);
    const double lF = re.real("lip_F", -1.0), lG = re.real("lip_G", -1.0);
    for (const char* key : {"bound_F", "bound_G", "lip_F", "lip_G"})
      require(re.has(key), re, key, "custom reactions must declare bound_F, bound_G, lip_F and lip_G");
    try {
      c.reaction = ReactionSpec::linear(l[0], l[1], l[2], l[3], bF, bG, lF, lG);
    } catch (const Error& e) {
      throw ConfigError(re.path("kind"), re.line("kind"), e.what());
    }
  } else {
    throw ConfigError(re.path("kind"), re.line("kind"), "unknown reaction kind '" + kind + "'");
  }
  if (kind != "custom")
    for (const char* b : {"f1", "f2", "g1", "g2"})
      for (const char* s : {"_c", "_rho", "_eta"})
        require(!re.has(std::string(b) + s), re, std::string(b) + s, "coefficients need kind = \"custom\"");
  c.reaction.sigma_bound = re.real("sigma_bound", c.reaction.sigma_bound);
  require(c.reaction.sigma_bound > 0.0, re, "sigma_bound", "sigma_bound must be positive");
  re.finish();

  Section in = section("initial");
  InitialCondition& ic = c.initial;
  const std::string ik = in.text("kind", "gaussian");
  if (ik == "indicators") ic.kind = InitialKind::Indicators;
  else if (ik == "cosine") ic.kind = InitialKind::Cosine;
  else if (ik == "barenblatt") ic.kind = InitialKind::Barenblatt;
  else if (ik == "gaussian") ic.kind = InitialKind::Gaussian;
  else if (ik == "csv") ic.kind = InitialKind::Csv;
  else throw ConfigError(in.path("kind"), in.line("kind"), "unknown initial kind '" + ik + "'");
  ic.rho_a = in.real("rho_a", 0.0);
  ic.rho_b = in.real("rho_b", 0.0);
  ic.rho_h = in.real("rho_h", 0.0);
  ic.eta_a = in.real("eta_a", 0.0);
  ic.eta_b = in.real("eta_b", 0.0);
  ic.eta_h = in.real("eta_h", 0.0);
  ic.t0 = in.real("t0", 0.1);
  ic.mass = in.real("mass", 1.0);
  ic.rho_fraction = in.real("rho_fraction", 0.5);
  ic.center = in.real("center", 0.5 * (left + right));
  ic.width = in.real("width", 0.0);
  ic.path = in.text("path", "");
  ic.r_fill = in.real("r_fill", kDefaultRFill);
  require(ic.r_fill >= 0.0 && ic.r_fill <= 1.0, in, "r_fill", "r_fill must lie in [0,1]");
  require(ic.rho_h >= 0.0, in, "rho_h", "heights must be >= 0");
  require(ic.eta_h >= 0.0, in, "eta_h", "heights must be >= 0");
  require(ic.t0 > 0.0, in, "t0", "t0 must be positive");
  require(ic.mass >= 0.0, in, "mass", "mass must be >= 0");
  require(ic.rho_fraction >= 0.0 && ic.rho_fraction <= 1.0, in, "rho_fraction", "rho_fraction must lie in [0,1]");
  require(ic.kind != InitialKind::Csv || !ic.path.empty(), in, "path", "kind = \"csv\" needs a path");
  in.finish();

  Section jk = section("jko");
  c.jko.grad_tol = jk.real("grad_tol", 0.0);
  c.jko.max_iters = jk.integer("max_iters", 200);
  c.jko.armijo_c = jk.real("armijo_c", 1e-4);
  c.jko.min_gap_factor = jk.real("min_gap_factor", 1e-3);
  require(c.jko.max_iters >= 1, jk, "max_iters", "max_iters must be >= 1");
  require(c.jko.armijo_c > 0.0 && c.jko.armijo_c < 0.5, jk, "armijo_c", "need 0 < armijo_c < 0.5");
  require(c.jko.min_gap_factor > 0.0 && c.jko.min_gap_factor < 1.0, jk, "min_gap_factor",
          "need 0 < min_gap_factor < 1");
  jk.finish();

  Section fv = section("fv");
  c.fv.cfl = fv.real("cfl", 0.4);
  c.fv.dt_max = fv.real("dt_max", 1e-2);
  require(c.fv.cfl > 0.0 && c.fv.cfl < 1.0, fv, "cfl", "need 0 < cfl < 1");
  require(c.fv.dt_max > 0.0, fv, "dt_max", "dt_max must be positive");
  fv.finish();

  Section out = section("output");
  c.snapshot_every = out.integer("snapshot_every", 1);
  require(c.snapshot_every >= 1, out, "snapshot_every", "snapshot_every must be >= 1");
  out.finish();

  try {
    validate(c);
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    const std::string key = e.code() == Errc::InvalidEnergy     ? "energy"
                            : e.code() == Errc::InvalidReaction ? "reaction"
                                                                : "";
    throw ConfigError(key, key.empty() ? 0 : section(key).line(), e.what());
  }
  return c;
}

std::string num(double v) {
  std::string s = format_double(v);
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

std::string quoted(const std::string& s) {
  std::ostringstream os;
  os << toml::value<std::string>(s);
  return os.str();
}

}  // namespace

SchemeConfig parse_config_string(const std::string& text, const std::string& source) {
  toml::table root;
  try {
    root = toml::parse(text, source);
  } catch (const toml::parse_error& e) {
    throw ConfigError("", static_cast<int>(e.source().begin.line), std::string(e.description()));
  }
  return build(root);
}

SchemeConfig parse_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("", 0, "cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_string(ss.str(), path);
}

std::string config_to_toml(const SchemeConfig& c) {
  if (c.energy.family() == EnergyFamily::Custom)
    throw Error(Errc::InvalidArgument, "custom energies cannot be written as a config");
  std::ostringstream os;
  os << "[domain]\nleft = " << num(c.grid.x_left) << "\nright = " << num(c.grid.x_right) << "\n\n";
  os << "[grid]\nn_cells = " << c.grid.n_cells << "\nn_parcels = " << c.n_parcels << "\n\n";
  os << "[time]\ntau = " << num(c.tau) << "\nt_final = " << num(c.t_final) << "\n\n";
  os << "[energy]\nfamily = \"" << (c.energy.family() == EnergyFamily::Quadratic ? "quadratic" : "powerlaw")
     << "\"\nc = " << num(c.energy.c()) << "\n";
  if (c.energy.family() == EnergyFamily::PowerLaw) os << "m = " << num(c.energy.m()) << "\n";
  os << "sigma_floor = " << num(c.energy.sigma_floor()) << "\n\n";
  const ReactionSpec& r = c.reaction;
  os << "[reaction]\nkind = \"";
  switch (r.kind) {
    case ReactionKind::Zero: os << "zero"; break;
    case ReactionKind::LotkaVolterraSymmetric: os << "lv_symmetric"; break;
    case ReactionKind::LotkaVolterraAsymmetric: os << "lv_asymmetric"; break;
    case ReactionKind::Custom: os << "custom"; break;
  }
  os << "\"\nsubstep_dt = " << num(c.substep_dt) << "\nsigma_bound = " << num(r.sigma_bound) << "\n";
  if (r.kind == ReactionKind::Custom) {
    const char* names[4] = {"f1", "f2", "g1", "g2"};
    for (int k = 0; k < 4; ++k)
      os << names[k] << "_c = " << num(r.linear_coeffs[k].c) << "\n"
         << names[k] << "_rho = " << num(r.linear_coeffs[k].rho) << "\n"
         << names[k] << "_eta = " << num(r.linear_coeffs[k].eta) << "\n";
    os << "bound_F = " << num(r.bound_F) << "\nbound_G = " << num(r.bound_G) << "\nlip_F = " << num(r.lip_F)
       << "\nlip_G = " << num(r.lip_G) << "\n";
  }
  const InitialCondition& ic = c.initial;
  os << "\n[initial]\nkind = \"" << to_string(ic.kind) << "\"\n";
  os << "rho_a = " << num(ic.rho_a) << "\nrho_b = " << num(ic.rho_b) << "\nrho_h = " << num(ic.rho_h) << "\n";
  os << "eta_a = " << num(ic.eta_a) << "\neta_b = " << num(ic.eta_b) << "\neta_h = " << num(ic.eta_h) << "\n";
  os << "t0 = " << num(ic.t0) << "\nmass = " << num(ic.mass) << "\nrho_fraction = " << num(ic.rho_fraction)
     << "\ncenter = " << num(ic.center) << "\nwidth = " << num(ic.width) << "\n";
  if (!ic.path.empty()) os << "path = " << quoted(ic.path) << "\n";
  os << "r_fill = " << num(ic.r_fill) << "\n\n";
  os << "[jko]\ngrad_tol = " << num(c.jko.grad_tol) << "\nmax_iters = " << c.jko.max_iters
     << "\narmijo_c = " << num(c.jko.armijo_c) << "\nmin_gap_factor = " << num(c.jko.min_gap_factor) << "\n\n";
  os << "[fv]\ncfl = " << num(c.fv.cfl) << "\ndt_max = " << num(c.fv.dt_max) << "\n\n";
  os << "[output]\nsnapshot_every = " << c.snapshot_every << "\n";
  return os.str();
}

std::string config_to_json(const SchemeConfig& config) {
  const toml::table t = toml::parse(config_to_toml(config));
  std::ostringstream os;
  os << toml::json_formatter{t};
  return os.str();
}

std::string config_reference() {
  return R"(Config file (TOML). Unknown sections or keys are errors.
  [domain]   left, right                      required
  [grid]     n_cells = 256, n_parcels = 256
  [time]     tau (0 < tau < 1), t_final       required; t_final an integer multiple of tau
  [energy]   family = "quadratic" | "powerlaw" (default "quadratic"), c = 0.5,
             m = 2 (powerlaw only), sigma_floor = 1e-12
             quadratic: chi(s) = c s^2;  powerlaw: chi(s) = c s^m
  [reaction] kind = "zero" | "lv_symmetric" | "lv_asymmetric" | "custom" (default "zero"),
             substep_dt = 0.01, sigma_bound = 2;
             custom: F1 = f1_c + f1_rho rho + f1_eta eta, likewise f2, g1, g2 (default 0),
             with required bound_F, bound_G, lip_F, lip_G
  [initial]  kind = "indicators" | "cosine" | "barenblatt" | "gaussian" | "csv" (default "gaussian"),
             rho_a, rho_b, rho_h, eta_a, eta_b, eta_h (indicators, default 0),
             t0 = 0.1 (barenblatt), mass = 1, rho_fraction = 0.5, center = domain midpoint,
             width = 0 (gaussian; <= 0 means a tenth of the domain), path (csv), r_fill = 0.5
  [jko]      grad_tol = 0 (means 1e-10 * parcel mass), max_iters = 200, armijo_c = 1e-4,
             min_gap_factor = 1e-3
  [fv]       cfl = 0.4, dt_max = 0.01
  [output]   snapshot_every = 1
)";
}

}  // namespace crossdiff
