#include "core/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <tomlplusplus/toml.hpp>

#include "core/output.hpp"

namespace anisoflux {

namespace {

class Section {
 public:
  Section(const toml::table* table, std::string name) : table_(table), name_(std::move(name)) {}

  void number(const char* key, double& out) {
    const toml::node* n = find(key);
    if (!n) return;
    if (auto v = n->value_exact<double>()) out = *v;
    else if (auto i = n->value_exact<std::int64_t>()) out = static_cast<double>(*i);
    else throw ConfigError(path(key) + " must be a number");
  }

  void integer(const char* key, int& out) {
    const toml::node* n = find(key);
    if (!n) return;
    auto i = n->value_exact<std::int64_t>();
    if (!i) throw ConfigError(path(key) + " must be an integer");
    if (*i < INT32_MIN || *i > INT32_MAX) throw ConfigError(path(key) + " is out of range");
    out = static_cast<int>(*i);
  }

  void seed(const char* key, std::uint64_t& out) {
    const toml::node* n = find(key);
    if (!n) return;
    auto i = n->value_exact<std::int64_t>();
    if (!i || *i < 0) throw ConfigError(path(key) + " must be a non-negative integer");
    out = static_cast<std::uint64_t>(*i);
  }

  void boolean(const char* key, bool& out) {
    const toml::node* n = find(key);
    if (!n) return;
    auto b = n->value_exact<bool>();
    if (!b) throw ConfigError(path(key) + " must be true or false");
    out = *b;
  }

  std::optional<std::string> string(const char* key) {
    const toml::node* n = find(key);
    if (!n) return std::nullopt;
    auto s = n->value_exact<std::string>();
    if (!s) throw ConfigError(path(key) + " must be a string");
    return *s;
  }

  void int_list(const char* key, std::vector<int>& out) {
    const toml::node* n = find(key);
    if (!n) return;
    const toml::array* arr = n->as_array();
    if (!arr) throw ConfigError(path(key) + " must be an array of integers");
    std::vector<int> v;
    for (const auto& e : *arr) {
      auto i = e.value_exact<std::int64_t>();
      if (!i) throw ConfigError(path(key) + " must be an array of integers");
      v.push_back(static_cast<int>(*i));
    }
    out = std::move(v);
  }

  std::string path(const char* key) const { return name_.empty() ? key : name_ + "." + key; }

  // Every key must have been requested.
  void finish() const {
    if (!table_) return;
    for (const auto& [k, v] : *table_) {
      const std::string key(k.str());
      if (!seen_.count(key)) throw ConfigError("unknown key '" + path(key.c_str()) + "'");
    }
  }

 private:
  const toml::node* find(const char* key) {
    seen_.insert(key);
    return table_ ? table_->get(key) : nullptr;
  }

  const toml::table* table_;
  std::string name_;
  std::set<std::string> seen_;
};

const toml::table* subtable(const toml::table& root, const char* name) {
  const toml::node* n = root.get(name);
  if (!n) return nullptr;
  const toml::table* t = n->as_table();
  if (!t) throw ConfigError("'" + std::string(name) + "' must be a table");
  return t;
}

toml::table parse_toml(const std::string& text, const std::string& source) {
  try {
    return toml::parse(text, source);
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << source << ":" << e.source().begin.line << ":" << e.source().begin.column << ": " << e.description();
    throw ConfigError(msg.str());
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const char* kappa_mode_name(KappaMode m) {
  return m == KappaMode::Constant ? "constant" : "braginskii_limited";
}

const char* aux_space_name(AuxSpace a) {
  switch (a) {
    case AuxSpace::Default: return "default";
    case AuxSpace::DG: return "dg";
    case AuxSpace::CG: return "cg";
  }
  return "default";
}

const char* length_scale_name(LengthScale l) {
  return l == LengthScale::SqrtArea ? "sqrt_area" : "field_aligned";
}

std::string quoted(const std::string& s) {
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"' || ch == '\\') out += '\\';
    out += ch;
  }
  return out + '"';
}

}  // namespace

CaseConfig parse_config(const std::string& text, const std::string& source) {
  const toml::table root = parse_toml(text, source);
  static const std::set<std::string> known = {"case",   "mesh",      "discretization", "schedule",     "kappa",
                                              "diagnostics", "convergence", "picard", "solver",  "gaussian",
                                              "flux_surface", "annulus", "manifest", "timing"};
  for (const auto& [k, v] : root) {
    const std::string key(k.str());
    if (!known.count(key)) throw ConfigError("unknown key '" + key + "'");
  }

  Section cs(subtable(root, "case"), "case");
  CaseId id = CaseId::Gaussian;
  if (auto name = cs.string("id")) {
    auto parsed = parse_case(*name);
    if (!parsed) throw ConfigError("case.id: unknown case '" + *name + "'");
    id = *parsed;
  }
  CaseConfig c = default_case(id);
  cs.seed("seed", c.seed);
  cs.finish();

  Section m(subtable(root, "mesh"), "mesh");
  m.integer("nx", c.mesh.nx);
  m.integer("ny", c.mesh.ny);
  m.number("lx", c.mesh.lx);
  m.number("ly", c.mesh.ly);
  m.boolean("periodic_x", c.mesh.periodic_x);
  m.boolean("periodic_y", c.mesh.periodic_y);
  m.number("perturb_factor", c.mesh.perturb_factor);
  m.integer("nr", c.mesh.nr);
  m.integer("ntheta", c.mesh.ntheta);
  m.number("r0", c.mesh.r0);
  m.number("r1", c.mesh.r1);
  m.finish();

  Section d(subtable(root, "discretization"), "discretization");
  if (auto s = d.string("method")) {
    auto parsed = parse_method(*s);
    if (!parsed) throw ConfigError("discretization.method: unknown method '" + *s + "'");
    c.method = *parsed;
  }
  d.integer("degree", c.degree);
  if (auto s = d.string("aux_space")) {
    if (*s == "default") c.aux_space = AuxSpace::Default;
    else if (*s == "dg") c.aux_space = AuxSpace::DG;
    else if (*s == "cg") c.aux_space = AuxSpace::CG;
    else throw ConfigError("discretization.aux_space must be \"default\", \"dg\" or \"cg\"");
  }
  d.integer("quadrature", c.quad_order);
  if (auto s = d.string("length_scale")) {
    if (*s == "sqrt_area") c.length_scale = LengthScale::SqrtArea;
    else if (*s == "field_aligned") c.length_scale = LengthScale::FieldAligned;
    else throw ConfigError("discretization.length_scale must be \"sqrt_area\" or \"field_aligned\"");
  }
  d.finish();

  Section s(subtable(root, "schedule"), "schedule");
  s.number("dt0", c.schedule.dt0);
  s.number("dt_final", c.schedule.dt_final);
  s.integer("n_ramp", c.schedule.n_ramp);
  s.number("t_max", c.schedule.t_max);
  s.integer("n_steps", c.schedule.n_steps);
  s.finish();

  Section k(subtable(root, "kappa"), "kappa");
  if (auto v = k.string("mode")) {
    if (*v == "constant") c.kappa.mode = KappaMode::Constant;
    else if (*v == "braginskii_limited") c.kappa.mode = KappaMode::BraginskiiLimited;
    else throw ConfigError("kappa.mode must be \"constant\" or \"braginskii_limited\"");
  }
  k.number("kappa_par", c.kappa.K_par);
  k.number("kappa_perp", c.kappa.K_perp);
  k.number("T_l", c.kappa.T_l);
  k.number("sigma_l", c.kappa.sigma_l);
  k.finish();

  Section g(subtable(root, "diagnostics"), "diagnostics");
  g.boolean("errors", c.diagnostics.errors);
  g.boolean("totals", c.diagnostics.totals);
  g.integer("snapshot_every", c.diagnostics.snapshot_every);
  g.integer("checkpoint_every", c.diagnostics.checkpoint_every);
  g.finish();

  Section cv(subtable(root, "convergence"), "convergence");
  cv.int_list("levels", c.convergence.levels);
  cv.integer("base_cells", c.convergence.base_cells);
  cv.finish();

  Section p(subtable(root, "picard"), "picard");
  p.number("rtol", c.picard.rtol);
  p.integer("max_iter", c.picard.max_iter);
  p.finish();

  Section sv(subtable(root, "solver"), "solver");
  if (auto v = sv.string("kind")) {
    if (*v == "direct") c.solver.kind = SolverKind::Direct;
    else if (*v == "krylov") c.solver.kind = SolverKind::Krylov;
    else throw ConfigError("solver.kind must be \"direct\" or \"krylov\"");
  }
  sv.number("tol", c.solver.tol);
  sv.boolean("reuse", c.solver.reuse);
  sv.finish();

  Section ga(subtable(root, "gaussian"), "gaussian");
  ga.number("sigma", c.sigma);
  ga.integer("fourier_terms", c.fourier_terms);
  ga.finish();

  Section fs(subtable(root, "flux_surface"), "flux_surface");
  fs.number("slope", c.slope);
  fs.number("background", c.background);
  fs.number("xi0", c.xi0);
  fs.finish();

  Section an(subtable(root, "annulus"), "annulus");
  an.number("floor", c.floor);
  an.number("layer_cells", c.layer_cells);
  an.number("r_mid", c.r_mid);
  an.finish();

  c.validate();
  return c;
}

CaseConfig load_config(const std::filesystem::path& path) {
  return parse_config(read_file(path), path.string());
}

std::string format_config(const CaseConfig& c) {
  std::ostringstream o;
  auto num = [](double v) {
    std::string s = format_double(v);
    if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
    return s;
  };
  auto b = [](bool v) { return v ? "true" : "false"; };
  o << "[case]\n"
    << "id = \"" << case_name(c.id) << "\"\n"
    << "seed = " << c.seed << "\n\n";
  o << "[mesh]\n";
  if (c.id == CaseId::Annulus) {
    o << "nr = " << c.mesh.nr << "\n"
      << "ntheta = " << c.mesh.ntheta << "\n"
      << "r0 = " << num(c.mesh.r0) << "\n"
      << "r1 = " << num(c.mesh.r1) << "\n"
      << "perturb_factor = " << num(c.mesh.perturb_factor) << "\n\n";
  } else {
    o << "nx = " << c.mesh.nx << "\n"
      << "ny = " << c.mesh.ny << "\n"
      << "lx = " << num(c.mesh.lx) << "\n"
      << "ly = " << num(c.mesh.ly) << "\n"
      << "periodic_x = " << b(c.mesh.periodic_x) << "\n"
      << "periodic_y = " << b(c.mesh.periodic_y) << "\n"
      << "perturb_factor = " << num(c.mesh.perturb_factor) << "\n\n";
  }
  o << "[discretization]\n"
    << "method = \"" << method_name(c.method) << "\"\n"
    << "degree = " << c.degree << "\n"
    << "aux_space = \"" << aux_space_name(c.aux_space) << "\"\n"
    << "quadrature = " << c.quad_order << "\n"
    << "length_scale = \"" << length_scale_name(c.length_scale) << "\"\n\n";
  o << "[schedule]\n"
    << "dt0 = " << num(c.schedule.dt0) << "\n"
    << "dt_final = " << num(c.schedule.dt_final) << "\n"
    << "n_ramp = " << c.schedule.n_ramp << "\n"
    << "t_max = " << num(c.schedule.t_max) << "\n"
    << "n_steps = " << c.schedule.n_steps << "\n\n";
  o << "[kappa]\n"
    << "mode = \"" << kappa_mode_name(c.kappa.mode) << "\"\n"
    << "kappa_par = " << num(c.kappa.K_par) << "\n"
    << "kappa_perp = " << num(c.kappa.K_perp) << "\n"
    << "T_l = " << num(c.kappa.T_l) << "\n"
    << "sigma_l = " << num(c.kappa.sigma_l) << "\n\n";
  o << "[diagnostics]\n"
    << "errors = " << b(c.diagnostics.errors) << "\n"
    << "totals = " << b(c.diagnostics.totals) << "\n"
    << "snapshot_every = " << c.diagnostics.snapshot_every << "\n"
    << "checkpoint_every = " << c.diagnostics.checkpoint_every << "\n\n";
  o << "[convergence]\nlevels = [";
  for (std::size_t i = 0; i < c.convergence.levels.size(); ++i) o << (i ? ", " : "") << c.convergence.levels[i];
  o << "]\nbase_cells = " << c.convergence.base_cells << "\n\n";
  o << "[picard]\n"
    << "rtol = " << num(c.picard.rtol) << "\n"
    << "max_iter = " << c.picard.max_iter << "\n\n";
  o << "[solver]\n"
    << "kind = \"" << (c.solver.kind == SolverKind::Direct ? "direct" : "krylov") << "\"\n"
    << "tol = " << num(c.solver.tol) << "\n"
    << "reuse = " << b(c.solver.reuse) << "\n\n";
  switch (c.id) {
    case CaseId::Gaussian:
      o << "[gaussian]\n"
        << "sigma = " << num(c.sigma) << "\n"
        << "fourier_terms = " << c.fourier_terms << "\n";
      break;
    case CaseId::FluxSurface:
      o << "[flux_surface]\n"
        << "slope = " << num(c.slope) << "\n"
        << "background = " << num(c.background) << "\n"
        << "xi0 = " << num(c.xi0) << "\n";
      break;
    case CaseId::Annulus:
      o << "[annulus]\n"
        << "floor = " << num(c.floor) << "\n"
        << "layer_cells = " << num(c.layer_cells) << "\n"
        << "r_mid = " << num(c.r_mid) << "\n";
      break;
  }
  return o.str();
}

void write_manifest(const std::filesystem::path& path, const CaseConfig& cfg, const std::string& command,
                    const std::filesystem::path& output_dir) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write manifest " + path.string());
  out << format_config(cfg) << "\n[manifest]\n"
      << "version = " << quoted(ANISOFLUX_VERSION) << "\n"
      << "command = " << quoted(command) << "\n"
      << "seed = " << cfg.seed << "\n"
      << "output_dir = " << quoted(output_dir.string()) << "\n"
      << "linear_solver = " << quoted(direct_backend_name()) << "\n";
  if (!out) throw std::runtime_error("failed writing manifest " + path.string());
}

void append_manifest_timing(const std::filesystem::path& path, double seconds, int steps) {
  std::ofstream out(path, std::ios::app);
  if (!out) throw std::runtime_error("cannot append to manifest " + path.string());
  out << "\n[timing]\n"
      << "wall_seconds = " << format_double(seconds) << "\n"
      << "steps = " << steps << "\n";
}

PlasmaParams parse_plasma_params(const std::string& text, const std::string& source) {
  const toml::table root = parse_toml(text, source);
  const toml::table* tbl = &root;
  std::string prefix;
  if (root.size() == 1 && root.get("plasma")) {
    tbl = subtable(root, "plasma");
    prefix = "plasma";
  }
  PlasmaParams p = PlasmaParams::iter_defaults();
  Section s(tbl, prefix);
  s.number("Z", p.Z);
  s.number("ln_lambda", p.ln_lambda);
  s.number("m_i", p.m_i);
  s.number("eps0", p.eps0);
  s.number("e", p.e);
  s.number("mu0", p.mu0);
  s.number("B0", p.B0);
  s.number("p0", p.p0);
  s.number("n0", p.n0);
  s.number("L0", p.L0);
  s.number("gamma", p.gamma);
  s.finish();
  try {
    p.validate();
  } catch (const CoefficientError& e) {
    throw ConfigError(e.what());
  }
  return p;
}

PlasmaParams load_plasma_params(const std::filesystem::path& path) {
  return parse_plasma_params(read_file(path), path.string());
}

}  // namespace anisoflux
