#include "core/cases.hpp"

#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <sstream>
#include <unordered_map>

#include "core/output.hpp"

namespace anisoflux {

namespace {
constexpr double kPi = std::numbers::pi;
}

const char* case_name(CaseId id) {
  switch (id) {
    case CaseId::Gaussian: return "gaussian";
    case CaseId::FluxSurface: return "flux_surface";
    case CaseId::Annulus: return "annulus_equilibrium";
  }
  return "unknown";
}

std::optional<CaseId> parse_case(const std::string& name) {
  if (name == "gaussian") return CaseId::Gaussian;
  if (name == "flux_surface") return CaseId::FluxSurface;
  if (name == "annulus_equilibrium") return CaseId::Annulus;
  return std::nullopt;
}

CaseConfig default_case(CaseId id) {
  CaseConfig c;
  c.id = id;
  switch (id) {
    case CaseId::Gaussian:
      c.mesh.nx = c.mesh.ny = 20;
      c.mesh.lx = c.mesh.ly = 1.0;
      c.schedule = {1e-5, 1e-5, 1, 400 * 1e-5, 400};
      c.kappa = {KappaMode::Constant, 1.0, 0.01, 0.1, 0.04};
      c.diagnostics.errors = true;
      break;
    case CaseId::FluxSurface:
      c.mesh.nx = 120;
      c.mesh.ny = 96;
      c.mesh.lx = 5.0;
      c.mesh.ly = 4.0;
      c.mesh.periodic_x = c.mesh.periodic_y = true;
      c.mesh.perturb_factor = 0.1;
      c.seed = 7;
      c.schedule = {1e-4, 0.1, 20, 14.0, 0};
      c.kappa = {KappaMode::Constant, 10.0, 0.0, 0.1, 0.04};
      c.diagnostics.errors = true;
      break;
    case CaseId::Annulus:
      c.mesh.nr = 16;
      c.mesh.ntheta = 64;
      c.mesh.r0 = 0.25;
      c.mesh.r1 = 1.0;
      c.mesh.perturb_factor = 0.2;
      c.schedule = {1e-5, 5.0, 100, 1e4, 0};
      c.kappa = {KappaMode::BraginskiiLimited, 8.8e3, 0.0, 0.1, 0.04};
      c.diagnostics.errors = false;
      c.diagnostics.totals = true;
      break;
  }
  return c;
}

void CaseConfig::validate() const {
  if (degree < 1 || degree > 6) throw ConfigError("discretization.degree must be in [1, 6]");
  if (quad_order < 0 || quad_order > 10) throw ConfigError("discretization.quadrature must be in [0, 10]");
  if (method == Method::Supg && aux_space == AuxSpace::DG)
    throw ConfigError("supg requires a continuous auxiliary space of the temperature degree (aux_space = \"cg\")");
  if (method == Method::Primal && aux_space != AuxSpace::Default)
    throw ConfigError("primal discretization has no auxiliary space; remove discretization.aux_space");
  if (id == CaseId::Annulus) {
    if (mesh.nr < 1) throw ConfigError("mesh.nr must be >= 1");
    if (mesh.ntheta < 8) throw ConfigError("mesh.ntheta must be >= 8");
    if (!(mesh.r0 > 0.0) || !(mesh.r1 > mesh.r0)) throw ConfigError("mesh needs 0 < r0 < r1");
    if (!(floor > 0.0) || floor >= 1.0) throw ConfigError("annulus floor must be in (0, 1)");
    if (!(layer_cells > 0.0)) throw ConfigError("annulus layer_cells must be positive");
    if (!(r_mid > mesh.r0 && r_mid < mesh.r1)) throw ConfigError("annulus r_mid must lie in (r0, r1)");
  }
  if (!(mesh.perturb_factor >= 0.0 && mesh.perturb_factor < 0.5))
    throw ConfigError("mesh.perturb_factor must be in [0, 0.5)");
  if (id != CaseId::Annulus) {
    if (mesh.nx < 1 || mesh.ny < 1) throw ConfigError("mesh.nx and mesh.ny must be >= 1");
    if (!(mesh.lx > 0.0) || !(mesh.ly > 0.0)) throw ConfigError("mesh extents must be positive");
  }
  if (id == CaseId::Gaussian) {
    if (mesh.lx != 1.0 || mesh.ly != 1.0 || mesh.periodic_x || mesh.periodic_y)
      throw ConfigError("gaussian case runs on the non-periodic unit square");
    if (kappa.mode != KappaMode::Constant) throw ConfigError("gaussian case needs constant kappa");
    if (!(sigma > 0.0)) throw ConfigError("gaussian sigma must be positive");
    if (fourier_terms < 1 || fourier_terms > 5000) throw ConfigError("gaussian fourier_terms must be in [1, 5000]");
  }
  if (id == CaseId::FluxSurface) {
    if (!mesh.periodic_x || !mesh.periodic_y) throw ConfigError("flux_surface case needs a doubly periodic mesh");
    if (kappa.mode != KappaMode::Constant || kappa.K_perp != 0.0)
      throw ConfigError("flux_surface case needs constant kappa with kappa_perp = 0");
    if (!(slope > 0.0)) throw ConfigError("flux_surface slope must be positive");
    if (!(xi0 > 0.0)) throw ConfigError("flux_surface xi0 must be positive");
  }
  if (id == CaseId::Annulus && kappa.K_perp != 0.0)
    throw ConfigError("annulus_equilibrium case needs kappa_perp = 0");
  try {
    kappa.validate();
    schedule.validate();
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  if (diagnostics.snapshot_every < 0 || diagnostics.checkpoint_every < 0)
    throw ConfigError("diagnostics cadences must be >= 0");
  if (!(picard.rtol > 0.0) || picard.max_iter < 0) throw ConfigError("picard needs rtol > 0 and max_iter >= 0");
  if (!(solver.tol > 0.0)) throw ConfigError("solver.tol must be positive");
  if (convergence.base_cells < 1) throw ConfigError("convergence.base_cells must be >= 1");
  for (int l : convergence.levels)
    if (l < 0 || l > 8) throw ConfigError("convergence.levels entries must be in [0, 8]");
}

// ---------------------------------------------------------------------------
// Gaussian oracle

namespace {

std::atomic<int> g_oracle_ids{0};

struct FourierEntry {
  int id = -1;
  double t = 0.0;
  std::vector<double> c;  // b_n exp(-κ π² n² t)
  std::unordered_map<double, std::pair<double, double>> values;
};

// A few (oracle, time) entries per thread; error norms alternate between
// the current time and t = 0.
struct FourierCache {
  std::array<FourierEntry, 4> entries;
  std::size_t next = 0;
};

thread_local FourierCache t_cache;

}  // namespace

GaussianOracle::GaussianOracle(double sigma, int terms, double kappa_par, double kappa_perp)
    : sigma_(sigma), kappa_par_(kappa_par), kappa_perp_(kappa_perp), id_(g_oracle_ids.fetch_add(1)) {
  const auto g = [sigma](double x) { return std::exp(-(x - 0.5) * (x - 0.5) / (sigma * sigma)); };
  a0_ = g(0.0);
  // b_n = 2 ∫ (g - a0) sin(nπx) dx by composite Gauss-Legendre.
  const Quadrature1D q = gauss_legendre(10);
  const int panels = std::max(400, 4 * terms);
  b_.assign(terms, 0.0);
  for (int p = 0; p < panels; ++p) {
    const double x0 = static_cast<double>(p) / panels;
    const double h = 1.0 / panels;
    for (std::size_t k = 0; k < q.points.size(); ++k) {
      const double x = x0 + 0.5 * h * (q.points[k] + 1.0);
      const double w = 0.5 * h * q.weights[k] * (g(x) - a0_);
      for (int n = 1; n <= terms; ++n) b_[n - 1] += 2.0 * w * std::sin(n * kPi * x);
    }
  }
}

double GaussianOracle::f(double y) { return 0.5 * (1.0 - std::cos(2.0 * kPi * y)); }
double GaussianOracle::f_second(double y) { return 2.0 * kPi * kPi * std::cos(2.0 * kPi * y); }

std::pair<double, double> GaussianOracle::fourier(double x, double t) const {
  FourierEntry* found = nullptr;
  for (auto& e : t_cache.entries)
    if (e.id == id_ && e.t == t) found = &e;
  if (!found) {
    // The source cancels all of κ⊥ΔT, leaving κΔ = κ∥ - κ⊥ along x.
    const double kappa_delta = kappa_par_ - kappa_perp_;
    found = &t_cache.entries[t_cache.next];
    t_cache.next = (t_cache.next + 1) % t_cache.entries.size();
    found->id = id_;
    found->t = t;
    found->values.clear();
    found->c.resize(b_.size());
    for (std::size_t n = 1; n <= b_.size(); ++n)
      found->c[n - 1] = b_[n - 1] * std::exp(-kappa_delta * kPi * kPi * double(n * n) * t);
  }
  FourierEntry& cache = *found;
  if (auto it = cache.values.find(x); it != cache.values.end()) return it->second;
  const double theta = kPi * x;
  const double two_cos = 2.0 * std::cos(theta);
  double s_prev = 0.0, s_cur = std::sin(theta);
  double val = a0_, dxx = 0.0;
  for (std::size_t n = 1; n <= b_.size(); ++n) {
    const double term = cache.c[n - 1] * s_cur;
    val += term;
    dxx -= (kPi * n) * (kPi * n) * term;
    const double s_next = two_cos * s_cur - s_prev;
    s_prev = s_cur;
    s_cur = s_next;
  }
  if (cache.values.size() > 100000) cache.values.clear();
  cache.values.emplace(x, std::make_pair(val, dxx));
  return {val, dxx};
}

double GaussianOracle::temperature(Point p, double t) const { return f(p.y) * fourier(p.x, t).first; }

double GaussianOracle::source(Point p, double t) const {
  if (kappa_perp_ == 0.0) return 0.0;
  const auto [tf, tfxx] = fourier(p.x, t);
  return -kappa_perp_ * (f_second(p.y) * tf + f(p.y) * tfxx);
}

double GaussianOracle::initial_profile(Point p) const {
  return f(p.y) * std::exp(-(p.x - 0.5) * (p.x - 0.5) / (sigma_ * sigma_));
}

// ---------------------------------------------------------------------------
// Flux surface

FluxFrame make_flux_frame(double lx, double ly, double slope) {
  (void)lx;
  FluxFrame fr;
  const double nb = std::sqrt(1.0 + slope * slope);
  fr.origin = {ly / slope, ly / 2.0};
  fr.b = {1.0 / nb, slope / nb};
  fr.normal = {slope / nb, -1.0 / nb};
  // Scales such that the xy origin sits at (ξ, ζ_c) = (-2, -1).
  const Point d = Point{0.0, 0.0} - fr.origin;
  fr.xi_unit = dot(d, fr.b) / -2.0;
  fr.zeta_unit = dot(d, fr.normal) / -1.0;
  if (!(fr.xi_unit > 0.0) || !(fr.zeta_unit > 0.0))
    throw ConfigError("flux_surface geometry gives non-positive coordinate scales");
  return fr;
}

Point coordinate_map_flux(Point x, const FluxFrame& fr) {
  const Point d = x - fr.origin;
  return {dot(d, fr.b) / fr.xi_unit, dot(d, fr.normal) / fr.zeta_unit};
}

FluxSurfaceOracle::FluxSurfaceOracle(double lx, double ly, double slope, double background, double xi0,
                                     double kappa_par)
    : lx_(lx), ly_(ly), background_(background), xi0_(xi0), kappa_par_(kappa_par),
      frame_(make_flux_frame(lx, ly, slope)) {}

double FluxSurfaceOracle::bump(double xi, double zeta, double t) const {
  if (!(std::abs(zeta) < 1.0)) return 0.0;
  // Diffusivity in ξ units: κ / (ξ unit)^2.
  const double W = 1.0 + 4.0 * kappa_par_ / (frame_.xi_unit * frame_.xi_unit) * xi0_ * xi0_ * t;
  return std::exp(-(xi0_ * xi) * (xi0_ * xi) / W) / std::sqrt(W) * 0.5 * (1.0 + std::cos(kPi * zeta));
}

double FluxSurfaceOracle::temperature(Point x, double t) const {
  const FluxFrame& fr = frame_;
  const double W = 1.0 + 4.0 * kappa_par_ / (fr.xi_unit * fr.xi_unit) * xi0_ * xi0_ * t;
  const double log_tail = std::max(std::log(1e12) - 0.5 * std::log(W), 0.0);
  const double R = std::sqrt(W * log_tail) / xi0_ + 1.0;  // ξ radius with tail < 1e-12
  const Point d = x - fr.origin;
  const double pb = dot(d, fr.b);
  const double pn = dot(d, fr.normal);
  const double vb = std::abs(pb) + R * fr.xi_unit;
  const double vn = std::abs(pn) + fr.zeta_unit;
  const double vmax = std::sqrt(vb * vb + vn * vn);
  const int imax = static_cast<int>(std::ceil(vmax / lx_));
  const int jmax = static_cast<int>(std::ceil(vmax / ly_));
  double sum = 0.0;
  for (int i = -imax; i <= imax; ++i) {
    int jlo = -jmax, jhi = jmax;
    if (std::abs(fr.normal.y) > 1e-14) {
      // |pn - (i lx n_x + j ly n_y)| < ζ unit
      const double a = (pn - fr.zeta_unit - i * lx_ * fr.normal.x) / (ly_ * fr.normal.y);
      const double b = (pn + fr.zeta_unit - i * lx_ * fr.normal.x) / (ly_ * fr.normal.y);
      jlo = std::max(jlo, static_cast<int>(std::floor(std::min(a, b))));
      jhi = std::min(jhi, static_cast<int>(std::ceil(std::max(a, b))));
    }
    for (int j = jlo; j <= jhi; ++j) {
      const Point v{i * lx_, j * ly_};
      const double zeta = (pn - dot(v, fr.normal)) / fr.zeta_unit;
      if (!(std::abs(zeta) < 1.0)) continue;
      const double xi = (pb - dot(v, fr.b)) / fr.xi_unit;
      if (std::abs(xi) > R) continue;
      sum += bump(xi, zeta, t);
    }
  }
  return background_ + sum;
}

// ---------------------------------------------------------------------------
// Annulus

double annulus_profile(double r, double r_mid, double width, double floor) {
  return floor + (1.0 - floor) * 0.5 * (1.0 + std::tanh((r_mid - r) / width));
}

double total_temperature_rel(const Field& T, const Field& T_bc, const Field& T_init) {
  const double bc = integrate_abs(T_bc);
  const double den = integrate_abs(T_init) - bc;
  if (den == 0.0) throw SpaceError("initial and boundary fields have equal total temperature");
  return (integrate_abs(T) - bc) / den;
}

// ---------------------------------------------------------------------------
// Drivers

std::shared_ptr<const Mesh> build_case_mesh(const CaseConfig& cfg) {
  if (cfg.id == CaseId::Annulus)
    return std::make_shared<const Mesh>(build_annulus_mesh(cfg.mesh.nr, cfg.mesh.ntheta, cfg.mesh.r0, cfg.mesh.r1,
                                                                 cfg.mesh.perturb_factor, cfg.seed));
  RectMeshParams p;
  p.nx = cfg.mesh.nx;
  p.ny = cfg.mesh.ny;
  p.lx = cfg.mesh.lx;
  p.ly = cfg.mesh.ly;
  p.periodic_x = cfg.mesh.periodic_x;
  p.periodic_y = cfg.mesh.periodic_y;
  p.perturb_factor = cfg.mesh.perturb_factor;
  p.seed = cfg.seed;
  return std::make_shared<const Mesh>(build_rect_mesh(p));
}

Discretization build_case_discretization(const CaseConfig& cfg, std::shared_ptr<const Mesh> mesh) {
  std::vector<int> tags;
  if (cfg.id == CaseId::Annulus) {
    tags = {boundary::kOuter};
  } else {
    if (!cfg.mesh.periodic_x) tags.insert(tags.end(), {boundary::kLeft, boundary::kRight});
    if (!cfg.mesh.periodic_y) tags.insert(tags.end(), {boundary::kBottom, boundary::kTop});
  }
  auto t_space = build_space(mesh, Family::Lagrange, cfg.degree, tags);
  Discretization d;
  d.method = cfg.method;
  d.quad_order = cfg.quad_order;
  d.t_space = t_space;
  if (cfg.method != Method::Primal) {
    AuxSpace aux = cfg.aux_space;
    if (aux == AuxSpace::Default) aux = cfg.method == Method::Mixed ? AuxSpace::DG : AuxSpace::CG;
    d.z_space = aux == AuxSpace::DG ? build_space(mesh, Family::DiscontinuousLagrange, cfg.degree - 1)
                                    : build_space(mesh, Family::Lagrange, cfg.degree);
  }
  try {
    d.validate();
  } catch (const AssemblyError& e) {
    throw ConfigError(e.what());
  }
  return d;
}

CoefficientSet build_case_coefficients(const CaseConfig& cfg) {
  CoefficientSet c;
  c.kappa = cfg.kappa;
  c.length_scale = cfg.length_scale;
  switch (cfg.id) {
    case CaseId::Gaussian:
      c.b = [](Point) { return Point{1.0, 0.0}; };
      break;
    case CaseId::FluxSurface: {
      const double nb = std::sqrt(1.0 + cfg.slope * cfg.slope);
      const Point b{1.0 / nb, cfg.slope / nb};
      c.b = [b](Point) { return b; };
      break;
    }
    case CaseId::Annulus:
      c.b = [](Point x) {
        const double r = std::hypot(x.x, x.y);
        return Point{-x.y / r, x.x / r};
      };
      break;
  }
  return c;
}

namespace {

struct CaseFunctions {
  ScalarFunction initial;
  std::function<double(Point, double)> oracle;  // may be empty
  SpaceTimeFunction source;                     // may be empty
  double baseline = 0.0;                        // T_bc for the total diagnostic
};

CaseFunctions case_functions(const CaseConfig& cfg) {
  CaseFunctions f;
  switch (cfg.id) {
    case CaseId::Gaussian: {
      auto o = std::make_shared<GaussianOracle>(cfg.sigma, cfg.fourier_terms, cfg.kappa.K_par, cfg.kappa.K_perp);
      f.initial = [o](Point p) { return o->temperature(p, 0.0); };
      f.oracle = [o](Point p, double t) { return o->temperature(p, t); };
      if (cfg.kappa.K_perp != 0.0) f.source = [o](Point p, double t) { return o->source(p, t); };
      f.baseline = 0.0;
      break;
    }
    case CaseId::FluxSurface: {
      auto o = std::make_shared<FluxSurfaceOracle>(cfg.mesh.lx, cfg.mesh.ly, cfg.slope, cfg.background, cfg.xi0,
                                                   cfg.kappa.K_par);
      f.initial = [o](Point p) { return o->temperature(p, 0.0); };
      f.oracle = [o](Point p, double t) { return o->temperature(p, t); };
      f.baseline = cfg.background;
      break;
    }
    case CaseId::Annulus: {
      const double width = cfg.layer_cells * (cfg.mesh.r1 - cfg.mesh.r0) / cfg.mesh.nr;
      const double r_mid = cfg.r_mid, fl = cfg.floor;
      f.initial = [=](Point p) { return annulus_profile(std::hypot(p.x, p.y), r_mid, width, fl); };
      f.oracle = [=](Point p, double) { return annulus_profile(std::hypot(p.x, p.y), r_mid, width, fl); };
      f.baseline = cfg.floor;
      break;
    }
  }
  return f;
}

std::string step_name(const char* prefix, int step, const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s_%06d%s", prefix, step, ext);
  return buf;
}

}  // namespace

RunResult run_case(const CaseConfig& cfg, const RunOptions& opts) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  reset_limiter_clamp_count();
  auto mesh = build_case_mesh(cfg);
  const Discretization disc = build_case_discretization(cfg, mesh);
  const CoefficientSet coeffs = build_case_coefficients(cfg);
  const CaseFunctions fns = case_functions(cfg);
  const auto& t_space = disc.t_space;

  const Field T0 = interpolate(fns.initial, t_space);
  const Field T_bc = interpolate([&](Point) { return fns.baseline; }, t_space);

  StepperConfig sc;
  sc.disc = disc;
  sc.coeffs = coeffs;
  sc.source = fns.source;
  sc.boundary = T0.coefficients();
  sc.solver = cfg.solver;
  sc.picard = cfg.picard;
  MidpointStepper stepper(sc);

  TransientState state;
  state.T = T0.coefficients();
  if (opts.restart_from) {
    state = read_checkpoint(*opts.restart_from);
    if (state.T.size() != t_space->num_dofs())
      throw ConfigError("checkpoint does not match the configured temperature space");
  }

  const bool write = !opts.output_dir.empty();
  std::optional<CsvWriter> errors_csv, totals_csv, diag_csv, log_csv;
  if (write) {
    std::filesystem::create_directories(opts.output_dir);
    if (cfg.diagnostics.errors && fns.oracle)
      errors_csv.emplace(opts.output_dir / "errors.csv", std::vector<std::string>{"step", "t", "error"});
    if (cfg.diagnostics.totals)
      totals_csv.emplace(opts.output_dir / "totals.csv", std::vector<std::string>{"step", "t", "rel_total"});
    diag_csv.emplace(opts.output_dir / "diagnostics.csv",
                     std::vector<std::string>{"step", "t", "dt", "error", "rel_total", "picard_iterations",
                                              "residual"});
    log_csv.emplace(opts.output_dir / "solver.log",
                    std::vector<std::string>{"step", "iterations", "residual", "seconds", "reused"});
  }

  RunResult result;
  result.t_dofs = t_space->num_dofs();
  result.z_dofs = disc.z_space ? disc.z_space->num_dofs() : 0;
  const int quad = disc.quadrature_order();

  auto observer = [&](const TransientState& s, double dt, const SolveReport* rep) {
    const Field T(t_space, s.T);
    double err = std::numeric_limits<double>::quiet_NaN();
    double tot = std::numeric_limits<double>::quiet_NaN();
    if (cfg.diagnostics.errors && fns.oracle) {
      const double t = s.t;
      err = l2_relative_error(
          T, [&](Point p) { return fns.oracle(p, t); }, [&](Point p) { return fns.oracle(p, 0.0); }, quad);
      result.errors.push_back({s.step, s.t, err});
      if (errors_csv) errors_csv->row({double(s.step), s.t, err});
    }
    if (cfg.diagnostics.totals) {
      tot = total_temperature_rel(T, T_bc, T0);
      result.totals.push_back({s.step, s.t, tot});
      if (totals_csv) totals_csv->row({double(s.step), s.t, tot});
    }
    if (diag_csv) {
      diag_csv->row({double(s.step), s.t, dt, err, tot, rep ? double(rep->iterations) : 0.0,
                     rep ? rep->residual : 0.0});
    }
    if (log_csv && rep) {
      log_csv->row({double(s.step), double(rep->iterations), rep->residual, rep->seconds,
                    rep->reused_factorization ? 1.0 : 0.0});
    }
    if (write && cfg.diagnostics.snapshot_every > 0 && s.step % cfg.diagnostics.snapshot_every == 0) {
      std::ofstream out(opts.output_dir / step_name("T", s.step, ".vtk"));
      write_field_vtk(T, out, "T");
    }
    if (write && cfg.diagnostics.checkpoint_every > 0 && s.step > 0 &&
        s.step % cfg.diagnostics.checkpoint_every == 0)
      write_checkpoint(opts.output_dir / step_name("checkpoint", s.step, ".txt"), s);
  };

  try {
    run_transient(stepper, state, cfg.schedule, observer, true);
  } catch (...) {
    result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    throw;
  }
  if (write) write_checkpoint(opts.output_dir / "checkpoint.txt", state);

  result.steps = state.step;
  result.t_final = state.t;
  result.factorizations = stepper.factorizations();
  result.assemblies = stepper.assemblies();
  result.limiter_clamps = limiter_clamp_count();
  result.T_final = state.T;
  result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

std::vector<RateRow> compute_rates(const std::vector<RateRow>& rows_in) {
  std::vector<RateRow> rows = rows_in;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    rows[i].rate.reset();
    if (i == 0) continue;
    const double ec = rows[i - 1].error, ef = rows[i].error;
    // Errors at round-off carry no rate; reported as saturated.
    if (ec > kSaturatedError && ef > 0.0) rows[i].rate = std::log2(ec / ef);
  }
  return rows;
}

std::vector<RateRow> run_convergence_study(const CaseConfig& cfg, const RunOptions& opts) {
  if (cfg.convergence.levels.size() < 2) throw ConfigError("convergence study needs at least 2 levels");
  std::vector<RateRow> rows;
  for (int level : cfg.convergence.levels) {
    CaseConfig c = cfg;
    const int cells = cfg.convergence.base_cells << level;
    if (c.id == CaseId::Annulus) {
      c.mesh.nr = cells;
      c.mesh.ntheta = 4 * cells;
    } else {
      c.mesh.nx = cells;
      c.mesh.ny = cells * cfg.mesh.ny / std::max(cfg.mesh.nx, 1);
      if (c.mesh.ny < 1) c.mesh.ny = cells;
    }
    c.diagnostics.errors = true;
    RunOptions o = opts;
    if (!opts.output_dir.empty()) o.output_dir = opts.output_dir / ("level_" + std::to_string(level));
    const RunResult r = run_case(c, o);
    RateRow row;
    row.level = level;
    row.cells = cells;
    row.dofs = r.t_dofs;
    row.error = r.final_error();
    rows.push_back(row);
  }
  rows = compute_rates(rows);
  if (!opts.output_dir.empty()) write_rates_csv(opts.output_dir / "rates.csv", rows);
  return rows;
}

void write_rates_csv(const std::filesystem::path& path, const std::vector<RateRow>& rows) {
  CsvWriter w(path, {"level", "dofs", "error", "rate"});
  for (const auto& r : rows) {
    std::string rate;
    if (r.rate) rate = format_double(*r.rate);
    else if (&r != &rows.front()) rate = "saturated";
    w.row(std::vector<std::string>{std::to_string(r.level), std::to_string(r.dofs), format_double(r.error), rate});
  }
}

}  // namespace anisoflux
