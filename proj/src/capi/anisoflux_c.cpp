#include "anisoflux/anisoflux.h"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <memory>
#include <string>

#include "core/cases.hpp"
#include "core/coeffs.hpp"
#include "core/config.hpp"
#include "core/mesh.hpp"

struct af_config {
  anisoflux::CaseConfig cfg;
};

struct af_mesh {
  anisoflux::Mesh mesh;
};

namespace {

thread_local std::string t_last_error;

af_status fail(af_status status, const std::string& message) {
  t_last_error = message;
  return status;
}

// Runs fn, translating exceptions into status codes.
template <class F>
af_status guarded(F&& fn) {
  t_last_error.clear();
  try {
    return fn();
  } catch (const anisoflux::ConfigError& e) {
    return fail(AF_ERR_CONFIG, e.what());
  } catch (const anisoflux::CoefficientError& e) {
    return fail(AF_ERR_CONFIG, e.what());
  } catch (const anisoflux::SolverError& e) {
    return fail(AF_ERR_SOLVER, e.what());
  } catch (const anisoflux::AssemblyError& e) {
    return fail(AF_ERR_CONFIG, e.what());
  } catch (const anisoflux::MeshError& e) {
    return fail(AF_ERR_INVALID_ARGUMENT, e.what());
  } catch (const anisoflux::SpaceError& e) {
    return fail(AF_ERR_INVALID_ARGUMENT, e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return fail(AF_ERR_IO, e.what());
  } catch (const std::ios_base::failure& e) {
    return fail(AF_ERR_IO, e.what());
  } catch (const std::invalid_argument& e) {
    return fail(AF_ERR_INVALID_ARGUMENT, e.what());
  } catch (const std::exception& e) {
    return fail(AF_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(AF_ERR_INTERNAL, "unknown error");
  }
}

anisoflux::PlasmaParams to_params(const af_plasma_params& p) {
  anisoflux::PlasmaParams q;
  q.Z = p.Z;
  q.ln_lambda = p.ln_lambda;
  q.m_i = p.m_i;
  q.eps0 = p.eps0;
  q.e = p.e;
  q.mu0 = p.mu0;
  q.B0 = p.B0;
  q.p0 = p.p0;
  q.n0 = p.n0;
  q.L0 = p.L0;
  q.gamma = p.gamma;
  return q;
}

void from_params(const anisoflux::PlasmaParams& q, af_plasma_params* p) {
  p->Z = q.Z;
  p->ln_lambda = q.ln_lambda;
  p->m_i = q.m_i;
  p->eps0 = q.eps0;
  p->e = q.e;
  p->mu0 = q.mu0;
  p->B0 = q.B0;
  p->p0 = q.p0;
  p->n0 = q.n0;
  p->L0 = q.L0;
  p->gamma = q.gamma;
}

af_status new_config(anisoflux::CaseConfig cfg, af_config** out) {
  *out = new af_config{std::move(cfg)};
  return AF_OK;
}

}  // namespace

extern "C" {

const char* af_version(void) { return ANISOFLUX_VERSION; }

const char* af_status_string(af_status status) {
  switch (status) {
    case AF_OK: return "ok";
    case AF_ERR_CONFIG: return "configuration error";
    case AF_ERR_SOLVER: return "solver failure";
    case AF_ERR_INVALID_ARGUMENT: return "invalid argument";
    case AF_ERR_IO: return "i/o error";
    case AF_ERR_CHECK_FAILED: return "check failed";
    case AF_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* af_last_error(void) { return t_last_error.c_str(); }

af_status af_set_threads(int threads) {
  if (threads < 0) return fail(AF_ERR_INVALID_ARGUMENT, "thread count must be >= 0");
  anisoflux::set_assembly_threads(threads);
  t_last_error.clear();
  return AF_OK;
}

af_status af_config_load(const char* path, af_config** out) {
  if (!path || !out) return fail(AF_ERR_INVALID_ARGUMENT, "null argument");
  *out = nullptr;
  if (!std::filesystem::exists(path)) return fail(AF_ERR_IO, std::string("config file not found: ") + path);
  return guarded([&] { return new_config(anisoflux::load_config(path), out); });
}

af_status af_config_parse(const char* toml_text, af_config** out) {
  if (!toml_text || !out) return fail(AF_ERR_INVALID_ARGUMENT, "null argument");
  *out = nullptr;
  return guarded([&] { return new_config(anisoflux::parse_config(toml_text), out); });
}

af_status af_config_default(const char* case_id, af_config** out) {
  if (!case_id || !out) return fail(AF_ERR_INVALID_ARGUMENT, "null argument");
  *out = nullptr;
  const auto id = anisoflux::parse_case(case_id);
  if (!id) return fail(AF_ERR_CONFIG, std::string("unknown case '") + case_id + "'");
  return guarded([&] { return new_config(anisoflux::default_case(*id), out); });
}

af_status af_config_set_seed(af_config* cfg, uint64_t seed) {
  if (!cfg) return fail(AF_ERR_INVALID_ARGUMENT, "null config");
  cfg->cfg.seed = seed;
  t_last_error.clear();
  return AF_OK;
}

af_status af_config_set_snapshot_every(af_config* cfg, int every) {
  if (!cfg) return fail(AF_ERR_INVALID_ARGUMENT, "null config");
  if (every < 0) return fail(AF_ERR_INVALID_ARGUMENT, "snapshot cadence must be >= 0");
  cfg->cfg.diagnostics.snapshot_every = every;
  t_last_error.clear();
  return AF_OK;
}

af_status af_config_set_method(af_config* cfg, const char* method) {
  if (!cfg || !method) return fail(AF_ERR_INVALID_ARGUMENT, "null argument");
  const auto m = anisoflux::parse_method(method);
  if (!m) return fail(AF_ERR_CONFIG, std::string("unknown method '") + method + "'");
  cfg->cfg.method = *m;
  cfg->cfg.aux_space = anisoflux::AuxSpace::Default;
  t_last_error.clear();
  return AF_OK;
}

af_status af_config_set_mesh(af_config* cfg, int nx, int ny) {
  if (!cfg) return fail(AF_ERR_INVALID_ARGUMENT, "null config");
  if (nx < 1 || ny < 1) return fail(AF_ERR_INVALID_ARGUMENT, "mesh sizes must be >= 1");
  if (cfg->cfg.id == anisoflux::CaseId::Annulus) {
    cfg->cfg.mesh.nr = nx;
    cfg->cfg.mesh.ntheta = ny;
  } else {
    cfg->cfg.mesh.nx = nx;
    cfg->cfg.mesh.ny = ny;
  }
  t_last_error.clear();
  return AF_OK;
}

af_status af_config_set_steps(af_config* cfg, int n_steps) {
  if (!cfg) return fail(AF_ERR_INVALID_ARGUMENT, "null config");
  if (n_steps < 0) return fail(AF_ERR_INVALID_ARGUMENT, "step count must be >= 0");
  cfg->cfg.schedule.n_steps = n_steps;
  t_last_error.clear();
  return AF_OK;
}

af_status af_config_write(const af_config* cfg, const char* path) {
  if (!cfg || !path) return fail(AF_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    std::ofstream out(path);
    if (!out) return fail(AF_ERR_IO, std::string("cannot write ") + path);
    out << anisoflux::format_config(cfg->cfg);
    return out ? AF_OK : fail(AF_ERR_IO, std::string("failed writing ") + path);
  });
}

void af_config_free(af_config* cfg) { delete cfg; }

af_status af_run(const af_config* cfg, const char* output_dir, const char* restart_from, const char* command,
                 af_run_summary* summary) {
  if (!cfg) return fail(AF_ERR_INVALID_ARGUMENT, "null config");
  if (restart_from && !std::filesystem::exists(restart_from))
    return fail(AF_ERR_IO, std::string("checkpoint not found: ") + restart_from);
  return guarded([&] {
    cfg->cfg.validate();
    anisoflux::RunOptions opts;
    std::filesystem::path manifest;
    if (output_dir) {
      opts.output_dir = output_dir;
      std::filesystem::create_directories(opts.output_dir);
      manifest = opts.output_dir / "manifest.toml";
      anisoflux::write_manifest(manifest, cfg->cfg, command ? command : "run", opts.output_dir);
    }
    if (restart_from) opts.restart_from = std::filesystem::path(restart_from);
    const anisoflux::RunResult r = anisoflux::run_case(cfg->cfg, opts);
    if (output_dir) anisoflux::append_manifest_timing(manifest, r.seconds, r.steps);
    if (summary) {
      const double nan = std::numeric_limits<double>::quiet_NaN();
      summary->steps = r.steps;
      summary->t_final = r.t_final;
      summary->final_error = r.errors.empty() ? nan : r.errors.back().value;
      summary->final_total = r.totals.empty() ? nan : r.totals.back().value;
      summary->t_dofs = r.t_dofs;
      summary->z_dofs = r.z_dofs;
      summary->factorizations = r.factorizations;
      summary->seconds = r.seconds;
    }
    return AF_OK;
  });
}

af_status af_run_convergence(const af_config* cfg, const char* output_dir, const char* command, af_rate_row* rows,
                             int capacity, int* count) {
  if (!cfg) return fail(AF_ERR_INVALID_ARGUMENT, "null config");
  if (capacity < 0 || (capacity > 0 && !rows)) return fail(AF_ERR_INVALID_ARGUMENT, "bad row buffer");
  return guarded([&] {
    cfg->cfg.validate();
    if (cfg->cfg.convergence.levels.size() < 2)
      return fail(AF_ERR_CONFIG, "convergence study needs at least 2 levels");
    anisoflux::RunOptions opts;
    std::filesystem::path manifest;
    if (output_dir) {
      opts.output_dir = output_dir;
      std::filesystem::create_directories(opts.output_dir);
      manifest = opts.output_dir / "manifest.toml";
      anisoflux::write_manifest(manifest, cfg->cfg, command ? command : "convergence", opts.output_dir);
    }
    const auto start = std::chrono::steady_clock::now();
    const auto table = anisoflux::run_convergence_study(cfg->cfg, opts);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (output_dir) anisoflux::append_manifest_timing(manifest, seconds, 0);
    if (count) *count = static_cast<int>(table.size());
    for (int i = 0; i < capacity && i < static_cast<int>(table.size()); ++i) {
      rows[i].level = table[i].level;
      rows[i].cells = table[i].cells;
      rows[i].dofs = table[i].dofs;
      rows[i].error = table[i].error;
      rows[i].has_rate = table[i].rate ? 1 : 0;
      rows[i].rate = table[i].rate.value_or(std::numeric_limits<double>::quiet_NaN());
    }
    return AF_OK;
  });
}

void af_plasma_iter_defaults(af_plasma_params* params) {
  if (params) from_params(anisoflux::PlasmaParams::iter_defaults(), params);
}

af_status af_plasma_load(const char* path, af_plasma_params* params) {
  if (!path || !params) return fail(AF_ERR_INVALID_ARGUMENT, "null argument");
  if (!std::filesystem::exists(path)) return fail(AF_ERR_IO, std::string("params file not found: ") + path);
  return guarded([&] {
    from_params(anisoflux::load_plasma_params(path), params);
    return AF_OK;
  });
}

af_status af_nondim_compute(const af_plasma_params* params, af_nondim* out) {
  if (!params || !out) return fail(AF_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    const auto c = anisoflux::braginskii_constants(to_params(*params));
    *out = af_nondim{c.T0,        c.T0_keV,         c.v_A,           c.t_A,          c.tau_i0, c.omega_i0,
                     c.kappa_par0_n0, c.kappa_perp0_n0, c.t_par, c.t_perp, c.K_par,  c.K_perp};
    return AF_OK;
  });
}

af_status af_edge_conductivities(const af_nondim* constants, double T_b, double B, double* kappa_par,
                                 double* kappa_perp) {
  if (!constants || !kappa_par || !kappa_perp) return fail(AF_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    anisoflux::NondimConstants c;
    c.K_par = constants->K_par;
    c.K_perp = constants->K_perp;
    const auto e = anisoflux::edge_conductivities(c, T_b, B);
    *kappa_par = e.kappa_par;
    *kappa_perp = e.kappa_perp;
    return AF_OK;
  });
}

af_status af_nondim_format(const af_plasma_params* params, int csv, char* buf, size_t capacity, size_t* needed) {
  if (!params) return fail(AF_ERR_INVALID_ARGUMENT, "null params");
  return guarded([&] {
    const auto table = anisoflux::nondim_table(to_params(*params));
    const std::string s = csv ? anisoflux::format_nondim_csv(table) : anisoflux::format_nondim_text(table);
    if (needed) *needed = s.size() + 1;
    if (!buf) return AF_OK;
    if (capacity < s.size() + 1) return fail(AF_ERR_INVALID_ARGUMENT, "buffer too small");
    std::memcpy(buf, s.c_str(), s.size() + 1);
    return AF_OK;
  });
}

af_status af_nondim_check(const af_plasma_params* params, int* mismatches) {
  if (!params) return fail(AF_ERR_INVALID_ARGUMENT, "null params");
  return guarded([&] {
    const auto table = anisoflux::nondim_table(to_params(*params));
    int bad = 0;
    std::string msg;
    for (const auto& e : table) {
      if (anisoflux::matches_reference(e.value, e.reference, e.digits)) continue;
      ++bad;
      char line[160];
      std::snprintf(line, sizeof line, "%s%s = %.4g (reference %.3g)", msg.empty() ? "" : "; ", e.name.c_str(),
                    e.value, e.reference);
      msg += line;
    }
    if (mismatches) *mismatches = bad;
    return bad ? fail(AF_ERR_CHECK_FAILED, "mismatch: " + msg) : AF_OK;
  });
}

af_status af_mesh_create_rect(int nx, int ny, double lx, double ly, int periodic_x, int periodic_y,
                              double perturb_factor, uint64_t seed, af_mesh** out) {
  if (!out) return fail(AF_ERR_INVALID_ARGUMENT, "null argument");
  *out = nullptr;
  return guarded([&] {
    anisoflux::RectMeshParams p;
    p.nx = nx;
    p.ny = ny;
    p.lx = lx;
    p.ly = ly;
    p.periodic_x = periodic_x != 0;
    p.periodic_y = periodic_y != 0;
    p.perturb_factor = perturb_factor;
    p.seed = seed;
    *out = new af_mesh{anisoflux::build_rect_mesh(p)};
    return AF_OK;
  });
}

af_status af_mesh_create_annulus(int nr, int ntheta, double r0, double r1, double perturb_factor, uint64_t seed,
                                 af_mesh** out) {
  if (!out) return fail(AF_ERR_INVALID_ARGUMENT, "null argument");
  *out = nullptr;
  return guarded([&] {
    *out = new af_mesh{anisoflux::build_annulus_mesh(nr, ntheta, r0, r1, perturb_factor, seed)};
    return AF_OK;
  });
}

af_status af_mesh_counts(const af_mesh* mesh, int* vertices, int* cells, int* boundary_facets) {
  if (!mesh) return fail(AF_ERR_INVALID_ARGUMENT, "null mesh");
  if (vertices) *vertices = mesh->mesh.num_vertices();
  if (cells) *cells = mesh->mesh.num_cells();
  if (boundary_facets) *boundary_facets = static_cast<int>(mesh->mesh.boundary_facets().size());
  t_last_error.clear();
  return AF_OK;
}

af_status af_mesh_write_vtk(const af_mesh* mesh, const char* path) {
  if (!mesh || !path) return fail(AF_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    std::ofstream out(path);
    if (!out) return fail(AF_ERR_IO, std::string("cannot write ") + path);
    anisoflux::write_vtk(mesh->mesh, out);
    return out ? AF_OK : fail(AF_ERR_IO, std::string("failed writing ") + path);
  });
}

void af_mesh_free(af_mesh* mesh) { delete mesh; }

}  // extern "C"
