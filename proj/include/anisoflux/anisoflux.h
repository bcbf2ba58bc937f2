/* anisoflux C API.
 *
 * All functions returning af_status report failures through the status code
 * and a thread-local message retrieved with af_last_error(). Handles are
 * opaque and owned by the caller; release them with the matching *_free.
 */
#ifndef ANISOFLUX_ANISOFLUX_H
#define ANISOFLUX_ANISOFLUX_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(ANISOFLUX_BUILDING_LIBRARY)
#    define AF_API __declspec(dllexport)
#  else
#    define AF_API __declspec(dllimport)
#  endif
#else
#  define AF_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum af_status {
  AF_OK = 0,
  AF_ERR_CONFIG = 1,
  AF_ERR_SOLVER = 2,
  AF_ERR_INVALID_ARGUMENT = 3,
  AF_ERR_IO = 4,
  AF_ERR_CHECK_FAILED = 5,
  AF_ERR_INTERNAL = 6
} af_status;

typedef struct af_config af_config;
typedef struct af_mesh af_mesh;

AF_API const char* af_version(void);
AF_API const char* af_status_string(af_status status);
/* Message of the last failing call on this thread; "" if none. */
AF_API const char* af_last_error(void);

/* Worker threads for assembly; 0 restores the default (ANISOFLUX_THREADS or hardware concurrency). */
AF_API af_status af_set_threads(int threads);

/* ---- case configuration ------------------------------------------------ */

AF_API af_status af_config_load(const char* path, af_config** out);
AF_API af_status af_config_parse(const char* toml_text, af_config** out);
/* Defaults of a named case: "gaussian", "flux_surface", "annulus_equilibrium". */
AF_API af_status af_config_default(const char* case_id, af_config** out);
AF_API af_status af_config_set_seed(af_config* cfg, uint64_t seed);
AF_API af_status af_config_set_snapshot_every(af_config* cfg, int every);
/* "primal", "mixed" or "supg"; resets the auxiliary space to its default. */
AF_API af_status af_config_set_method(af_config* cfg, const char* method);
AF_API af_status af_config_set_mesh(af_config* cfg, int nx, int ny);
AF_API af_status af_config_set_steps(af_config* cfg, int n_steps);
/* Fully materialized TOML. */
AF_API af_status af_config_write(const af_config* cfg, const char* path);
AF_API void af_config_free(af_config* cfg);

/* ---- runs ---------------------------------------------------------------- */

typedef struct af_run_summary {
  int steps;
  double t_final;
  double final_error;  /* NaN when the case records no error */
  double final_total;  /* NaN when the case records no total */
  int t_dofs;
  int z_dofs;
  int factorizations;
  double seconds;
} af_run_summary;

/* Runs the configured case. With output_dir non-NULL writes manifest.toml
 * before stepping, CSV/VTK outputs while stepping and wall time afterwards.
 * restart_from and command may be NULL. */
AF_API af_status af_run(const af_config* cfg, const char* output_dir, const char* restart_from,
                        const char* command, af_run_summary* summary);

typedef struct af_rate_row {
  int level;
  int cells;
  int dofs;
  double error;
  int has_rate;
  double rate;
} af_rate_row;

/* Runs every configured level. On success *count holds the number of levels;
 * at most capacity rows are copied into rows (which may be NULL). */
AF_API af_status af_run_convergence(const af_config* cfg, const char* output_dir, const char* command,
                                    af_rate_row* rows, int capacity, int* count);

/* ---- nondimensionalization ---------------------------------------------- */

typedef struct af_plasma_params {
  double Z;
  double ln_lambda;
  double m_i;
  double eps0;
  double e;
  double mu0;
  double B0;
  double p0;
  double n0;
  double L0;
  double gamma;
} af_plasma_params;

typedef struct af_nondim {
  double T0;
  double T0_keV;
  double v_A;
  double t_A;
  double tau_i0;
  double omega_i0;
  double kappa_par0_n0;
  double kappa_perp0_n0;
  double t_par;
  double t_perp;
  double K_par;
  double K_perp;
} af_nondim;

AF_API void af_plasma_iter_defaults(af_plasma_params* params);
AF_API af_status af_plasma_load(const char* path, af_plasma_params* params);
AF_API af_status af_nondim_compute(const af_plasma_params* params, af_nondim* out);
AF_API af_status af_edge_conductivities(const af_nondim* constants, double T_b, double B,
                                        double* kappa_par, double* kappa_perp);
/* Table as aligned text (csv == 0) or CSV. *needed receives the length
 * including the terminator; buf may be NULL to query it. */
AF_API af_status af_nondim_format(const af_plasma_params* params, int csv, char* buf, size_t capacity,
                                  size_t* needed);
/* AF_ERR_CHECK_FAILED if any entry differs from its reference; the message
 * lists the failing entries. *mismatches may be NULL. */
AF_API af_status af_nondim_check(const af_plasma_params* params, int* mismatches);

/* ---- meshes -------------------------------------------------------------- */

AF_API af_status af_mesh_create_rect(int nx, int ny, double lx, double ly, int periodic_x, int periodic_y,
                                     double perturb_factor, uint64_t seed, af_mesh** out);
AF_API af_status af_mesh_create_annulus(int nr, int ntheta, double r0, double r1, double perturb_factor,
                                        uint64_t seed, af_mesh** out);
AF_API af_status af_mesh_counts(const af_mesh* mesh, int* vertices, int* cells, int* boundary_facets);
AF_API af_status af_mesh_write_vtk(const af_mesh* mesh, const char* path);
AF_API void af_mesh_free(af_mesh* mesh);

#ifdef __cplusplus
}
#endif

#endif
