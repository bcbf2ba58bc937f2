#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "core/assembly.hpp"
#include "core/linsolve.hpp"
#include "core/timeloop.hpp"

namespace anisoflux {

enum class CaseId { Gaussian, FluxSurface, Annulus };
const char* case_name(CaseId id);
std::optional<CaseId> parse_case(const std::string& name);

enum class AuxSpace { Default, DG, CG };

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct MeshConfig {
  // rectangle
  int nx = 20;
  int ny = 20;
  double lx = 1.0;
  double ly = 1.0;
  bool periodic_x = false;
  bool periodic_y = false;
  double perturb_factor = 0.0;
  // annulus
  int nr = 16;
  int ntheta = 64;
  double r0 = 0.25;
  double r1 = 1.0;
};

struct DiagnosticsConfig {
  bool errors = true;
  bool totals = false;
  int snapshot_every = 0;    // 0: no VTK snapshots
  int checkpoint_every = 0;  // 0: final checkpoint only
};

struct ConvergenceConfig {
  std::vector<int> levels = {1, 2, 3};
  int base_cells = 10;  // cells per axis = base_cells * 2^level
};

struct CaseConfig {
  CaseId id = CaseId::Gaussian;
  std::uint64_t seed = 0;
  MeshConfig mesh;
  Method method = Method::Supg;
  int degree = 2;
  AuxSpace aux_space = AuxSpace::Default;
  int quad_order = 0;
  LengthScale length_scale = LengthScale::SqrtArea;
  Schedule schedule;
  KappaModel kappa;
  DiagnosticsConfig diagnostics;
  ConvergenceConfig convergence;
  PicardOptions picard;
  SolverOptions solver;
  // Gaussian
  double sigma = 0.2;
  int fourier_terms = 200;
  // flux surface
  double slope = 20.0;
  double background = 0.2;
  double xi0 = 2.5;
  // annulus
  double floor = 0.05;
  double layer_cells = 3.0;  // tanh width in radial cells
  double r_mid = 0.7;

  // Throws ConfigError describing the first violated invariant.
  void validate() const;
};

CaseConfig default_case(CaseId id);

// ---------------------------------------------------------------------------
// Gaussian profile diffused along x: f(y) T_F(x, t).

class GaussianOracle {
 public:
  GaussianOracle(double sigma, int terms, double kappa_par, double kappa_perp);

  double a0() const { return a0_; }
  const std::vector<double>& coefficients() const { return b_; }  // b_1..b_m
  // T_F and ∂²T_F/∂x².
  std::pair<double, double> fourier(double x, double t) const;
  double temperature(Point p, double t) const;
  double source(Point p, double t) const;
  double initial_profile(Point p) const;  // f(y) exp(-(x-0.5)^2/σ^2)
  static double f(double y);
  static double f_second(double y);

 private:
  double sigma_;
  double kappa_par_;
  double kappa_perp_;
  double a0_ = 0.0;
  std::vector<double> b_;
  int id_;
};

// ---------------------------------------------------------------------------
// Field-aligned Gaussian on a doubly periodic box.

struct FluxFrame {
  Point origin;
  Point b;        // unit field direction
  Point normal;   // unit, orthogonal to b
  double xi_unit = 1.0;    // physical length of one ξ unit
  double zeta_unit = 1.0;  // physical length of one ζ_c unit
};

FluxFrame make_flux_frame(double lx, double ly, double slope);
// (ξ, ζ_c) of a physical point, no periodic reduction.
Point coordinate_map_flux(Point x, const FluxFrame& frame);

class FluxSurfaceOracle {
 public:
  FluxSurfaceOracle(double lx, double ly, double slope, double background, double xi0, double kappa_par);
  const FluxFrame& frame() const { return frame_; }
  // Single bump in (ξ, ζ_c) coordinates, without background.
  double bump(double xi, double zeta, double t) const;
  // Background plus all periodic images with tail above 1e-12.
  double temperature(Point x, double t) const;

 private:
  double lx_, ly_, background_, xi0_, kappa_par_;
  FluxFrame frame_;
};

// ---------------------------------------------------------------------------
// Annulus with azimuthal field and a radial tanh profile.

double annulus_profile(double r, double r_mid, double width, double floor);

// (‖T‖₁ − ‖T_bc‖₁) / (‖T_init‖₁ − ‖T_bc‖₁).
double total_temperature_rel(const Field& T, const Field& T_bc, const Field& T_init);

// ---------------------------------------------------------------------------
// Drivers

struct SeriesPoint {
  int step = 0;
  double t = 0.0;
  double value = 0.0;
};

struct RunOptions {
  std::filesystem::path output_dir;   // empty: no files
  std::optional<std::filesystem::path> restart_from;
  bool quiet = true;
};

struct RunResult {
  std::vector<SeriesPoint> errors;
  std::vector<SeriesPoint> totals;
  int steps = 0;
  double t_final = 0.0;
  int t_dofs = 0;
  int z_dofs = 0;
  int factorizations = 0;
  int assemblies = 0;
  double seconds = 0.0;
  std::uint64_t limiter_clamps = 0;
  Eigen::VectorXd T_final;

  double final_error() const { return errors.empty() ? 0.0 : errors.back().value; }
  double final_total() const { return totals.empty() ? 1.0 : totals.back().value; }
};

// Throws ConfigError, SolverError (StepFailure) or std::runtime_error for I/O.
RunResult run_case(const CaseConfig& cfg, const RunOptions& opts = {});

struct RateRow {
  int level = 0;
  int cells = 0;
  int dofs = 0;
  double error = 0.0;
  std::optional<double> rate;  // log2(e_coarse / e_fine); none for the first level
};

inline constexpr double kSaturatedError = 1e-12;
// Pairwise log2 ratios; a coarse error below kSaturatedError yields no rate.
std::vector<RateRow> compute_rates(const std::vector<RateRow>& rows);

std::vector<RateRow> run_convergence_study(const CaseConfig& cfg, const RunOptions& opts = {});
void write_rates_csv(const std::filesystem::path& path, const std::vector<RateRow>& rows);

// Pieces exposed for tests.
std::shared_ptr<const Mesh> build_case_mesh(const CaseConfig& cfg);
Discretization build_case_discretization(const CaseConfig& cfg, std::shared_ptr<const Mesh> mesh);
CoefficientSet build_case_coefficients(const CaseConfig& cfg);

}  // namespace anisoflux
