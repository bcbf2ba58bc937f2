#pragma once

#include <atomic>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace anisoflux {

class CoefficientError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PlasmaParams {
  double Z = 1.0;
  double ln_lambda = 15.0;
  double m_i = 1.673e-27;     // kg
  double eps0 = 8.854e-12;    // F/m
  double e = 1.6e-19;         // C
  double mu0 = 4e-7 * 3.14159265358979323846;  // N/A^2
  double B0 = 5.42;           // T
  double p0 = 656e3;          // Pa
  double n0 = 1e20;           // m^-3
  double L0 = 2.0;            // m
  double gamma = 5.0 / 3.0;

  static PlasmaParams iter_defaults() { return {}; }
  // Throws CoefficientError naming the first non-positive field.
  void validate() const;
};

struct NondimConstants {
  double T0 = 0;           // J
  double T0_keV = 0;
  double v_A = 0;          // m/s
  double t_A = 0;          // s
  double tau_i0 = 0;       // s
  double omega_i0 = 0;     // 1/s
  double kappa_par0_n0 = 0;   // m^2/s
  double kappa_perp0_n0 = 0;  // m^2/s
  double t_par = 0;        // s
  double t_perp = 0;       // s
  double K_par = 0;
  double K_perp = 0;
};

NondimConstants braginskii_constants(const PlasmaParams& params);

struct EdgeConductivities {
  double kappa_par = 0;
  double kappa_perp = 0;
};

// K_par T_b^{5/2} and K_perp B^{-2} T_b^{-1/2}.
EdgeConductivities edge_conductivities(const NondimConstants& c, double T_b, double B_edge);

// One row of the constants table: name, unit, computed value and the
// published reference value with its number of significant digits.
struct NondimEntry {
  std::string name;
  std::string unit;
  double value = 0;
  double reference = 0;
  int digits = 2;
};

// Reference edge temperature and field used for the edge rows.
inline constexpr double kEdgeTemperature = 4.9e-4;
inline constexpr double kEdgeField = 0.75;

std::vector<NondimEntry> nondim_table(const PlasmaParams& params);

// |value - reference| within half a unit in the last checked digit, where at
// most two significant digits are compared.
bool matches_reference(double value, double reference, int digits);

std::string format_nondim_text(const std::vector<NondimEntry>& table);
std::string format_nondim_csv(const std::vector<NondimEntry>& table);

enum class KappaMode { Constant, BraginskiiLimited };

struct KappaModel {
  KappaMode mode = KappaMode::Constant;
  double K_par = 1.0;
  double K_perp = 0.0;
  double T_l = 0.1;
  double sigma_l = 0.04;

  void validate() const;
  double kappa_par(double T) const;
  // d kappa_par / dT.
  double kappa_par_derivative(double T) const;
  double kappa_perp() const { return K_perp; }
  bool temperature_dependent() const { return mode == KappaMode::BraginskiiLimited; }
};

inline constexpr double kLimiterFloor = 1e-12;

// Soft minimum T_l - σ ln(1 + exp(-(T - T_l)/σ)), evaluated without overflow.
double limiter_f(double T, double T_l, double sigma_l);
double limiter_f_derivative(double T, double T_l, double sigma_l);

// K_par f(T)^{5/2} with f clamped below at kLimiterFloor.
double limited_kappa_par(double T, const KappaModel& model);

// Number of evaluations where f fell below kLimiterFloor (process wide).
std::uint64_t limiter_clamp_count();
void reset_limiter_clamp_count();

}  // namespace anisoflux
