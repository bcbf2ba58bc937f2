#include "core/coeffs.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>

#include "core/output.hpp"

namespace anisoflux {

namespace {

std::atomic<std::uint64_t> g_clamp_count{0};

void require_positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v))
    throw CoefficientError(std::string("plasma parameter ") + name + " must be positive and finite");
}

double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace

void PlasmaParams::validate() const {
  require_positive(Z, "Z");
  require_positive(ln_lambda, "ln_lambda");
  require_positive(m_i, "m_i");
  require_positive(eps0, "eps0");
  require_positive(e, "e");
  require_positive(mu0, "mu0");
  require_positive(B0, "B0");
  require_positive(p0, "p0");
  require_positive(n0, "n0");
  require_positive(L0, "L0");
  if (!(gamma > 1.0)) throw CoefficientError("plasma parameter gamma must exceed 1");
}

NondimConstants braginskii_constants(const PlasmaParams& p) {
  p.validate();
  constexpr double pi = std::numbers::pi;
  NondimConstants c;
  c.T0 = p.p0 / ((1.0 + p.Z) * p.n0);
  c.T0_keV = c.T0 / p.e / 1e3;
  c.v_A = p.B0 / std::sqrt(p.mu0 * p.n0 * p.m_i);
  c.t_A = p.L0 / c.v_A;
  c.tau_i0 = 12.0 * std::pow(pi, 1.5) * p.eps0 * p.eps0 * std::sqrt(p.m_i) * std::pow(c.T0, 1.5) /
             (p.n0 * std::pow(p.Z, 4) * std::pow(p.e, 4) * p.ln_lambda);
  c.omega_i0 = p.Z * p.e * p.B0 / p.m_i;
  c.kappa_par0_n0 = 3.9 * c.T0 * c.tau_i0 / p.m_i;
  c.kappa_perp0_n0 = 2.0 * c.T0 / (p.m_i * c.omega_i0 * c.omega_i0 * c.tau_i0);
  c.t_par = p.L0 * p.L0 / c.kappa_par0_n0;
  c.t_perp = p.L0 * p.L0 / c.kappa_perp0_n0;
  c.K_par = (p.gamma - 1.0) * c.t_A / c.t_par;
  c.K_perp = (p.gamma - 1.0) * c.t_A / c.t_perp;
  return c;
}

EdgeConductivities edge_conductivities(const NondimConstants& c, double T_b, double B_edge) {
  if (!(T_b > 0.0)) throw CoefficientError("edge temperature must be positive");
  if (!(B_edge > 0.0)) throw CoefficientError("edge field magnitude must be positive");
  return {c.K_par * std::pow(T_b, 2.5), c.K_perp / (B_edge * B_edge) / std::sqrt(T_b)};
}

std::vector<NondimEntry> nondim_table(const PlasmaParams& params) {
  const NondimConstants c = braginskii_constants(params);
  const EdgeConductivities edge = edge_conductivities(c, kEdgeTemperature, kEdgeField);
  return {
      {"T0", "J", c.T0, 3.28e-15, 3},
      {"t_A", "s", c.t_A, 1.83e-7, 3},
      {"tau_i0", "s", c.tau_i0, 4.1e-2, 2},
      {"omega_i0", "1/s", c.omega_i0, 5.2e8, 2},
      {"kappa_par0/n0", "m^2/s", c.kappa_par0_n0, 3.13e11, 3},
      {"kappa_perp0/n0", "m^2/s", c.kappa_perp0_n0, 3.56e-4, 3},
      {"K_par", "1", c.K_par, 8.8e3, 2},
      {"K_perp", "1", c.K_perp, 1e-11, 1},
      {"kappa_par_edge", "1", edge.kappa_par, 4.7e-5, 2},
      {"kappa_perp_edge", "1", edge.kappa_perp, 8e-10, 1},
  };
}

bool matches_reference(double value, double reference, int digits) {
  if (reference == 0.0) return value == 0.0;
  const int sig = std::min(digits, 2);
  const double exponent = std::floor(std::log10(std::abs(reference)));
  const double tol = 0.5 * std::pow(10.0, exponent - sig + 1);
  return std::abs(value - reference) <= tol * (1.0 + 1e-12);
}

std::string format_nondim_text(const std::vector<NondimEntry>& table) {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof line, "%-16s %-7s %-13s %-10s %s\n", "quantity", "unit", "computed",
                "reference", "match");
  out << line;
  for (const auto& e : table) {
    std::snprintf(line, sizeof line, "%-16s %-7s %-13.4e %-10.3g %s\n", e.name.c_str(), e.unit.c_str(),
                  e.value, e.reference, matches_reference(e.value, e.reference, e.digits) ? "yes" : "NO");
    out << line;
  }
  return out.str();
}

std::string format_nondim_csv(const std::vector<NondimEntry>& table) {
  std::ostringstream out;
  out << "quantity,unit,computed,reference,match\n";
  for (const auto& e : table)
    out << e.name << ',' << e.unit << ',' << format_double(e.value) << ',' << format_double(e.reference)
        << ',' << (matches_reference(e.value, e.reference, e.digits) ? 1 : 0) << '\n';
  return out.str();
}

void KappaModel::validate() const {
  if (!(K_par >= 0.0) || !std::isfinite(K_par)) throw CoefficientError("kappa K_par must be >= 0");
  if (!(K_perp >= 0.0) || !std::isfinite(K_perp)) throw CoefficientError("kappa K_perp must be >= 0");
  if (mode == KappaMode::BraginskiiLimited) {
    if (!(sigma_l > 0.0)) throw CoefficientError("kappa sigma_l must be > 0 in limited mode");
    if (!std::isfinite(T_l)) throw CoefficientError("kappa T_l must be finite");
  } else if (K_par < K_perp) {
    throw CoefficientError("kappa K_par must be >= K_perp");
  }
}

double limiter_f(double T, double T_l, double sigma_l) {
  return T_l - sigma_l * softplus(-(T - T_l) / sigma_l);
}

double limiter_f_derivative(double T, double T_l, double sigma_l) {
  return sigmoid(-(T - T_l) / sigma_l);
}

double limited_kappa_par(double T, const KappaModel& model) {
  double f = limiter_f(T, model.T_l, model.sigma_l);
  if (!(f >= kLimiterFloor)) {
    g_clamp_count.fetch_add(1, std::memory_order_relaxed);
    f = kLimiterFloor;
  }
  return model.K_par * f * f * std::sqrt(f);
}

double KappaModel::kappa_par(double T) const {
  return mode == KappaMode::Constant ? K_par : limited_kappa_par(T, *this);
}

double KappaModel::kappa_par_derivative(double T) const {
  if (mode == KappaMode::Constant) return 0.0;
  const double f = limiter_f(T, T_l, sigma_l);
  if (!(f >= kLimiterFloor)) return 0.0;
  return 2.5 * K_par * f * std::sqrt(f) * limiter_f_derivative(T, T_l, sigma_l);
}

std::uint64_t limiter_clamp_count() { return g_clamp_count.load(); }
void reset_limiter_clamp_count() { g_clamp_count.store(0); }

}  // namespace anisoflux
