#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numbers>

#include "core/cases.hpp"
#include "core/output.hpp"

using namespace anisoflux;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("anisoflux_unit_" + name);
  fs::remove_all(p);
  return p;
}

// Crank-Nicolson for u_t = κ u_xx on [0, 1] with fixed end values.
std::vector<double> heat_fd(const std::vector<double>& u0, double kappa, double dt, int steps) {
  const int n = static_cast<int>(u0.size());
  const double h = 1.0 / (n - 1);
  const double r = kappa * dt / (2 * h * h);
  std::vector<double> u = u0, rhs(n), c(n), d(n);
  for (int s = 0; s < steps; ++s) {
    rhs[0] = u[0];
    rhs[n - 1] = u[n - 1];
    for (int i = 1; i < n - 1; ++i) rhs[i] = r * u[i - 1] + (1 - 2 * r) * u[i] + r * u[i + 1];
    // Thomas algorithm, identity rows at the ends.
    c[0] = 0;
    d[0] = rhs[0];
    for (int i = 1; i < n; ++i) {
      const bool end = i == n - 1;
      const double a = end ? 0 : -r, b = end ? 1 : 1 + 2 * r, cc = end ? 0 : -r;
      const double m = b - a * c[i - 1];
      c[i] = cc / m;
      d[i] = (rhs[i] - a * d[i - 1]) / m;
    }
    u[n - 1] = d[n - 1];
    for (int i = n - 2; i >= 0; --i) u[i] = d[i] - c[i] * u[i + 1];
  }
  return u;
}

CaseConfig small_gaussian() {
  CaseConfig c = default_case(CaseId::Gaussian);
  c.mesh.nx = c.mesh.ny = 6;
  c.schedule.n_steps = 10;
  return c;
}

}  // namespace

TEST(GaussianOracle, VanishesOnBottomEdge) {
  const GaussianOracle o(0.2, 200, 1.0, 0.01);
  for (double x : {0.0, 0.3, 0.5, 0.9}) EXPECT_EQ(o.temperature({x, 0.0}, 1e-3), 0.0);
}

TEST(GaussianOracle, PartialSumReproducesInitialProfile) {
  const GaussianOracle o(0.2, 4000, 1.0, 0.01);
  for (double x = 0.05; x < 0.96; x += 0.05)
    for (double y : {0.25, 0.5, 0.8})
      EXPECT_NEAR(o.temperature({x, y}, 0.0), o.initial_profile({x, y}), 1e-10) << x;
  const GaussianOracle coarse(0.2, 200, 1.0, 0.01);
  EXPECT_NEAR(coarse.temperature({0.4, 0.5}, 0.0), coarse.initial_profile({0.4, 0.5}), 1e-7);
}

TEST(GaussianOracle, MatchesFiniteDifferenceHeatSolution) {
  const double kpar = 1.0, kperp = 0.01;
  const GaussianOracle o(0.2, 400, kpar, kperp);
  const int n = 4001;
  std::vector<double> u0(n);
  for (int i = 0; i < n; ++i) u0[i] = o.fourier(double(i) / (n - 1), 0.0).first;
  const double t = 4e-3;
  const auto u = heat_fd(u0, kpar - kperp, 1e-7, static_cast<int>(std::lround(t / 1e-7)));
  for (int i = 200; i < n; i += 400) EXPECT_NEAR(o.fourier(double(i) / (n - 1), t).first, u[i], 1e-6) << i;
}

TEST(GaussianOracle, SourceIsMinusPerpLaplacian) {
  const GaussianOracle o(0.2, 400, 1.0, 0.01);
  const double h = 1e-4, t = 2e-3;
  for (Point p : {Point{0.3, 0.4}, Point{0.5, 0.5}, Point{0.62, 0.13}}) {
    auto T = [&](double x, double y) { return o.temperature({x, y}, t); };
    const double lap = (T(p.x + h, p.y) + T(p.x - h, p.y) + T(p.x, p.y + h) + T(p.x, p.y - h) - 4 * T(p.x, p.y)) / (h * h);
    const double s = o.source(p, t);
    EXPECT_NEAR(s, -0.01 * lap, 1e-5 * std::abs(s));
  }
  const GaussianOracle none(0.2, 50, 1.0, 0.0);
  EXPECT_EQ(none.source({0.3, 0.3}, 0.0), 0.0);
  // y = 1/2: f = 1, f'' = -2π²
  EXPECT_DOUBLE_EQ(GaussianOracle::f(0.5), 1.0);
  EXPECT_NEAR(GaussianOracle::f_second(0.5), -2 * std::numbers::pi * std::numbers::pi, 1e-12);
  const auto [tf, tfxx] = o.fourier(0.3, t);
  EXPECT_NEAR(o.source({0.3, 0.5}, t), -0.01 * (GaussianOracle::f_second(0.5) * tf + tfxx), 1e-12);
}

TEST(FluxFrame, XyOriginMapsToCorner) {
  const FluxFrame fr = make_flux_frame(5.0, 4.0, 20.0);
  const Point c = coordinate_map_flux({0.0, 0.0}, fr);
  EXPECT_NEAR(c.x, -2.0, 1e-14);
  EXPECT_NEAR(c.y, -1.0, 1e-14);
  EXPECT_NEAR(dot(fr.b, fr.normal), 0.0, 1e-15);
  EXPECT_NEAR(dot(fr.b, fr.b), 1.0, 1e-15);
  const Point o = coordinate_map_flux(fr.origin, fr);
  EXPECT_NEAR(o.x, 0.0, 1e-15);
  EXPECT_NEAR(o.y, 0.0, 1e-15);
}

TEST(FluxSurfaceOracle, PeriodicAndRelaxesToBackground) {
  const FluxSurfaceOracle o(5.0, 4.0, 20.0, 0.2, 2.5, 10.0);
  for (Point p : {Point{0.2, 0.3}, Point{2.5, 2.0}, Point{4.9, 3.1}}) {
    EXPECT_NEAR(o.temperature(p, 1.0), o.temperature({p.x + 5.0, p.y}, 1.0), 1e-12);
    EXPECT_NEAR(o.temperature(p, 1.0), o.temperature({p.x, p.y - 4.0}, 1.0), 1e-12);
    EXPECT_GE(o.temperature(p, 0.0), 0.2);
  }
  EXPECT_NEAR(o.temperature(o.frame().origin, 0.0), 1.2, 1e-9);
  EXPECT_EQ(o.bump(0.0, 1.0, 0.0), 0.0);
  EXPECT_LT(o.bump(0.0, 0.0, 1e12), 1e-5);
}

TEST(Annulus, ProfileAndTotals) {
  EXPECT_NEAR(annulus_profile(0.7, 0.7, 0.1, 0.05), 0.525, 1e-15);
  EXPECT_NEAR(annulus_profile(10.0, 0.7, 0.1, 0.05), 0.05, 1e-12);
  EXPECT_NEAR(annulus_profile(-10.0, 0.7, 0.1, 0.05), 1.0, 1e-12);
  auto m = std::make_shared<const Mesh>(build_annulus_mesh(4, 16, 0.25, 1.0));
  auto s = build_space(m, Family::Lagrange, 2);
  const Field init = interpolate([](Point p) { return annulus_profile(std::hypot(p.x, p.y), 0.6, 0.1, 0.05); }, s);
  const Field bc = interpolate([](Point) { return 0.05; }, s);
  EXPECT_NEAR(total_temperature_rel(init, bc, init), 1.0, 1e-15);
  EXPECT_NEAR(total_temperature_rel(bc, bc, init), 0.0, 1e-15);
  EXPECT_THROW(total_temperature_rel(init, bc, bc), SpaceError);
}

TEST(Rates, PairwiseAndSaturated) {
  std::vector<RateRow> rows(4);
  rows[0].error = 8e-3;
  rows[1].error = 1e-3;
  rows[2].error = 1e-13;
  rows[3].error = 5e-14;
  const auto r = compute_rates(rows);
  EXPECT_FALSE(r[0].rate.has_value());
  EXPECT_NEAR(*r[1].rate, 3.0, 1e-12);
  ASSERT_TRUE(r[2].rate.has_value());
  EXPECT_FALSE(r[3].rate.has_value());
}

TEST(Rates, CsvHasHeaderAndRateRows) {
  const fs::path dir = scratch("rates");
  fs::create_directories(dir);
  std::vector<RateRow> rows(3);
  rows[0] = {1, 20, 100, 1e-3, std::nullopt};
  rows[1] = {2, 40, 400, 1.25e-4, 3.0};
  rows[2] = {3, 80, 1600, 1e-13, std::nullopt};
  write_rates_csv(dir / "rates.csv", rows);
  const auto csv = read_csv_rows(dir / "rates.csv");
  ASSERT_EQ(csv.size(), 3u);
  EXPECT_EQ(csv[0][3], "");
  EXPECT_EQ(csv[1][3], "3");
  EXPECT_EQ(csv[2][3], "saturated");
  fs::remove_all(dir);
}

TEST(CaseConfig, DefaultsValidate) {
  for (CaseId id : {CaseId::Gaussian, CaseId::FluxSurface, CaseId::Annulus}) {
    EXPECT_NO_THROW(default_case(id).validate()) << case_name(id);
    EXPECT_EQ(parse_case(case_name(id)), id);
  }
  EXPECT_FALSE(parse_case("torus").has_value());
}

TEST(CaseConfig, InvariantViolations) {
  CaseConfig c = default_case(CaseId::Gaussian);
  c.aux_space = AuxSpace::DG;
  EXPECT_THROW(c.validate(), ConfigError);
  c = default_case(CaseId::Gaussian);
  c.degree = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = default_case(CaseId::FluxSurface);
  c.kappa.K_perp = 1e-3;
  EXPECT_THROW(c.validate(), ConfigError);
  c = default_case(CaseId::Annulus);
  c.r_mid = 2.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = default_case(CaseId::Gaussian);
  c.schedule.dt0 = -1;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(CaseDiscretization, AuxiliarySpaces) {
  CaseConfig c = small_gaussian();
  auto mesh = build_case_mesh(c);
  c.method = Method::Mixed;
  Discretization d = build_case_discretization(c, mesh);
  EXPECT_FALSE(d.z_space->continuous());
  EXPECT_EQ(d.z_space->element().degree(), 1);
  c.aux_space = AuxSpace::CG;
  d = build_case_discretization(c, mesh);
  EXPECT_TRUE(d.z_space->continuous());
  c.method = Method::Supg;
  c.aux_space = AuxSpace::Default;
  d = build_case_discretization(c, mesh);
  EXPECT_TRUE(d.z_space->continuous());
  EXPECT_EQ(d.z_space->element().degree(), 2);
  c.method = Method::Primal;
  EXPECT_EQ(build_case_discretization(c, mesh).z_space, nullptr);
}

TEST(RunCase, SeriesIncludesInitialRow) {
  const RunResult r = run_case(small_gaussian());
  EXPECT_EQ(r.steps, 10);
  ASSERT_EQ(r.errors.size(), 11u);
  EXPECT_EQ(r.errors.front().t, 0.0);
  EXPECT_LT(r.errors.front().value, 5e-2);
  EXPECT_NEAR(r.t_final, 1e-4, 1e-15);
  EXPECT_EQ(r.factorizations, 1);
}

TEST(RunCase, ZeroStepsGiveInitialDiagnosticsOnly) {
  CaseConfig c = small_gaussian();
  c.schedule.n_steps = 0;
  c.schedule.t_max = 0.0;
  const RunResult r = run_case(c);
  EXPECT_EQ(r.steps, 0);
  EXPECT_EQ(r.errors.size(), 1u);
}

TEST(RunCase, RestartMatchesContinuousRun) {
  for (Method m : {Method::Primal, Method::Supg}) {
    CaseConfig c = small_gaussian();
    c.method = m;
    c.diagnostics.checkpoint_every = 4;
    const fs::path dir = scratch("restart");
    RunOptions o;
    o.output_dir = dir;
    const RunResult full = run_case(c, o);
    RunOptions r;
    r.restart_from = dir / "checkpoint_000004.txt";
    const RunResult resumed = run_case(c, r);
    EXPECT_EQ(resumed.steps, 10);
    EXPECT_EQ(resumed.errors.front().step, 4);
    EXPECT_EQ(resumed.T_final, full.T_final) << method_name(m);
    fs::remove_all(dir);
  }
}

TEST(RunCase, OutputsAreReproducible) {
  CaseConfig c = small_gaussian();
  c.diagnostics.totals = true;
  const fs::path a = scratch("repro_a"), b = scratch("repro_b");
  run_case(c, {a, std::nullopt, true});
  run_case(c, {b, std::nullopt, true});
  for (const char* f : {"errors.csv", "totals.csv", "checkpoint.txt"}) {
    std::ifstream fa(a / f), fb(b / f);
    const std::string sa((std::istreambuf_iterator<char>(fa)), {}), sb((std::istreambuf_iterator<char>(fb)), {});
    EXPECT_FALSE(sa.empty());
    EXPECT_EQ(sa, sb) << f;
  }
  EXPECT_EQ(read_csv_rows(a / "errors.csv").size(), 11u);
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(RunCase, AnnulusStartsAtUnitTotal) {
  CaseConfig c = default_case(CaseId::Annulus);
  c.mesh.nr = 4;
  c.mesh.ntheta = 16;
  c.r_mid = 0.6;
  c.method = Method::Mixed;
  c.schedule.n_steps = 2;
  const RunResult r = run_case(c);
  ASSERT_EQ(r.totals.size(), 3u);
  EXPECT_EQ(r.totals.front().value, 1.0);
  EXPECT_NEAR(r.totals.back().value, 1.0, 1e-3);
}

TEST(Convergence, NeedsTwoLevels) {
  CaseConfig c = small_gaussian();
  c.convergence.levels = {1};
  EXPECT_THROW(run_convergence_study(c), ConfigError);
}

TEST(FormatDouble, ShortestRoundTrip) {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, 6.02214076e23, -2.5, 0.0}) EXPECT_EQ(std::stod(format_double(v)), v);
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(format_double(3.0), "3");
}
