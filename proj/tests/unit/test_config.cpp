#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "core/config.hpp"

using namespace anisoflux;

namespace {

std::string error_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Config, MissingKeysTakeCaseDefaults) {
  const CaseConfig c = parse_config("[case]\nid = \"flux_surface\"\n");
  const CaseConfig d = default_case(CaseId::FluxSurface);
  EXPECT_EQ(c.mesh.nx, d.mesh.nx);
  EXPECT_EQ(c.schedule.n_ramp, 20);
  EXPECT_EQ(c.kappa.K_par, 10.0);
  EXPECT_TRUE(c.mesh.periodic_x);
}

TEST(Config, OverridesAndIntegerFloats) {
  const CaseConfig c = parse_config(R"([case]
id = "gaussian"
seed = 9
[mesh]
nx = 8
ny = 8
[discretization]
method = "mixed"
degree = 3
[schedule]
dt0 = 1
dt_final = 1
n_steps = 3
[kappa]
kappa_par = 2
kappa_perp = 0.5
)");
  EXPECT_EQ(c.seed, 9u);
  EXPECT_EQ(c.mesh.nx, 8);
  EXPECT_EQ(c.method, Method::Mixed);
  EXPECT_EQ(c.degree, 3);
  EXPECT_EQ(c.schedule.dt0, 1.0);
  EXPECT_EQ(c.kappa.K_par, 2.0);
}

TEST(Config, UnknownKeyIsNamed) {
  const std::string msg = error_of("[kappa]\nkapa_par = 1.0\n");
  EXPECT_NE(msg.find("kappa.kapa_par"), std::string::npos) << msg;
  EXPECT_NE(error_of("[meshh]\nnx = 3\n").find("meshh"), std::string::npos);
}

TEST(Config, TypeAndInvariantErrors) {
  EXPECT_NE(error_of("[mesh]\nnx = \"ten\"\n").find("mesh.nx"), std::string::npos);
  EXPECT_NE(error_of("[discretization]\nmethod = \"supg\"\naux_space = \"dg\"\n").find("supg"), std::string::npos);
  EXPECT_NE(error_of("[discretization]\nmethod = \"fem\"\n").find("fem"), std::string::npos);
  EXPECT_FALSE(error_of("this is = = not toml").empty());
  EXPECT_NE(error_of("[case]\nid = \"torus\"\n").find("torus"), std::string::npos);
}

TEST(Config, FormatParseRoundTrip) {
  for (CaseId id : {CaseId::Gaussian, CaseId::FluxSurface, CaseId::Annulus}) {
    CaseConfig c = default_case(id);
    c.seed = 123456789012345ull;
    c.schedule.dt0 = c.schedule.dt0 / 3.0;
    const std::string text = format_config(c);
    const CaseConfig back = parse_config(text);
    EXPECT_EQ(format_config(back), text) << case_name(id);
    EXPECT_EQ(back.schedule.dt0, c.schedule.dt0);
    EXPECT_EQ(back.seed, c.seed);
  }
}

TEST(Config, ManifestLoadsBackAsConfig) {
  namespace fs = std::filesystem;
  const fs::path p = fs::temp_directory_path() / "anisoflux_unit_manifest.toml";
  const CaseConfig c = default_case(CaseId::Gaussian);
  write_manifest(p, c, "anisoflux run x.toml", "out");
  append_manifest_timing(p, 1.5, 400);
  const CaseConfig back = load_config(p);
  EXPECT_EQ(format_config(back), format_config(c));
  std::ifstream in(p);
  const std::string text((std::istreambuf_iterator<char>(in)), {});
  EXPECT_NE(text.find("[manifest]"), std::string::npos);
  EXPECT_NE(text.find("[timing]"), std::string::npos);
  EXPECT_NE(text.find("anisoflux run x.toml"), std::string::npos);
  fs::remove(p);
  EXPECT_THROW(load_config(p), ConfigError);
}

TEST(PlasmaParams, TopLevelOrTable) {
  const PlasmaParams a = parse_plasma_params("B0 = 10.84\n");
  EXPECT_EQ(a.B0, 10.84);
  EXPECT_EQ(a.n0, 1e20);
  const PlasmaParams b = parse_plasma_params("[plasma]\nn0 = 2e20\n");
  EXPECT_EQ(b.n0, 2e20);
  EXPECT_THROW(parse_plasma_params("B1 = 3\n"), ConfigError);
}
