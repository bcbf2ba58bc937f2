#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "anisoflux/anisoflux.h"

namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("anisoflux_capi_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

int count_lines(const fs::path& p) {
  std::ifstream in(p);
  int n = 0;
  for (std::string line; std::getline(in, line);) ++n;
  return n;
}

af_config* small_gaussian(int steps) {
  af_config* cfg = nullptr;
  EXPECT_EQ(af_config_default("gaussian", &cfg), AF_OK);
  EXPECT_EQ(af_config_set_mesh(cfg, 6, 6), AF_OK);
  EXPECT_EQ(af_config_set_steps(cfg, steps), AF_OK);
  return cfg;
}

}  // namespace

TEST(CApi, VersionAndStatusStrings) {
  EXPECT_STRNE(af_version(), "");
  EXPECT_STREQ(af_status_string(AF_OK), "ok");
  EXPECT_STRNE(af_status_string(AF_ERR_SOLVER), af_status_string(AF_ERR_CONFIG));
}

TEST(CApi, UnknownKeyReportsConfigError) {
  af_config* cfg = nullptr;
  EXPECT_EQ(af_config_parse("[kappa]\nkapa_par = 1.0\n", &cfg), AF_ERR_CONFIG);
  EXPECT_EQ(cfg, nullptr);
  EXPECT_NE(std::string(af_last_error()).find("kapa_par"), std::string::npos);
  ASSERT_EQ(af_config_parse("[case]\nid = \"gaussian\"\n", &cfg), AF_OK);
  EXPECT_STREQ(af_last_error(), "");
  af_config_free(cfg);
}

TEST(CApi, NullAndMissingArguments) {
  EXPECT_EQ(af_config_parse(nullptr, nullptr), AF_ERR_INVALID_ARGUMENT);
  af_config* cfg = nullptr;
  EXPECT_EQ(af_config_load("/nonexistent/anisoflux.toml", &cfg), AF_ERR_IO);
  EXPECT_EQ(af_config_default("torus", &cfg), AF_ERR_CONFIG);
  EXPECT_EQ(af_run(nullptr, nullptr, nullptr, nullptr, nullptr), AF_ERR_INVALID_ARGUMENT);
  cfg = small_gaussian(1);
  EXPECT_EQ(af_config_set_method(cfg, "fem"), AF_ERR_CONFIG);
  EXPECT_EQ(af_run(cfg, nullptr, "/nonexistent/checkpoint.txt", nullptr, nullptr), AF_ERR_IO);
  af_config_free(cfg);
  af_config_free(nullptr);
}

TEST(CApi, SupgWithDiscontinuousAuxIsConfigError) {
  af_config* cfg = nullptr;
  EXPECT_EQ(af_config_parse("[discretization]\nmethod = \"supg\"\naux_space = \"dg\"\n", &cfg), AF_ERR_CONFIG);
}

TEST(CApi, GaussianRunWritesFullSeries) {
  af_config* cfg = nullptr;
  ASSERT_EQ(af_config_default("gaussian", &cfg), AF_OK);
  ASSERT_EQ(af_config_set_mesh(cfg, 8, 8), AF_OK);
  const fs::path dir = scratch("gaussian");
  af_run_summary sum{};
  ASSERT_EQ(af_run(cfg, dir.c_str(), nullptr, "test", &sum), AF_OK) << af_last_error();
  EXPECT_EQ(sum.steps, 400);
  EXPECT_EQ(count_lines(dir / "errors.csv"), 402);  // header + 401 rows
  EXPECT_TRUE(std::isnan(sum.final_total));
  EXPECT_GT(sum.final_error, 0.0);
  EXPECT_EQ(sum.factorizations, 1);
  EXPECT_TRUE(fs::exists(dir / "manifest.toml"));
  EXPECT_NE(slurp(dir / "manifest.toml").find("[timing]"), std::string::npos);
  af_config_free(cfg);
  fs::remove_all(dir);
}

TEST(CApi, RerunFromManifestIsBitwiseIdentical) {
  af_config* cfg = small_gaussian(12);
  ASSERT_EQ(af_config_set_method(cfg, "mixed"), AF_OK);
  ASSERT_EQ(af_config_set_seed(cfg, 5), AF_OK);
  const fs::path a = scratch("repro_a"), b = scratch("repro_b");
  ASSERT_EQ(af_run(cfg, a.c_str(), nullptr, "first", nullptr), AF_OK);
  af_config* again = nullptr;
  ASSERT_EQ(af_config_load((a / "manifest.toml").c_str(), &again), AF_OK) << af_last_error();
  ASSERT_EQ(af_run(again, b.c_str(), nullptr, "second", nullptr), AF_OK);
  for (const char* f : {"errors.csv", "diagnostics.csv", "checkpoint.txt"}) {
    EXPECT_FALSE(slurp(a / f).empty());
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  }
  af_config_free(cfg);
  af_config_free(again);
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(CApi, RestartFromCheckpoint) {
  af_config* cfg = small_gaussian(6);
  const fs::path a = scratch("restart_a"), b = scratch("restart_b");
  ASSERT_EQ(af_run(cfg, a.c_str(), nullptr, nullptr, nullptr), AF_OK);
  af_config_set_steps(cfg, 9);
  af_run_summary sum{};
  ASSERT_EQ(af_run(cfg, b.c_str(), (a / "checkpoint.txt").c_str(), nullptr, &sum), AF_OK);
  EXPECT_EQ(sum.steps, 9);
  EXPECT_EQ(count_lines(b / "errors.csv"), 5);  // header + steps 6..9
  af_config_free(cfg);
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(CApi, ConvergenceNeedsTwoLevels) {
  af_config* cfg = nullptr;
  ASSERT_EQ(af_config_parse("[convergence]\nlevels = [1]\n", &cfg), AF_OK);
  int count = -1;
  EXPECT_EQ(af_run_convergence(cfg, nullptr, nullptr, nullptr, 0, &count), AF_ERR_CONFIG);
  af_config_free(cfg);
}

TEST(CApi, ConvergenceRows) {
  af_config* cfg = nullptr;
  ASSERT_EQ(af_config_parse(R"([convergence]
levels = [0, 1, 2]
base_cells = 3
[schedule]
n_steps = 4
)", &cfg), AF_OK);
  const fs::path dir = scratch("conv");
  af_rate_row rows[2];
  int count = 0;
  ASSERT_EQ(af_run_convergence(cfg, dir.c_str(), nullptr, rows, 2, &count), AF_OK) << af_last_error();
  EXPECT_EQ(count, 3);
  EXPECT_EQ(rows[0].has_rate, 0);
  EXPECT_EQ(rows[1].has_rate, 1);
  EXPECT_EQ(rows[1].cells, 6);
  EXPECT_GT(rows[1].rate, 1.0);
  EXPECT_EQ(count_lines(dir / "rates.csv"), 4);
  af_config_free(cfg);
  fs::remove_all(dir);
}

TEST(CApi, NondimConstantsAndCheck) {
  af_plasma_params p;
  af_plasma_iter_defaults(&p);
  af_nondim c;
  ASSERT_EQ(af_nondim_compute(&p, &c), AF_OK);
  EXPECT_NEAR(c.K_par, 8.8e3, 50.0);
  double kpar = 0, kperp = 0;
  ASSERT_EQ(af_edge_conductivities(&c, 4.9e-4, 0.75, &kpar, &kperp), AF_OK);
  EXPECT_NEAR(kpar, 4.7e-5, 0.05e-5);
  int bad = 0;
  EXPECT_EQ(af_nondim_check(&p, &bad), AF_ERR_CHECK_FAILED);
  EXPECT_EQ(bad, 1);
  EXPECT_NE(std::string(af_last_error()).find("t_A"), std::string::npos);

  size_t needed = 0;
  ASSERT_EQ(af_nondim_format(&p, 1, nullptr, 0, &needed), AF_OK);
  std::string buf(needed, '\0');
  ASSERT_EQ(af_nondim_format(&p, 1, buf.data(), buf.size(), &needed), AF_OK);
  EXPECT_EQ(std::string(buf.c_str()).size() + 1, needed);
  EXPECT_EQ(af_nondim_format(&p, 1, buf.data(), 3, &needed), AF_ERR_INVALID_ARGUMENT);

  p.n0 = 0.0;
  EXPECT_EQ(af_nondim_compute(&p, &c), AF_ERR_CONFIG);
}

TEST(CApi, MeshCounts) {
  af_mesh* m = nullptr;
  ASSERT_EQ(af_mesh_create_rect(120, 96, 5.0, 4.0, 1, 1, 0.1, 7, &m), AF_OK);
  int v = 0, c = 0, f = -1;
  ASSERT_EQ(af_mesh_counts(m, &v, &c, &f), AF_OK);
  EXPECT_EQ(v, 11520);
  EXPECT_EQ(c, 11520);
  EXPECT_EQ(f, 0);
  af_mesh_free(m);
  ASSERT_EQ(af_mesh_create_annulus(2, 16, 0.5, 1.0, 0.0, 0, &m), AF_OK);
  ASSERT_EQ(af_mesh_counts(m, &v, &c, &f), AF_OK);
  EXPECT_EQ(c, 32);
  EXPECT_EQ(f, 32);
  const fs::path p = scratch("mesh.vtk");
  EXPECT_EQ(af_mesh_write_vtk(m, p.c_str()), AF_OK);
  EXPECT_TRUE(fs::exists(p));
  EXPECT_EQ(af_mesh_write_vtk(m, "/nonexistent/dir/mesh.vtk"), AF_ERR_IO);
  af_mesh_free(m);
  fs::remove(p);
  EXPECT_EQ(af_mesh_create_annulus(2, 4, 0.5, 1.0, 0.0, 0, &m), AF_ERR_INVALID_ARGUMENT);
  EXPECT_EQ(m, nullptr);
}

TEST(CApi, ConfigWriteRoundTrip) {
  af_config* cfg = nullptr;
  ASSERT_EQ(af_config_default("annulus_equilibrium", &cfg), AF_OK);
  const fs::path p = scratch("cfg.toml");
  ASSERT_EQ(af_config_write(cfg, p.c_str()), AF_OK);
  af_config* back = nullptr;
  ASSERT_EQ(af_config_load(p.c_str(), &back), AF_OK);
  const fs::path q = scratch("cfg2.toml");
  ASSERT_EQ(af_config_write(back, q.c_str()), AF_OK);
  EXPECT_EQ(slurp(p), slurp(q));
  af_config_free(cfg);
  af_config_free(back);
  fs::remove(p);
  fs::remove(q);
}
