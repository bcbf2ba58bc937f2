#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

struct Result {
  int code = -1;
  std::string out;
};

fs::path work_dir() {
  const fs::path p = fs::temp_directory_path() / "anisoflux_cli";
  fs::create_directories(p);
  return p;
}

Result cli(const std::string& args) {
  const fs::path log = work_dir() / "cli.log";
  const std::string cmd = std::string(ANISOFLUX_CLI) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  Result r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(log);
  std::ostringstream s;
  s << in.rdbuf();
  r.out = s.str();
  return r;
}

fs::path write_config(const std::string& name, const std::string& text) {
  const fs::path p = work_dir() / name;
  std::ofstream(p) << text;
  return p;
}

int count_lines(const fs::path& p) {
  std::ifstream in(p);
  int n = 0;
  for (std::string line; std::getline(in, line);) ++n;
  return n;
}

}  // namespace

TEST(Cli, RunGaussianWritesOutputs) {
  const fs::path cfg = write_config("gaussian.toml", "[case]\nid = \"gaussian\"\n[mesh]\nnx = 8\nny = 8\n");
  const fs::path out = work_dir() / "run_gaussian";
  fs::remove_all(out);
  const Result r = cli("run " + cfg.string() + " -o " + out.string() + " --threads 1");
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_EQ(count_lines(out / "errors.csv"), 402);
  EXPECT_TRUE(fs::exists(out / "manifest.toml"));
  EXPECT_TRUE(fs::exists(out / "checkpoint.txt"));
}

TEST(Cli, SeedAndSnapshotOverrides) {
  const fs::path cfg = write_config("flux.toml", R"([case]
id = "flux_surface"
[mesh]
nx = 10
ny = 8
[schedule]
n_steps = 2
)");
  const fs::path out = work_dir() / "run_flux";
  fs::remove_all(out);
  const Result r = cli("run " + cfg.string() + " -o " + out.string() + " --seed 99 --snapshot-every 1");
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_TRUE(fs::exists(out / "T_000000.vtk"));
  EXPECT_TRUE(fs::exists(out / "T_000002.vtk"));
  std::ifstream in(out / "manifest.toml");
  std::ostringstream s;
  s << in.rdbuf();
  EXPECT_NE(s.str().find("seed = 99"), std::string::npos);
}

TEST(Cli, UnknownKeyExitsOne) {
  const fs::path cfg = write_config("typo.toml", "[kappa]\nkapa_par = 1.0\n");
  const Result r = cli("run " + cfg.string() + " -o " + (work_dir() / "typo").string());
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("kapa_par"), std::string::npos) << r.out;
}

TEST(Cli, SupgWithDiscontinuousAuxExitsOne) {
  const fs::path cfg = write_config("supg_dg.toml", "[discretization]\nmethod = \"supg\"\naux_space = \"dg\"\n");
  EXPECT_EQ(cli("run " + cfg.string()).code, 1);
}

TEST(Cli, MissingConfigAndBadArgumentsExitOne) {
  EXPECT_EQ(cli("run /nonexistent/config.toml").code, 1);
  EXPECT_EQ(cli("").code, 1);
  EXPECT_EQ(cli("frobnicate").code, 1);
}

TEST(Cli, SingleLevelConvergenceExitsOne) {
  const fs::path cfg = write_config("one_level.toml", "[convergence]\nlevels = [1]\n");
  const Result r = cli("convergence " + cfg.string() + " -o " + (work_dir() / "one").string());
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("2 levels"), std::string::npos) << r.out;
}

TEST(Cli, ConvergenceWritesRates) {
  const fs::path cfg = write_config("conv.toml", R"([convergence]
levels = [0, 1, 2]
base_cells = 3
[schedule]
n_steps = 3
)");
  const fs::path out = work_dir() / "conv";
  fs::remove_all(out);
  const Result r = cli("convergence " + cfg.string() + " -o " + out.string());
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_EQ(count_lines(out / "rates.csv"), 4);
}

TEST(Cli, SolverFailureExitsTwo) {
  // A Picard budget of one iteration cannot converge the limited conductivity.
  const fs::path cfg = write_config("picard.toml", R"([case]
id = "annulus_equilibrium"
[mesh]
nr = 4
ntheta = 16
[annulus]
r_mid = 0.6
[schedule]
n_steps = 2
dt0 = 1.0
dt_final = 1.0
n_ramp = 1
[picard]
max_iter = 1
rtol = 1e-14
)");
  const Result r = cli("run " + cfg.string() + " -o " + (work_dir() / "picard").string());
  EXPECT_EQ(r.code, 2) << r.out;
  EXPECT_NE(r.out.find("Picard"), std::string::npos);
}

TEST(Cli, NondimCheckWithReferenceParameters) {
  const Result r = cli("nondim --iter-defaults --check");
  EXPECT_NE(r.out.find("K_par"), std::string::npos);
  EXPECT_EQ(r.code, 0) << r.out;
}

TEST(Cli, NondimInvalidParametersExitOne) {
  const fs::path p = write_config("params.toml", "n0 = 0.0\n");
  EXPECT_EQ(cli("nondim " + p.string()).code, 1);
}

TEST(Cli, NondimCsvAndScaling) {
  const fs::path p = write_config("params_b0.toml", "B0 = 10.84\n");
  const fs::path csv = work_dir() / "nondim.csv";
  const Result r = cli("nondim " + p.string() + " --csv " + csv.string());
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_EQ(count_lines(csv), 11);
  EXPECT_EQ(cli("nondim " + p.string() + " --iter-defaults").code, 1);
}

TEST(Cli, Version) {
  const Result r = cli("--version");
  EXPECT_EQ(r.code, 0);
  EXPECT_FALSE(r.out.empty());
}
