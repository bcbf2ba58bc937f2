// anisoflux command line: run, convergence, nondim.
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <cli11/CLI11.hpp>

#include "anisoflux/anisoflux.h"

namespace {

int exit_code(af_status s) {
  switch (s) {
    case AF_OK: return 0;
    case AF_ERR_CONFIG:
    case AF_ERR_INVALID_ARGUMENT:
    case AF_ERR_IO: return 1;
    case AF_ERR_SOLVER: return 2;
    case AF_ERR_CHECK_FAILED: return 3;
    case AF_ERR_INTERNAL: return 4;
  }
  return 4;
}

int report(af_status s) {
  if (s != AF_OK) std::cerr << "anisoflux: " << af_status_string(s) << ": " << af_last_error() << "\n";
  return exit_code(s);
}

struct Common {
  std::string config;
  std::string output_dir = "output";
  std::optional<std::uint64_t> seed;
  std::optional<int> snapshot_every;
  int threads = 0;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("config", c.config, "case configuration (TOML)")->required();
  sub->add_option("--output-dir,-o", c.output_dir, "directory for manifest and outputs")->capture_default_str();
  sub->add_option("--seed", c.seed, "override case.seed");
  sub->add_option("--snapshot-every", c.snapshot_every, "write a VTK snapshot every N steps (0: never)")
      ->check(CLI::NonNegativeNumber);
  sub->add_option("--threads", c.threads, "assembly worker threads (0: ANISOFLUX_THREADS or all cores)")
      ->check(CLI::NonNegativeNumber);
}

af_status load(const Common& c, af_config** cfg) {
  af_status s = af_config_load(c.config.c_str(), cfg);
  if (s != AF_OK) return s;
  if (c.seed) s = af_config_set_seed(*cfg, *c.seed);
  if (s == AF_OK && c.snapshot_every) s = af_config_set_snapshot_every(*cfg, *c.snapshot_every);
  if (s == AF_OK) s = af_set_threads(c.threads);
  return s;
}

std::string join(int argc, char** argv) {
  std::string out;
  for (int i = 0; i < argc; ++i) {
    if (i) out += ' ';
    out += argv[i];
  }
  return out;
}

int cmd_run(const Common& c, const std::string& restart, const std::string& command) {
  af_config* cfg = nullptr;
  af_status s = load(c, &cfg);
  if (s != AF_OK) return report(s);
  af_run_summary sum{};
  s = af_run(cfg, c.output_dir.c_str(), restart.empty() ? nullptr : restart.c_str(), command.c_str(), &sum);
  af_config_free(cfg);
  if (s != AF_OK) return report(s);
  std::printf("steps %d  t %.6g  T dofs %d  aux dofs %d  factorizations %d  %.2f s\n", sum.steps, sum.t_final,
              sum.t_dofs, sum.z_dofs, sum.factorizations, sum.seconds);
  if (!std::isnan(sum.final_error)) std::printf("final relative L2 error %.6e\n", sum.final_error);
  if (!std::isnan(sum.final_total)) std::printf("final relative total %.6f\n", sum.final_total);
  std::printf("outputs in %s\n", c.output_dir.c_str());
  return 0;
}

int cmd_convergence(const Common& c, const std::string& command) {
  af_config* cfg = nullptr;
  af_status s = load(c, &cfg);
  if (s != AF_OK) return report(s);
  std::vector<af_rate_row> rows(16);
  int count = 0;
  s = af_run_convergence(cfg, c.output_dir.c_str(), command.c_str(), rows.data(), static_cast<int>(rows.size()),
                         &count);
  af_config_free(cfg);
  if (s != AF_OK) return report(s);
  std::printf("%6s %8s %10s %14s %8s\n", "level", "cells", "dofs", "error", "rate");
  for (int i = 0; i < count && i < static_cast<int>(rows.size()); ++i) {
    const auto& r = rows[i];
    std::printf("%6d %8d %10d %14.6e ", r.level, r.cells, r.dofs, r.error);
    if (r.has_rate) std::printf("%8.3f\n", r.rate);
    else std::printf("%8s\n", i == 0 ? "-" : "sat");
  }
  std::printf("rates in %s/rates.csv\n", c.output_dir.c_str());
  return 0;
}

int cmd_nondim(const std::string& params_path, bool iter_defaults, bool check, const std::string& csv_path) {
  af_plasma_params p;
  af_plasma_iter_defaults(&p);
  if (!params_path.empty() && iter_defaults) {
    std::cerr << "anisoflux: give either a params file or --iter-defaults\n";
    return 1;
  }
  if (!params_path.empty()) {
    const af_status s = af_plasma_load(params_path.c_str(), &p);
    if (s != AF_OK) return report(s);
  }
  std::size_t needed = 0;
  af_status s = af_nondim_format(&p, 0, nullptr, 0, &needed);
  if (s != AF_OK) return report(s);
  std::string text(needed, '\0');
  s = af_nondim_format(&p, 0, text.data(), text.size(), &needed);
  if (s != AF_OK) return report(s);
  std::fputs(text.c_str(), stdout);

  if (!csv_path.empty()) {
    s = af_nondim_format(&p, 1, nullptr, 0, &needed);
    std::string csv(needed, '\0');
    if (s == AF_OK) s = af_nondim_format(&p, 1, csv.data(), csv.size(), &needed);
    if (s != AF_OK) return report(s);
    if (csv_path == "-") {
      std::fputs(csv.c_str(), stdout);
    } else {
      std::ofstream out(csv_path);
      out << csv.c_str();
      if (!out) {
        std::cerr << "anisoflux: cannot write " << csv_path << "\n";
        return 1;
      }
    }
  }
  if (check) {
    int bad = 0;
    s = af_nondim_check(&p, &bad);
    if (s == AF_OK) std::printf("check: all entries match the reference values\n");
    else return report(s);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Anisotropic heat conduction solver and benchmark harness"};
  app.set_version_flag("--version", std::string(af_version()));
  app.require_subcommand(1);

  Common run_opts;
  std::string restart;
  auto* run = app.add_subcommand("run", "run a configured case");
  add_common(run, run_opts);
  run->add_option("--restart", restart, "resume from a checkpoint file")->check(CLI::ExistingFile);

  Common conv_opts;
  auto* conv = app.add_subcommand("convergence", "run the refinement study and write rates.csv");
  add_common(conv, conv_opts);

  std::string params_path;
  bool iter_defaults = false;
  bool check = false;
  std::string csv_path;
  auto* nondim = app.add_subcommand("nondim", "print the nondimensionalization constants");
  nondim->add_option("params", params_path, "plasma parameters (TOML)");
  nondim->add_flag("--iter-defaults", iter_defaults, "use the reference parameter block");
  nondim->add_flag("--check", check, "exit nonzero if any constant differs from its reference value");
  nondim->add_option("--csv", csv_path, "also write the table as CSV to this path ('-' for stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  const std::string command = join(argc, argv);
  if (*run) return cmd_run(run_opts, restart, command);
  if (*conv) return cmd_convergence(conv_opts, command);
  return cmd_nondim(params_path, iter_defaults, check, csv_path);
}
