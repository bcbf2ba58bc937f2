#include "core/timeloop.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

namespace anisoflux {

void Schedule::validate() const {
  if (!(dt0 > 0.0) || !(dt_final > 0.0)) throw AssemblyError("schedule time steps must be positive");
  if (dt0 > dt_final) throw AssemblyError("schedule dt0 must not exceed dt_final");
  if (n_ramp < 1) throw AssemblyError("schedule n_ramp must be >= 1");
  if (n_steps < 0) throw AssemblyError("schedule n_steps must be >= 0");
  if (n_steps == 0 && !(t_max >= 0.0)) throw AssemblyError("schedule t_max must be >= 0");
}

double Schedule::dt(int step) const {
  if (n_ramp <= 1) return step == 0 ? dt0 : dt_final;
  if (step >= n_ramp - 1) return dt_final;
  return dt0 + (dt_final - dt0) * step / (n_ramp - 1);
}

std::vector<double> ramp_schedule(double dt0, double dt_final, int n_ramp) {
  if (n_ramp < 1) throw AssemblyError("n_ramp must be >= 1");
  std::vector<double> out(n_ramp);
  if (n_ramp == 1) {
    out[0] = dt0;
    return out;
  }
  for (int j = 0; j < n_ramp; ++j) out[j] = dt0 + (dt_final - dt0) * j / (n_ramp - 1);
  return out;
}

StepFailure::StepFailure(int step, double t, const std::string& what)
    : SolverError("step " + std::to_string(step) + " (t = " + std::to_string(t) + "): " + what),
      step_(step),
      t_(t) {}

MidpointStepper::MidpointStepper(StepperConfig cfg) : cfg_(std::move(cfg)), solver_(cfg_.solver) {
  cfg_.disc.validate();
  if (cfg_.boundary.size() == 0) cfg_.boundary = Eigen::VectorXd::Zero(cfg_.disc.t_space->num_dofs());
  if (cfg_.boundary.size() != cfg_.disc.t_space->num_dofs())
    throw AssemblyError("boundary vector length does not match the temperature space");
  cfg_.picard.linear = !cfg_.coeffs.kappa.temperature_dependent();
}

BlockSystem MidpointStepper::build(const Eigen::VectorXd& T_lag, const Eigen::VectorXd& T_old, double dt,
                                   double t_mid) {
  ScalarFunction src;
  if (cfg_.source) src = [this, t_mid](Point x) { return cfg_.source(x, t_mid); };
  const bool cacheable = cfg_.reuse_operator && cfg_.picard.linear;
  if (cacheable && cached_ && cached_dt_ == dt) {
    const Eigen::VectorXd load = assemble_load(cfg_.disc, cfg_.coeffs, T_lag, dt, src);
    BlockSystem sys = *cached_;
    update_rhs(sys, T_old, load);
    return sys;
  }
  SystemInputs in;
  in.T_lag = &T_lag;
  in.T_old = &T_old;
  in.boundary = &cfg_.boundary;
  in.source = src;
  in.dt = dt;
  in.mass_scale = 2.0 / dt;
  BlockSystem sys = assemble_system(cfg_.disc, cfg_.coeffs, in);
  ++assemblies_;
  if (cacheable) {
    cached_ = sys;
    cached_dt_ = dt;
  }
  return sys;
}

SolveReport MidpointStepper::step(TransientState& state, double dt) {
  if (!(dt > 0.0)) throw StepFailure(state.step + 1, state.t, "time step must be positive");
  const Eigen::VectorXd T_old = state.T;
  const double t_mid = state.t + 0.5 * dt;
  SolveReport report;
  BlockSolution half;
  try {
    half = solve_picard([&](const Eigen::VectorXd& T_lag) { return build(T_lag, T_old, dt, t_mid); },
                        T_old, cfg_.picard, solver_, report);
  } catch (const std::exception& e) {
    throw StepFailure(state.step + 1, state.t, e.what());
  }
  if (!report.converged) {
    std::ostringstream msg;
    msg << "Picard iteration did not converge in " << report.iterations << " iterations; increments:";
    for (double h : report.history) msg << ' ' << h;
    throw StepFailure(state.step + 1, state.t, msg.str());
  }
  state.T = 2.0 * half.T - T_old;
  for (int d : cfg_.disc.t_space->boundary_dofs()) state.T[d] = cfg_.boundary[d];
  state.z = std::move(half.z);
  state.t += dt;
  state.step += 1;
  return report;
}

bool schedule_done(const Schedule& schedule, const TransientState& state) {
  if (schedule.n_steps > 0) return state.step >= schedule.n_steps;
  const double dt = schedule.dt(state.step);
  return !(state.t < schedule.t_max - 1e-9 * dt);
}

void run_transient(MidpointStepper& stepper, TransientState& state, const Schedule& schedule,
                   const StepObserver& observer, bool observe_initial) {
  schedule.validate();
  if (observe_initial && observer) observer(state, 0.0, nullptr);
  while (!schedule_done(schedule, state)) {
    const double dt = schedule.dt(state.step);
    const SolveReport rep = stepper.step(state, dt);
    if (observer) observer(state, dt, &rep);
  }
}

namespace {

std::string hex(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

double parse_hex(const std::string& s) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str()) throw std::runtime_error("checkpoint: bad number '" + s + "'");
  return v;
}

}  // namespace

void write_checkpoint(const std::filesystem::path& path, const TransientState& state) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
  out << "anisoflux-checkpoint 1\n";
  out << "step " << state.step << '\n';
  out << "t " << hex(state.t) << '\n';
  out << "n_T " << state.T.size() << '\n';
  out << "n_z " << state.z.size() << '\n';
  for (Eigen::Index i = 0; i < state.T.size(); ++i) out << hex(state.T[i]) << '\n';
  for (Eigen::Index i = 0; i < state.z.size(); ++i) out << hex(state.z[i]) << '\n';
  if (!out) throw std::runtime_error("failed writing checkpoint " + path.string());
}

TransientState read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read checkpoint " + path.string());
  std::string magic, key, val;
  int version = 0;
  in >> magic >> version;
  if (magic != "anisoflux-checkpoint" || version != 1)
    throw std::runtime_error("not a checkpoint file: " + path.string());
  TransientState s;
  long nT = 0, nz = 0;
  in >> key >> s.step;
  if (key != "step") throw std::runtime_error("checkpoint: expected step");
  in >> key >> val;
  if (key != "t") throw std::runtime_error("checkpoint: expected t");
  s.t = parse_hex(val);
  in >> key >> nT;
  if (key != "n_T") throw std::runtime_error("checkpoint: expected n_T");
  in >> key >> nz;
  if (key != "n_z") throw std::runtime_error("checkpoint: expected n_z");
  s.T.resize(nT);
  s.z.resize(nz);
  for (long i = 0; i < nT; ++i) {
    if (!(in >> val)) throw std::runtime_error("checkpoint truncated");
    s.T[i] = parse_hex(val);
  }
  for (long i = 0; i < nz; ++i) {
    if (!(in >> val)) throw std::runtime_error("checkpoint truncated");
    s.z[i] = parse_hex(val);
  }
  return s;
}

}  // namespace anisoflux
