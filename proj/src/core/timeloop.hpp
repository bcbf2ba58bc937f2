#pragma once

#include <Eigen/Core>

#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

#include "core/assembly.hpp"
#include "core/linsolve.hpp"

namespace anisoflux {

struct Schedule {
  double dt0 = 0.1;
  double dt_final = 0.1;
  int n_ramp = 1;
  double t_max = 1.0;
  int n_steps = 0;  // > 0: fixed step count, t_max ignored

  void validate() const;
  double dt(int step) const;
};

// dt_j = dt0 + (dt_final - dt0) j / (n_ramp - 1), j = 0..n_ramp-1.
std::vector<double> ramp_schedule(double dt0, double dt_final, int n_ramp);

struct TransientState {
  double t = 0.0;
  int step = 0;
  Eigen::VectorXd T;
  Eigen::VectorXd z;
};

using SpaceTimeFunction = std::function<double(Point, double)>;

struct StepperConfig {
  Discretization disc;
  CoefficientSet coeffs;
  SpaceTimeFunction source;      // may be empty
  Eigen::VectorXd boundary;      // values at Dirichlet dofs of the T space
  SolverOptions solver;
  PicardOptions picard;
  bool reuse_operator = true;    // keep the assembled operator across steps when possible
};

// Implicit midpoint rule solved for T^{n+1/2}:
//   (2/dt) M (T^{n+1/2} - T^n) + A(T^{n+1/2}) = S(t + dt/2),
//   T^{n+1} = 2 T^{n+1/2} - T^n.
class MidpointStepper {
 public:
  explicit MidpointStepper(StepperConfig cfg);

  SolveReport step(TransientState& state, double dt);
  const StepperConfig& config() const { return cfg_; }
  int factorizations() const { return solver_.factorizations(); }
  int assemblies() const { return assemblies_; }

 private:
  BlockSystem build(const Eigen::VectorXd& T_lag, const Eigen::VectorXd& T_old, double dt, double t_mid);

  StepperConfig cfg_;
  LinearSolver solver_;
  std::optional<BlockSystem> cached_;
  double cached_dt_ = 0.0;
  int assemblies_ = 0;
};

class StepFailure : public SolverError {
 public:
  StepFailure(int step, double t, const std::string& what);
  int step() const { return step_; }
  double time() const { return t_; }

 private:
  int step_;
  double t_;
};

// Called after every accepted step (and once for the initial state with dt = 0).
using StepObserver = std::function<void(const TransientState&, double dt, const SolveReport*)>;

// Advances until the schedule is exhausted. Throws StepFailure on solver
// failure or Picard non-convergence; the observer has seen every accepted step.
void run_transient(MidpointStepper& stepper, TransientState& state, const Schedule& schedule,
                   const StepObserver& observer, bool observe_initial = true);

bool schedule_done(const Schedule& schedule, const TransientState& state);

void write_checkpoint(const std::filesystem::path& path, const TransientState& state);
TransientState read_checkpoint(const std::filesystem::path& path);

}  // namespace anisoflux
