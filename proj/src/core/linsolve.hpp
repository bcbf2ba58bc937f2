#pragma once

#include <Eigen/Core>

#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "core/assembly.hpp"

namespace anisoflux {

class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SolveReport {
  int iterations = 0;
  double residual = 0.0;  // ‖A x − b‖₂ / ‖b‖₂
  double seconds = 0.0;
  bool converged = false;
  bool reused_factorization = false;
  std::vector<double> history;  // Picard increments
};

enum class SolverKind { Direct, Krylov };

struct SolverOptions {
  SolverKind kind = SolverKind::Direct;
  double tol = 1e-10;
  int krylov_max_iter = 5000;
  double ilut_drop = 1e-6;
  int ilut_fill = 40;
  bool reuse = true;
};

const char* direct_backend_name();

// Sparse LU with fill-reducing ordering, refactored only when the matrix
// changes; preconditioned BiCGSTAB when the direct residual misses tol or
// Krylov is requested.
class LinearSolver {
 public:
  explicit LinearSolver(SolverOptions opts = {});
  ~LinearSolver();
  LinearSolver(const LinearSolver&) = delete;
  LinearSolver& operator=(const LinearSolver&) = delete;

  Eigen::VectorXd solve(const SparseMatrix& A, const Eigen::VectorXd& b, SolveReport* report = nullptr);
  int factorizations() const { return factorizations_; }
  const SolverOptions& options() const { return opts_; }
  void reset();

 private:
  struct Impl;
  SolverOptions opts_;
  std::unique_ptr<Impl> impl_;
  int factorizations_ = 0;
};

// One-shot solve with a fresh solver.
Eigen::VectorXd solve_linear(const SparseMatrix& A, const Eigen::VectorXd& b, double tol = 1e-10,
                             SolveReport* report = nullptr);

struct BlockSolution {
  Eigen::VectorXd T;
  Eigen::VectorXd z;  // empty for primal
};

BlockSolution solve_block(LinearSolver& solver, const BlockSystem& sys, SolveReport* report = nullptr);

struct PicardOptions {
  double rtol = 1e-8;
  int max_iter = 25;
  bool linear = false;  // coefficients do not depend on T: stop after one solve
};

using SystemBuilder = std::function<BlockSystem(const Eigen::VectorXd& T_lag)>;

// Fixed-point iteration T^{m+1} = solve(assemble(T^m)). A non-converged
// result is returned with converged = false and the increment history.
BlockSolution solve_picard(const SystemBuilder& assemble, const Eigen::VectorXd& T_init,
                           const PicardOptions& opts, LinearSolver& solver, SolveReport& report);

}  // namespace anisoflux
