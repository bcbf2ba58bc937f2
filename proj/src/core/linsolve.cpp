#include "core/linsolve.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseLU>
#ifdef ANISOFLUX_HAVE_UMFPACK
#include <Eigen/UmfPackSupport>
#endif

#include <chrono>
#include <cmath>
#include <cstring>
#include <sstream>

namespace anisoflux {

namespace {

using ColMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor>;
#ifdef ANISOFLUX_HAVE_UMFPACK
using DirectLU = Eigen::UmfPackLU<ColMatrix>;
#else
using DirectLU = Eigen::SparseLU<ColMatrix, Eigen::COLAMDOrdering<int>>;
#endif

bool same_pattern(const ColMatrix& a, const ColMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols() || a.nonZeros() != b.nonZeros()) return false;
  const auto nnz = static_cast<std::size_t>(a.nonZeros());
  return std::memcmp(a.outerIndexPtr(), b.outerIndexPtr(), sizeof(int) * (a.outerSize() + 1)) == 0 &&
         std::memcmp(a.innerIndexPtr(), b.innerIndexPtr(), sizeof(int) * nnz) == 0;
}

bool same_matrix(const SparseMatrix& a, const SparseMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols() || a.nonZeros() != b.nonZeros()) return false;
  if (!a.isCompressed() || !b.isCompressed()) return false;
  const auto nnz = static_cast<std::size_t>(a.nonZeros());
  return std::memcmp(a.outerIndexPtr(), b.outerIndexPtr(), sizeof(int) * (a.outerSize() + 1)) == 0 &&
         std::memcmp(a.innerIndexPtr(), b.innerIndexPtr(), sizeof(int) * nnz) == 0 &&
         std::memcmp(a.valuePtr(), b.valuePtr(), sizeof(double) * nnz) == 0;
}

double relative_residual(const SparseMatrix& A, const Eigen::VectorXd& x, const Eigen::VectorXd& b) {
  const double nb = b.norm();
  const double r = (b - A * x).norm();
  return nb > 0.0 ? r / nb : r;
}

}  // namespace

const char* direct_backend_name() {
#ifdef ANISOFLUX_HAVE_UMFPACK
  return "umfpack";
#else
  return "sparselu";
#endif
}

struct LinearSolver::Impl {
  SparseMatrix matrix;
  ColMatrix factored_matrix;  // UmfPackLU keeps a reference to it
  bool factored = false;
  std::unique_ptr<DirectLU> lu;
};

LinearSolver::LinearSolver(SolverOptions opts) : opts_(opts), impl_(std::make_unique<Impl>()) {}
LinearSolver::~LinearSolver() = default;

void LinearSolver::reset() {
  impl_ = std::make_unique<Impl>();
}

Eigen::VectorXd LinearSolver::solve(const SparseMatrix& A, const Eigen::VectorXd& b, SolveReport* report) {
  const auto start = std::chrono::steady_clock::now();
  if (A.rows() != A.cols()) throw SolverError("matrix is not square");
  if (A.rows() != b.size()) throw SolverError("right-hand side length does not match matrix");
  SolveReport rep;
  Eigen::VectorXd x = Eigen::VectorXd::Zero(b.size());

  auto finish = [&](const Eigen::VectorXd& sol) {
    rep.residual = relative_residual(A, sol, b);
    rep.converged = rep.residual <= opts_.tol;
    rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (report) *report = rep;
  };

  if (opts_.kind == SolverKind::Direct) {
    const bool reuse = opts_.reuse && impl_->factored && same_matrix(impl_->matrix, A);
    if (!reuse) {
      ColMatrix Ac(A);
      Ac.makeCompressed();
      const bool analyzed = impl_->lu && same_pattern(impl_->factored_matrix, Ac);
      impl_->factored = false;
      impl_->factored_matrix = std::move(Ac);
      if (!analyzed) {
        impl_->lu = std::make_unique<DirectLU>();
        impl_->lu->analyzePattern(impl_->factored_matrix);
      }
      impl_->lu->factorize(impl_->factored_matrix);
      if (impl_->lu->info() != Eigen::Success)
        throw SolverError("sparse LU factorization failed: matrix is singular or ill-conditioned");
      impl_->matrix = A;
      impl_->matrix.makeCompressed();
      impl_->factored = true;
      ++factorizations_;
    }
    rep.reused_factorization = reuse;
    x = impl_->lu->solve(b);
    if (impl_->lu->info() != Eigen::Success || !x.allFinite())
      throw SolverError("sparse LU solve failed: matrix is singular");
    rep.iterations = 1;
    // Two rounds of iterative refinement if the direct residual is loose.
    for (int r = 0; r < 2 && relative_residual(A, x, b) > opts_.tol; ++r) {
      x += impl_->lu->solve(Eigen::VectorXd(b - A * x));
      ++rep.iterations;
    }
    if (relative_residual(A, x, b) <= opts_.tol) {
      finish(x);
      return x;
    }
  }

  Eigen::BiCGSTAB<SparseMatrix, Eigen::IncompleteLUT<double>> krylov;
  krylov.preconditioner().setDroptol(opts_.ilut_drop);
  krylov.preconditioner().setFillfactor(opts_.ilut_fill);
  krylov.setTolerance(opts_.tol * 0.5);
  krylov.setMaxIterations(opts_.krylov_max_iter);
  krylov.compute(A);
  if (krylov.info() != Eigen::Success) throw SolverError("incomplete LU preconditioner failed");
  x = krylov.solveWithGuess(b, x);
  rep.iterations += static_cast<int>(krylov.iterations());
  finish(x);
  if (!rep.converged || !x.allFinite()) {
    std::ostringstream msg;
    msg << "linear solve did not converge: relative residual " << rep.residual << " > " << opts_.tol;
    throw SolverError(msg.str());
  }
  return x;
}

Eigen::VectorXd solve_linear(const SparseMatrix& A, const Eigen::VectorXd& b, double tol,
                             SolveReport* report) {
  SolverOptions opts;
  opts.tol = tol;
  LinearSolver solver(opts);
  return solver.solve(A, b, report);
}

BlockSolution solve_block(LinearSolver& solver, const BlockSystem& sys, SolveReport* report) {
  BlockSolution out;
  if (!sys.has_aux()) {
    out.T = solver.solve(sys.A11, sys.R_T, report);
    return out;
  }
  const Eigen::VectorXd x = solver.solve(sys.monolithic(), sys.rhs(), report);
  out.T = x.head(sys.num_t());
  out.z = x.tail(sys.num_z());
  return out;
}

BlockSolution solve_picard(const SystemBuilder& assemble, const Eigen::VectorXd& T_init,
                           const PicardOptions& opts, LinearSolver& solver, SolveReport& report) {
  const auto start = std::chrono::steady_clock::now();
  report = SolveReport{};
  BlockSolution cur;
  cur.T = T_init;
  if (opts.max_iter <= 0) {
    report.converged = false;
    return cur;
  }
  for (int m = 0; m < opts.max_iter; ++m) {
    const BlockSystem sys = assemble(cur.T);
    SolveReport lin;
    BlockSolution next = solve_block(solver, sys, &lin);
    report.iterations = m + 1;
    report.residual = lin.residual;
    report.reused_factorization = lin.reused_factorization;
    const double denom = cur.T.norm();
    const double inc = (next.T - cur.T).norm() / (denom > 0.0 ? denom : 1.0);
    report.history.push_back(inc);
    cur = std::move(next);
    if (opts.linear || inc <= opts.rtol) {
      report.converged = true;
      break;
    }
    if (!std::isfinite(inc)) break;
  }
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return cur;
}

}  // namespace anisoflux
