#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "core/coeffs.hpp"
#include "core/fespace.hpp"

namespace anisoflux {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using VectorFunction = std::function<Point(Point)>;

class AssemblyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Method { Primal, Mixed, Supg };
enum class LengthScale { SqrtArea, FieldAligned };

const char* method_name(Method m);
std::optional<Method> parse_method(const std::string& name);

struct CoefficientSet {
  KappaModel kappa;
  VectorFunction b;  // unit field direction
  LengthScale length_scale = LengthScale::SqrtArea;
  // Constant τ replacing the step-size formula (τ = 0 gives the unstabilized limit).
  std::optional<double> tau_override;
};

// τ = (2/√dt + k√κΔ/δx)^{-1}.
double supg_tau(double dt, int degree, double kappa_delta, double dx);

struct Discretization {
  Method method = Method::Primal;
  std::shared_ptr<const FunctionSpace> t_space;
  std::shared_ptr<const FunctionSpace> z_space;  // null for primal
  int quad_order = 0;                            // 0: default for t_space

  // Throws AssemblyError on mismatched space pairs.
  void validate() const;
  int quadrature_order() const;
};

// Standard pairing: mixed uses dQ_{k-1}, supg uses Q_k for ζ.
Discretization make_discretization(Method method, std::shared_ptr<const FunctionSpace> t_space,
                                   int quad_order = 0);

struct BlockSystem {
  Method method = Method::Primal;
  SparseMatrix A11, A12, A21, A22;
  Eigen::VectorXd R_T, R_z;
  std::vector<int> dirichlet_dofs;
  Eigen::VectorXd dirichlet_values;  // aligned with dirichlet_dofs

  // Pieces to rebuild R_T for a new history state or source:
  // R_T = history * T_old + load - lifting, then R_T[d] = g[d].
  SparseMatrix history;
  Eigen::VectorXd lifting;

  int num_t() const { return static_cast<int>(A11.rows()); }
  int num_z() const { return static_cast<int>(A22.rows()); }
  bool has_aux() const { return method != Method::Primal; }
  SparseMatrix monolithic() const;
  Eigen::VectorXd rhs() const;
};

struct SystemInputs {
  const Eigen::VectorXd* T_lag = nullptr;  // required
  const Eigen::VectorXd* T_old = nullptr;  // history term; zero if null
  const Eigen::VectorXd* boundary = nullptr;  // values read at Dirichlet dofs; zero if null
  ScalarFunction source;                   // may be empty
  double dt = 0.0;                         // step size entering τ
  double mass_scale = 0.0;                 // coefficient of the time-derivative mass block
};

BlockSystem assemble_system(const Discretization& disc, const CoefficientSet& coeffs,
                            const SystemInputs& in);

// Source vector ⟨φ_i, S⟩ (primal, mixed) or M^a(φ_i, S) (supg), without
// Dirichlet rows.
Eigen::VectorXd assemble_load(const Discretization& disc, const CoefficientSet& coeffs,
                              const Eigen::VectorXd& T_lag, double dt, const ScalarFunction& source);

// R_T from the stored history matrix and lifting vector.
void update_rhs(BlockSystem& sys, const Eigen::VectorXd& T_old, const Eigen::VectorXd& load);

// Individual forms.
SparseMatrix assemble_mass(const FunctionSpace& space, const ScalarFunction& weight, int quad_order = 0);
SparseMatrix assemble_perp_stiffness(const FunctionSpace& space, double kappa_perp, int quad_order = 0);
// (D)_{ij} = ⟨ψ_i, s·∇φ_j⟩, ζ rows and T columns.
SparseMatrix assemble_dir_gradient(const FunctionSpace& t_space, const FunctionSpace& z_space,
                                   const VectorFunction& s, int quad_order = 0);

struct SupgBlocks {
  SparseMatrix M_a;     // ⟨φ_i + τ s·∇φ_i, φ_j⟩
  SparseMatrix M_f;     // ⟨ψ_i, ψ_j + s·∇(τ ψ_j)⟩
  SparseMatrix G;       // G^f(φ_j, ψ_i), ζ rows and T columns
  SparseMatrix G_b;     // -∫ τ ψ_i (s·∇φ_j)(n·s) dS, ζ rows and T columns
  SparseMatrix L_f;     // ⟨∇φ_i, κ⊥∇φ_j⟩ - ⟨τ s·∇φ_i, κ⊥Δφ_j⟩
};

SupgBlocks assemble_supg_blocks(const Discretization& disc, const CoefficientSet& coeffs,
                                const Eigen::VectorXd& T_lag, double dt);

// A11 - A12 A22^{-1} A21, dense; small systems only.
Eigen::MatrixXd schur_complement(const BlockSystem& sys);

void write_matrix_market(const SparseMatrix& A, std::ostream& out);

// Worker count for cell loops; 0 restores the ANISOFLUX_THREADS/default choice.
void set_assembly_threads(int n);
int assembly_threads();

}  // namespace anisoflux
