#pragma once

#include <Eigen/Core>

#include <functional>
#include <iosfwd>
#include <memory>
#include <span>
#include <stdexcept>
#include <vector>

#include "core/mesh.hpp"

namespace anisoflux {

class SpaceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Quadrature1D {
  std::vector<double> points;
  std::vector<double> weights;
};

// Gauss-Legendre rule with n points on [-1, 1]; exact to degree 2n-1.
Quadrature1D gauss_legendre(int n);

struct Quadrature {
  int order = 0;  // points per axis
  std::vector<RefPoint> points;
  std::vector<double> weights;
};

// Tensor rule on [-1, 1]^2.
Quadrature tensor_gauss(int n);

enum class Family { Lagrange, DiscontinuousLagrange };

// Basis data at a point set, stored basis-major: entry (i, q) at i * num_points + q.
struct Tabulation {
  int num_basis = 0;
  int num_points = 0;
  std::vector<double> values;
  std::vector<std::array<double, 2>> gradients;
  std::vector<std::array<double, 3>> hessians;  // ξξ, ξη, ηη

  double value(int i, int q) const { return values[i * num_points + q]; }
  const std::array<double, 2>& gradient(int i, int q) const { return gradients[i * num_points + q]; }
  const std::array<double, 3>& hessian(int i, int q) const { return hessians[i * num_points + q]; }
};

// Tensor-product Lagrange element on [-1, 1]^2 with equispaced nodes (a single
// centre node for degree 0). Local dof (a, b) has index a + (degree + 1) * b.
class ReferenceElement {
 public:
  ReferenceElement(Family family, int degree);

  Family family() const { return family_; }
  int degree() const { return degree_; }
  int num_dofs() const { return (degree_ + 1) * (degree_ + 1); }
  std::span<const double> nodes_1d() const { return nodes_1d_; }
  std::span<const RefPoint> nodes() const { return nodes_; }

  Tabulation tabulate(std::span<const RefPoint> points) const;

  // Local dofs lying on reference edge `edge` (see BoundaryFacet).
  std::vector<int> edge_dofs(int edge) const;

 private:
  std::array<double, 3> lagrange_1d(int i, double x) const;

  Family family_;
  int degree_;
  std::vector<double> nodes_1d_;
  std::vector<RefPoint> nodes_;
};

class FunctionSpace {
 public:
  FunctionSpace(std::shared_ptr<const Mesh> mesh, ReferenceElement element,
                std::vector<int> dirichlet_tags);

  const Mesh& mesh() const { return *mesh_; }
  const std::shared_ptr<const Mesh>& mesh_ptr() const { return mesh_; }
  const ReferenceElement& element() const { return element_; }
  bool continuous() const { return element_.family() == Family::Lagrange; }
  int num_dofs() const { return num_dofs_; }
  int dofs_per_cell() const { return element_.num_dofs(); }
  std::span<const int> cell_dofs(int cell) const {
    return {cell_dofs_.data() + static_cast<std::size_t>(cell) * dofs_per_cell(),
            static_cast<std::size_t>(dofs_per_cell())};
  }
  std::span<const int> dirichlet_tags() const { return dirichlet_tags_; }
  bool is_boundary_dof(int dof) const { return boundary_mask_[dof] != 0; }
  const std::vector<int>& boundary_dofs() const { return boundary_dofs_; }
  Point dof_point(int dof) const { return dof_points_[dof]; }

 private:
  std::shared_ptr<const Mesh> mesh_;
  ReferenceElement element_;
  std::vector<int> dirichlet_tags_;
  int num_dofs_ = 0;
  std::vector<int> cell_dofs_;
  std::vector<char> boundary_mask_;
  std::vector<int> boundary_dofs_;
  std::vector<Point> dof_points_;
};

// Continuous spaces share dofs across cell interfaces and periodic seams;
// discontinuous spaces share none and cannot carry strong boundary data.
std::shared_ptr<const FunctionSpace> build_space(std::shared_ptr<const Mesh> mesh, Family family,
                                                 int degree, std::vector<int> dirichlet_tags = {});

class Field {
 public:
  explicit Field(std::shared_ptr<const FunctionSpace> space);
  Field(std::shared_ptr<const FunctionSpace> space, Eigen::VectorXd coefficients);

  const FunctionSpace& space() const { return *space_; }
  const std::shared_ptr<const FunctionSpace>& space_ptr() const { return space_; }
  Eigen::VectorXd& coefficients() { return coefficients_; }
  const Eigen::VectorXd& coefficients() const { return coefficients_; }
  int size() const { return static_cast<int>(coefficients_.size()); }

 private:
  std::shared_ptr<const FunctionSpace> space_;
  Eigen::VectorXd coefficients_;
};

using ScalarFunction = std::function<double(Point)>;

// Physical-space basis data on one cell.
struct PhysicalBasis {
  int num_basis = 0;
  int num_points = 0;
  std::vector<double> values;
  std::vector<Point> gradients;
  std::vector<double> laplacians;  // filled only when requested

  double value(int i, int q) const { return values[i * num_points + q]; }
  Point gradient(int i, int q) const { return gradients[i * num_points + q]; }
  double laplacian(int i, int q) const { return laplacians[i * num_points + q]; }
};

// Push reference data forward; laplacians include the curvature of the
// bilinear map.
PhysicalBasis push_forward(const Tabulation& tab, const CellGeometry& geom, bool with_laplacian);

int default_quadrature_order(const FunctionSpace& space);

Field interpolate(const ScalarFunction& fn, std::shared_ptr<const FunctionSpace> space);

// ||field - oracle|| / ||reference|| in L2, integrands at quadrature points.
double l2_relative_error(const Field& field, const ScalarFunction& oracle,
                         const ScalarFunction& reference, int quad_order = 0);
double l2_norm(const ScalarFunction& fn, const Mesh& mesh, int quad_order);
// Integral of |field|.
double integrate_abs(const Field& field, int quad_order = 0);
double integrate(const Field& field, int quad_order = 0);

// Field values at every cell corner, cell-major (matches write_vtk).
std::vector<double> corner_values(const Field& field);

// CSV: dof,x,y,value
void write_field_csv(const Field& field, std::ostream& out);
void write_field_vtk(const Field& field, std::ostream& out, const std::string& name = "T");

}  // namespace anisoflux
