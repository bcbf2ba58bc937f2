#include "core/fespace.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <string>

#include "core/output.hpp"

namespace anisoflux {

Quadrature1D gauss_legendre(int n) {
  if (n < 1 || n > 10) throw SpaceError("Gauss-Legendre order must be in [1, 10]");
  Quadrature1D q;
  q.points.resize(n);
  q.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      const double pn = n == 1 ? x : p1;
      const double pn1 = n == 1 ? 1.0 : p0;
      dp = n * (x * pn - pn1) / (x * x - 1.0);
      const double dx = pn / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // recompute derivative at the converged root
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = n == 1 ? 1.0 : n * (x * p1 - p0) / (x * x - 1.0);
    q.points[n - 1 - i] = x;
    q.weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  if (n == 1) {
    q.points[0] = 0.0;
    q.weights[0] = 2.0;
  }
  return q;
}

Quadrature tensor_gauss(int n) {
  const Quadrature1D g = gauss_legendre(n);
  Quadrature q;
  q.order = n;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      q.points.push_back({g.points[i], g.points[j]});
      q.weights.push_back(g.weights[i] * g.weights[j]);
    }
  return q;
}

ReferenceElement::ReferenceElement(Family family, int degree) : family_(family), degree_(degree) {
  if (family == Family::Lagrange && degree < 1)
    throw SpaceError("continuous Lagrange element needs degree >= 1");
  if (degree < 0) throw SpaceError("element degree must be non-negative");
  if (degree > 8) throw SpaceError("element degree above 8 is not supported");
  if (degree == 0) {
    nodes_1d_ = {0.0};
  } else {
    for (int i = 0; i <= degree; ++i) nodes_1d_.push_back(-1.0 + 2.0 * i / degree);
  }
  for (int b = 0; b <= degree; ++b)
    for (int a = 0; a <= degree; ++a) nodes_.push_back({nodes_1d_[a], nodes_1d_[b]});
}

std::array<double, 3> ReferenceElement::lagrange_1d(int i, double x) const {
  const int n = degree_ + 1;
  if (n == 1) return {1.0, 0.0, 0.0};
  const auto& z = nodes_1d_;
  double value = 1.0;
  for (int m = 0; m < n; ++m)
    if (m != i) value *= (x - z[m]) / (z[i] - z[m]);
  double first = 0.0;
  for (int l = 0; l < n; ++l) {
    if (l == i) continue;
    double term = 1.0 / (z[i] - z[l]);
    for (int m = 0; m < n; ++m)
      if (m != i && m != l) term *= (x - z[m]) / (z[i] - z[m]);
    first += term;
  }
  double second = 0.0;
  for (int l = 0; l < n; ++l) {
    if (l == i) continue;
    for (int r = 0; r < n; ++r) {
      if (r == i || r == l) continue;
      double term = 1.0 / ((z[i] - z[l]) * (z[i] - z[r]));
      for (int m = 0; m < n; ++m)
        if (m != i && m != l && m != r) term *= (x - z[m]) / (z[i] - z[m]);
      second += term;
    }
  }
  return {value, first, second};
}

Tabulation ReferenceElement::tabulate(std::span<const RefPoint> points) const {
  const int p1 = degree_ + 1;
  Tabulation t;
  t.num_basis = num_dofs();
  t.num_points = static_cast<int>(points.size());
  t.values.resize(static_cast<std::size_t>(t.num_basis) * t.num_points);
  t.gradients.resize(t.values.size());
  t.hessians.resize(t.values.size());
  for (int q = 0; q < t.num_points; ++q) {
    std::vector<std::array<double, 3>> lx(p1), ly(p1);
    for (int a = 0; a < p1; ++a) {
      lx[a] = lagrange_1d(a, points[q][0]);
      ly[a] = lagrange_1d(a, points[q][1]);
    }
    for (int b = 0; b < p1; ++b)
      for (int a = 0; a < p1; ++a) {
        const int k = (a + p1 * b) * t.num_points + q;
        t.values[k] = lx[a][0] * ly[b][0];
        t.gradients[k] = {lx[a][1] * ly[b][0], lx[a][0] * ly[b][1]};
        t.hessians[k] = {lx[a][2] * ly[b][0], lx[a][1] * ly[b][1], lx[a][0] * ly[b][2]};
      }
  }
  return t;
}

std::vector<int> ReferenceElement::edge_dofs(int edge) const {
  const int p = degree_;
  std::vector<int> out;
  if (family_ == Family::DiscontinuousLagrange && p == 0) return out;
  for (int s = 0; s <= p; ++s) {
    switch (edge) {
      case 0: out.push_back(s); break;
      case 1: out.push_back(p + (p + 1) * s); break;
      case 2: out.push_back(s + (p + 1) * p); break;
      case 3: out.push_back((p + 1) * s); break;
      default: throw SpaceError("edge index must be in [0, 3]");
    }
  }
  return out;
}

FunctionSpace::FunctionSpace(std::shared_ptr<const Mesh> mesh, ReferenceElement element,
                             std::vector<int> dirichlet_tags)
    : mesh_(std::move(mesh)), element_(std::move(element)), dirichlet_tags_(std::move(dirichlet_tags)) {
  if (!mesh_) throw SpaceError("function space needs a mesh");
  const Mesh& m = *mesh_;
  const int nloc = element_.num_dofs();
  const int nc = m.num_cells();
  cell_dofs_.resize(static_cast<std::size_t>(nc) * nloc);

  if (continuous()) {
    const Lattice& lat = m.lattice();
    const int k = element_.degree();
    const int gx = k * lat.nx + (lat.periodic_x ? 0 : 1);
    const int gy = k * lat.ny + (lat.periodic_y ? 0 : 1);
    num_dofs_ = gx * gy;
    for (int j = 0; j < lat.ny; ++j)
      for (int i = 0; i < lat.nx; ++i) {
        const int c = i + lat.nx * j;
        for (int b = 0; b <= k; ++b)
          for (int a = 0; a <= k; ++a) {
            int gi = k * i + a;
            int gj = k * j + b;
            if (lat.periodic_x) gi %= gx;
            if (lat.periodic_y) gj %= gy;
            cell_dofs_[static_cast<std::size_t>(c) * nloc + a + (k + 1) * b] = gi + gx * gj;
          }
      }
  } else {
    num_dofs_ = nc * nloc;
    for (int i = 0; i < num_dofs_; ++i) cell_dofs_[i] = i;
  }

  dof_points_.resize(num_dofs_);
  std::vector<char> seen(num_dofs_, 0);
  const auto nodes = element_.nodes();
  for (int c = 0; c < nc; ++c) {
    const auto dofs = cell_dofs(c);
    const auto& corners = m.cell_corners(c);
    for (int l = 0; l < nloc; ++l) {
      if (seen[dofs[l]]) continue;
      seen[dofs[l]] = 1;
      dof_points_[dofs[l]] = map_to_physical(corners, nodes[l]);
    }
  }

  boundary_mask_.assign(num_dofs_, 0);
  for (const auto& f : m.boundary_facets()) {
    if (std::find(dirichlet_tags_.begin(), dirichlet_tags_.end(), f.tag) == dirichlet_tags_.end())
      continue;
    const auto dofs = cell_dofs(f.cell);
    for (int l : element_.edge_dofs(f.local_edge)) boundary_mask_[dofs[l]] = 1;
  }
  for (int d = 0; d < num_dofs_; ++d)
    if (boundary_mask_[d]) boundary_dofs_.push_back(d);
}

std::shared_ptr<const FunctionSpace> build_space(std::shared_ptr<const Mesh> mesh, Family family,
                                                 int degree, std::vector<int> dirichlet_tags) {
  if (family == Family::DiscontinuousLagrange && !dirichlet_tags.empty())
    throw SpaceError("discontinuous space cannot carry strong boundary values (needs trace continuity)");
  return std::make_shared<const FunctionSpace>(std::move(mesh), ReferenceElement(family, degree),
                                               std::move(dirichlet_tags));
}

Field::Field(std::shared_ptr<const FunctionSpace> space)
    : space_(std::move(space)), coefficients_(Eigen::VectorXd::Zero(space_->num_dofs())) {}

Field::Field(std::shared_ptr<const FunctionSpace> space, Eigen::VectorXd coefficients)
    : space_(std::move(space)), coefficients_(std::move(coefficients)) {
  if (coefficients_.size() != space_->num_dofs())
    throw SpaceError("coefficient vector length does not match dof count");
}

PhysicalBasis push_forward(const Tabulation& tab, const CellGeometry& geom, bool with_laplacian) {
  PhysicalBasis pb;
  pb.num_basis = tab.num_basis;
  pb.num_points = tab.num_points;
  pb.values = tab.values;
  pb.gradients.resize(tab.values.size());
  if (with_laplacian) pb.laplacians.resize(tab.values.size());
  for (int q = 0; q < tab.num_points; ++q) {
    const auto& inv = geom.inverse_jacobians[q].a;
    // metric G = J^-1 J^-T
    const double g00 = inv[0][0] * inv[0][0] + inv[0][1] * inv[0][1];
    const double g01 = inv[0][0] * inv[1][0] + inv[0][1] * inv[1][1];
    const double g11 = inv[1][0] * inv[1][0] + inv[1][1] * inv[1][1];
    const auto& h = geom.hessians[q];
    for (int i = 0; i < tab.num_basis; ++i) {
      const auto& gr = tab.gradient(i, q);
      const Point grad{gr[0] * inv[0][0] + gr[1] * inv[1][0], gr[0] * inv[0][1] + gr[1] * inv[1][1]};
      pb.gradients[i * tab.num_points + q] = grad;
      if (with_laplacian) {
        const auto& hr = tab.hessian(i, q);
        const double c00 = hr[0] - grad.x * h[0].x - grad.y * h[0].y;
        const double c01 = hr[1] - grad.x * h[1].x - grad.y * h[1].y;
        const double c11 = hr[2] - grad.x * h[2].x - grad.y * h[2].y;
        pb.laplacians[i * tab.num_points + q] = c00 * g00 + 2.0 * c01 * g01 + c11 * g11;
      }
    }
  }
  return pb;
}

int default_quadrature_order(const FunctionSpace& space) {
  return std::max(1, space.element().degree() + 2);
}

Field interpolate(const ScalarFunction& fn, std::shared_ptr<const FunctionSpace> space) {
  Field f(space);
  for (int d = 0; d < space->num_dofs(); ++d) {
    const double v = fn(space->dof_point(d));
    if (!std::isfinite(v))
      throw SpaceError("interpolated expression is not finite at dof " + std::to_string(d));
    f.coefficients()[d] = v;
  }
  return f;
}

namespace {

template <typename Fn>
void for_each_quadrature_value(const Field& field, int quad_order, Fn&& fn) {
  const FunctionSpace& space = field.space();
  const int order = quad_order > 0 ? quad_order : default_quadrature_order(space);
  const Quadrature quad = tensor_gauss(order);
  const Tabulation tab = space.element().tabulate(quad.points);
  const auto& coef = field.coefficients();
  const Mesh& mesh = space.mesh();
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const CellGeometry geom = cell_geometry(mesh, c, quad.points);
    const auto dofs = space.cell_dofs(c);
    for (int q = 0; q < tab.num_points; ++q) {
      double u = 0.0;
      for (int i = 0; i < tab.num_basis; ++i) u += coef[dofs[i]] * tab.value(i, q);
      fn(geom.points[q], u, quad.weights[q] * geom.dets[q]);
    }
  }
}

}  // namespace

double l2_norm(const ScalarFunction& fn, const Mesh& mesh, int quad_order) {
  const Quadrature quad = tensor_gauss(quad_order);
  double sum = 0.0;
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const CellGeometry geom = cell_geometry(mesh, c, quad.points);
    for (std::size_t q = 0; q < quad.points.size(); ++q) {
      const double v = fn(geom.points[q]);
      sum += v * v * quad.weights[q] * geom.dets[q];
    }
  }
  return std::sqrt(sum);
}

double l2_relative_error(const Field& field, const ScalarFunction& oracle,
                         const ScalarFunction& reference, int quad_order) {
  double num = 0.0, den = 0.0;
  for_each_quadrature_value(field, quad_order, [&](Point x, double u, double w) {
    const double e = u - oracle(x);
    const double r = reference(x);
    num += e * e * w;
    den += r * r * w;
  });
  if (!(den > 0.0)) throw SpaceError("reference norm is zero in relative L2 error");
  return std::sqrt(num / den);
}

double integrate_abs(const Field& field, int quad_order) {
  double sum = 0.0;
  for_each_quadrature_value(field, quad_order, [&](Point, double u, double w) { sum += std::abs(u) * w; });
  return sum;
}

double integrate(const Field& field, int quad_order) {
  double sum = 0.0;
  for_each_quadrature_value(field, quad_order, [&](Point, double u, double w) { sum += u * w; });
  return sum;
}

std::vector<double> corner_values(const Field& field) {
  const FunctionSpace& space = field.space();
  static constexpr RefPoint kCorners[] = {{-1, -1}, {1, -1}, {1, 1}, {-1, 1}};
  const Tabulation tab = space.element().tabulate(kCorners);
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(space.mesh().num_cells()) * 4);
  for (int c = 0; c < space.mesh().num_cells(); ++c) {
    const auto dofs = space.cell_dofs(c);
    for (int q = 0; q < 4; ++q) {
      double u = 0.0;
      for (int i = 0; i < tab.num_basis; ++i) u += field.coefficients()[dofs[i]] * tab.value(i, q);
      out.push_back(u);
    }
  }
  return out;
}

void write_field_csv(const Field& field, std::ostream& out) {
  out << "dof,x,y,value\n";
  for (int d = 0; d < field.size(); ++d) {
    const Point p = field.space().dof_point(d);
    out << d << ',' << format_double(p.x) << ',' << format_double(p.y) << ','
        << format_double(field.coefficients()[d]) << '\n';
  }
}

void write_field_vtk(const Field& field, std::ostream& out, const std::string& name) {
  const auto values = corner_values(field);
  write_vtk(field.space().mesh(), out, values, name);
}

}  // namespace anisoflux
