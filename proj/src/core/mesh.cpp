#include "core/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>

namespace anisoflux {

Mesh::Mesh(Lattice lattice, std::vector<Point> vertices, std::vector<std::array<int, 4>> cells,
           std::vector<std::array<Point, 4>> corners, std::vector<BoundaryFacet> boundary_facets,
           std::vector<PeriodicLink> periodic_links)
    : lattice_(lattice),
      vertices_(std::move(vertices)),
      cells_(std::move(cells)),
      corners_(std::move(corners)),
      boundary_facets_(std::move(boundary_facets)),
      periodic_links_(std::move(periodic_links)) {
  if (cells_.size() != corners_.size())
    throw MeshError("cell and corner arrays differ in length");
  if (static_cast<std::size_t>(lattice_.nx) * static_cast<std::size_t>(lattice_.ny) != cells_.size())
    throw MeshError("cell count does not match lattice");
}

namespace {

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

void require_positive_cells(const Mesh& mesh) {
  static constexpr RefPoint kProbe[] = {{-1, -1}, {1, -1}, {1, 1}, {-1, 1}, {0, 0}};
  for (int c = 0; c < mesh.num_cells(); ++c)
    for (const auto& p : kProbe)
      if (map_jacobian(mesh.cell_corners(c), p).det() <= 0.0)
        throw MeshError("cell " + std::to_string(c) + " is inverted or degenerate");
}

}  // namespace

double counter_uniform(std::uint64_t seed, std::uint64_t key) {
  const std::uint64_t bits = splitmix64(splitmix64(seed) ^ key);
  return 2.0 * static_cast<double>(bits >> 11) * 0x1.0p-53 - 1.0;
}

Mesh build_rect_mesh(const RectMeshParams& p) {
  if (p.nx < 1 || p.ny < 1) throw MeshError("rectangle mesh needs nx, ny >= 1");
  if (!(p.lx > 0.0) || !(p.ly > 0.0)) throw MeshError("rectangle mesh needs positive extent");
  if (!(p.perturb_factor >= 0.0) || p.perturb_factor >= 0.5)
    throw MeshError("perturb_factor must lie in [0, 0.5)");

  const Lattice lat{p.nx, p.ny, p.periodic_x, p.periodic_y};
  const int vx = p.periodic_x ? p.nx : p.nx + 1;
  const int vy = p.periodic_y ? p.ny : p.ny + 1;
  const double hx = p.lx / p.nx;
  const double hy = p.ly / p.ny;

  std::vector<Point> vertices(static_cast<std::size_t>(vx) * vy);
  for (int j = 0; j < vy; ++j) {
    for (int i = 0; i < vx; ++i) {
      const int id = i + vx * j;
      Point pt{i * hx, j * hy};
      const bool interior = i > 0 && i < p.nx && j > 0 && j < p.ny;
      if (interior && p.perturb_factor > 0.0) {
        const auto key = static_cast<std::uint64_t>(id) * 2;
        pt.x += p.perturb_factor * hx * counter_uniform(p.seed, key);
        pt.y += p.perturb_factor * hy * counter_uniform(p.seed, key + 1);
      }
      vertices[id] = pt;
    }
  }

  std::vector<std::array<int, 4>> cells;
  std::vector<std::array<Point, 4>> corners;
  cells.reserve(static_cast<std::size_t>(p.nx) * p.ny);
  corners.reserve(cells.capacity());
  static constexpr int kOffset[4][2] = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  for (int j = 0; j < p.ny; ++j) {
    for (int i = 0; i < p.nx; ++i) {
      std::array<int, 4> ids{};
      std::array<Point, 4> pts{};
      for (int a = 0; a < 4; ++a) {
        const int li = i + kOffset[a][0];
        const int lj = j + kOffset[a][1];
        const int wi = p.periodic_x ? li % p.nx : li;
        const int wj = p.periodic_y ? lj % p.ny : lj;
        ids[a] = wi + vx * wj;
        pts[a] = vertices[ids[a]];
        if (p.periodic_x && li == p.nx) pts[a].x += p.lx;
        if (p.periodic_y && lj == p.ny) pts[a].y += p.ly;
      }
      cells.push_back(ids);
      corners.push_back(pts);
    }
  }

  std::vector<BoundaryFacet> facets;
  if (!p.periodic_y) {
    for (int i = 0; i < p.nx; ++i) facets.push_back({i, 0, boundary::kBottom});
    for (int i = 0; i < p.nx; ++i) facets.push_back({i + p.nx * (p.ny - 1), 2, boundary::kTop});
  }
  if (!p.periodic_x) {
    for (int j = 0; j < p.ny; ++j) facets.push_back({p.nx * j, 3, boundary::kLeft});
    for (int j = 0; j < p.ny; ++j) facets.push_back({p.nx - 1 + p.nx * j, 1, boundary::kRight});
  }

  std::vector<PeriodicLink> links;
  if (p.periodic_x)
    for (int j = 0; j < vy; ++j) {
      const int id = vx * j;
      links.push_back({id, 0, vertices[id] + Point{p.lx, 0.0}});
    }
  if (p.periodic_y)
    for (int i = 0; i < vx; ++i) links.push_back({i, 1, vertices[i] + Point{0.0, p.ly}});

  Mesh mesh(lat, std::move(vertices), std::move(cells), std::move(corners), std::move(facets),
            std::move(links));
  require_positive_cells(mesh);
  return mesh;
}

Mesh build_annulus_mesh(int nr, int ntheta, double r0, double r1, double perturb_factor, std::uint64_t seed) {
  if (!(r0 > 0.0)) throw MeshError("annulus inner radius must be positive");
  if (!(perturb_factor >= 0.0) || perturb_factor >= 0.5) throw MeshError("perturb_factor must lie in [0, 0.5)");
  if (!(r1 > r0)) throw MeshError("annulus needs r1 > r0");
  if (nr < 1) throw MeshError("annulus needs nr >= 1");
  if (ntheta < 8) throw MeshError("annulus needs ntheta >= 8");

  const Lattice lat{nr, ntheta, false, true};
  const int vx = nr + 1;
  std::vector<Point> vertices(static_cast<std::size_t>(vx) * ntheta);
  for (int j = 0; j < ntheta; ++j) {
    for (int i = 0; i < vx; ++i) {
      const int id = i + vx * j;
      double r = r0 + (r1 - r0) * i / nr;
      double theta = 2.0 * std::numbers::pi * j / ntheta;
      if (i > 0 && i < nr && perturb_factor > 0.0) {
        const auto key = static_cast<std::uint64_t>(id) * 2;
        r += perturb_factor * (r1 - r0) / nr * counter_uniform(seed, key);
        theta += perturb_factor * 2.0 * std::numbers::pi / ntheta * counter_uniform(seed, key + 1);
      }
      vertices[id] = {r * std::cos(theta), r * std::sin(theta)};
    }
  }

  std::vector<std::array<int, 4>> cells;
  std::vector<std::array<Point, 4>> corners;
  std::vector<BoundaryFacet> facets;
  for (int j = 0; j < ntheta; ++j) {
    const int jn = (j + 1) % ntheta;
    for (int i = 0; i < nr; ++i) {
      const std::array<int, 4> ids{i + vx * j, i + 1 + vx * j, i + 1 + vx * jn, i + vx * jn};
      cells.push_back(ids);
      corners.push_back({vertices[ids[0]], vertices[ids[1]], vertices[ids[2]], vertices[ids[3]]});
    }
  }
  for (int j = 0; j < ntheta; ++j) facets.push_back({nr * j, 3, boundary::kInner});
  for (int j = 0; j < ntheta; ++j) facets.push_back({nr - 1 + nr * j, 1, boundary::kOuter});

  Mesh mesh(lat, std::move(vertices), std::move(cells), std::move(corners), std::move(facets), {});
  require_positive_cells(mesh);
  return mesh;
}

Jacobian Jacobian::inverse() const {
  const double d = det();
  Jacobian inv;
  inv.a[0][0] = a[1][1] / d;
  inv.a[0][1] = -a[0][1] / d;
  inv.a[1][0] = -a[1][0] / d;
  inv.a[1][1] = a[0][0] / d;
  return inv;
}

Point map_to_physical(const std::array<Point, 4>& c, RefPoint r) {
  const double xi = r[0], eta = r[1];
  const double n0 = 0.25 * (1 - xi) * (1 - eta);
  const double n1 = 0.25 * (1 + xi) * (1 - eta);
  const double n2 = 0.25 * (1 + xi) * (1 + eta);
  const double n3 = 0.25 * (1 - xi) * (1 + eta);
  return {n0 * c[0].x + n1 * c[1].x + n2 * c[2].x + n3 * c[3].x,
          n0 * c[0].y + n1 * c[1].y + n2 * c[2].y + n3 * c[3].y};
}

Jacobian map_jacobian(const std::array<Point, 4>& c, RefPoint r) {
  const double xi = r[0], eta = r[1];
  const Point d_xi = 0.25 * ((1 - eta) * (c[1] - c[0]) + (1 + eta) * (c[2] - c[3]));
  const Point d_eta = 0.25 * ((1 - xi) * (c[3] - c[0]) + (1 + xi) * (c[2] - c[1]));
  Jacobian j;
  j.a[0][0] = d_xi.x;
  j.a[0][1] = d_eta.x;
  j.a[1][0] = d_xi.y;
  j.a[1][1] = d_eta.y;
  return j;
}

CellGeometry cell_geometry(const Mesh& mesh, int cell, std::span<const RefPoint> ref_points) {
  if (cell < 0 || cell >= mesh.num_cells()) throw MeshError("cell index out of range");
  CellGeometry g;
  g.corners = mesh.cell_corners(cell);
  const auto& c = g.corners;
  const Point mixed = 0.25 * (c[0] - c[1] + c[2] - c[3]);
  const std::size_t n = ref_points.size();
  g.points.reserve(n);
  g.jacobians.reserve(n);
  g.inverse_jacobians.reserve(n);
  g.dets.reserve(n);
  g.hessians.reserve(n);
  for (const auto& r : ref_points) {
    if (std::abs(r[0]) > 1.0 + 1e-12 || std::abs(r[1]) > 1.0 + 1e-12)
      throw MeshError("reference point outside [-1,1]^2");
    const Jacobian j = map_jacobian(c, r);
    const double det = j.det();
    if (!(det > 0.0))
      throw MeshError("non-positive Jacobian determinant in cell " + std::to_string(cell));
    g.points.push_back(map_to_physical(c, r));
    g.jacobians.push_back(j);
    g.inverse_jacobians.push_back(j.inverse());
    g.dets.push_back(det);
    g.hessians.push_back({Point{}, mixed, Point{}});
  }
  g.length_scale = cell_length_scale(mesh, cell);
  return g;
}

double cell_area(const Mesh& mesh, int cell) {
  const auto& c = mesh.cell_corners(cell);
  double twice = 0.0;
  for (int a = 0; a < 4; ++a) twice += cross(c[a], c[(a + 1) % 4]);
  return 0.5 * twice;
}

double cell_length_scale(const Mesh& mesh, int cell) {
  if (cell < 0 || cell >= mesh.num_cells()) throw MeshError("cell index out of range");
  return std::sqrt(cell_area(mesh, cell));
}

Point cell_centroid(const Mesh& mesh, int cell) {
  return map_to_physical(mesh.cell_corners(cell), {0.0, 0.0});
}

double cell_chord_length(const Mesh& mesh, int cell, Point direction) {
  const double len = std::hypot(direction.x, direction.y);
  if (!(len > 0.0)) return cell_length_scale(mesh, cell);
  const Point d = (1.0 / len) * direction;
  const auto& c = mesh.cell_corners(cell);
  const Point o = cell_centroid(mesh, cell);
  double t_lo = -std::numeric_limits<double>::infinity();
  double t_hi = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 4; ++a) {
    const Point e = c[(a + 1) % 4] - c[a];
    const Point n{e.y, -e.x};  // outward for counterclockwise corners
    // inside: dot(o + t d - c[a], n) <= 0
    const double base = dot(o - c[a], n);
    const double rate = dot(d, n);
    if (std::abs(rate) < 1e-300) continue;
    const double t = -base / rate;
    if (rate > 0)
      t_hi = std::min(t_hi, t);
    else
      t_lo = std::max(t_lo, t);
  }
  return t_hi - t_lo;
}

void write_vtk(const Mesh& mesh, std::ostream& out, std::span<const double> corner_values,
               const std::string& field_name) {
  const int nc = mesh.num_cells();
  out << "# vtk DataFile Version 3.0\nanisoflux\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << 4 * nc << " double\n";
  out.precision(17);
  for (int c = 0; c < nc; ++c)
    for (const auto& p : mesh.cell_corners(c)) out << p.x << ' ' << p.y << " 0\n";
  out << "CELLS " << nc << ' ' << 5 * nc << '\n';
  for (int c = 0; c < nc; ++c)
    out << "4 " << 4 * c << ' ' << 4 * c + 1 << ' ' << 4 * c + 2 << ' ' << 4 * c + 3 << '\n';
  out << "CELL_TYPES " << nc << '\n';
  for (int c = 0; c < nc; ++c) out << "9\n";
  if (!corner_values.empty()) {
    if (corner_values.size() != static_cast<std::size_t>(4 * nc))
      throw MeshError("VTK point data needs one value per cell corner");
    out << "POINT_DATA " << 4 * nc << "\nSCALARS " << field_name << " double 1\nLOOKUP_TABLE default\n";
    for (double v : corner_values) out << v << '\n';
  }
}

}  // namespace anisoflux
