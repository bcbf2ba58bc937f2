#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace anisoflux {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

inline Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
inline Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
inline Point operator*(double s, Point a) { return {s * a.x, s * a.y}; }
inline double dot(Point a, Point b) { return a.x * b.x + a.y * b.y; }
inline double cross(Point a, Point b) { return a.x * b.y - a.y * b.x; }

class MeshError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Boundary tags. Rectangles use all four; annuli use Inner/Outer, which are
// the ξ = -1 and ξ = +1 sides of the (r, θ) lattice.
namespace boundary {
inline constexpr int kLeft = 0;
inline constexpr int kRight = 1;
inline constexpr int kBottom = 2;
inline constexpr int kTop = 3;
inline constexpr int kInner = 0;
inline constexpr int kOuter = 1;
}  // namespace boundary

// Logical structure of a mesh: cell (i, j) has index i + nx * j and corners
// (i, j), (i+1, j), (i+1, j+1), (i, j+1) in counterclockwise order. Periodic
// axes wrap the lattice, which the dof maps rely on.
struct Lattice {
  int nx = 0;
  int ny = 0;
  bool periodic_x = false;
  bool periodic_y = false;
};

struct BoundaryFacet {
  int cell = 0;
  int local_edge = 0;  // 0: η=-1, 1: ξ=+1, 2: η=+1, 3: ξ=-1
  int tag = 0;
};

// A vertex on the low side of a periodic axis also appears at `image` on the
// high side.
struct PeriodicLink {
  int vertex = 0;
  int axis = 0;
  Point image;
};

class Mesh {
 public:
  Mesh(Lattice lattice, std::vector<Point> vertices,
       std::vector<std::array<int, 4>> cells,
       std::vector<std::array<Point, 4>> corners,
       std::vector<BoundaryFacet> boundary_facets,
       std::vector<PeriodicLink> periodic_links);

  const Lattice& lattice() const { return lattice_; }
  int num_cells() const { return static_cast<int>(cells_.size()); }
  int num_vertices() const { return static_cast<int>(vertices_.size()); }
  int geometry_order() const { return 1; }

  std::span<const Point> vertices() const { return vertices_; }
  const std::array<int, 4>& cell_vertices(int cell) const { return cells_.at(cell); }
  // Physical corner coordinates, unwrapped across periodic seams.
  const std::array<Point, 4>& cell_corners(int cell) const { return corners_.at(cell); }
  std::span<const BoundaryFacet> boundary_facets() const { return boundary_facets_; }
  std::span<const PeriodicLink> periodic_links() const { return periodic_links_; }

 private:
  Lattice lattice_;
  std::vector<Point> vertices_;
  std::vector<std::array<int, 4>> cells_;
  std::vector<std::array<Point, 4>> corners_;
  std::vector<BoundaryFacet> boundary_facets_;
  std::vector<PeriodicLink> periodic_links_;
};

struct RectMeshParams {
  int nx = 1;
  int ny = 1;
  double lx = 1.0;
  double ly = 1.0;
  bool periodic_x = false;
  bool periodic_y = false;
  double perturb_factor = 0.0;
  std::uint64_t seed = 0;
};

// Rectangle [0, lx] x [0, ly]. Vertices strictly inside the box are displaced
// by independent uniform offsets in [-f h, f h] per component (h the lattice
// spacing of that axis), drawn from a counter-based generator keyed on
// (seed, vertex, component).
Mesh build_rect_mesh(const RectMeshParams& params);

// Polar annulus r0 <= r <= r1 with straight-edged cells; ξ runs radially,
// η azimuthally (periodic). Interior vertices move by up to f times the
// radial and angular spacing, keyed on (seed, vertex, component).
Mesh build_annulus_mesh(int nr, int ntheta, double r0, double r1, double perturb_factor = 0.0,
                        std::uint64_t seed = 0);

using RefPoint = std::array<double, 2>;

struct Jacobian {
  // d(x, y) / d(ξ, η): rows are x, y.
  double a[2][2] = {{0, 0}, {0, 0}};
  double det() const { return a[0][0] * a[1][1] - a[0][1] * a[1][0]; }
  Jacobian inverse() const;
};

struct CellGeometry {
  std::array<Point, 4> corners;
  std::vector<Point> points;
  std::vector<Jacobian> jacobians;
  std::vector<Jacobian> inverse_jacobians;
  std::vector<double> dets;
  // Second derivatives of the map per point: x_ξξ, x_ξη, x_ηη.
  std::vector<std::array<Point, 3>> hessians;
  double length_scale = 0.0;
};

CellGeometry cell_geometry(const Mesh& mesh, int cell, std::span<const RefPoint> ref_points);

// Bilinear map evaluation, shared by geometry and facet integration.
Point map_to_physical(const std::array<Point, 4>& corners, RefPoint ref);
Jacobian map_jacobian(const std::array<Point, 4>& corners, RefPoint ref);

double cell_area(const Mesh& mesh, int cell);
// sqrt(cell area).
double cell_length_scale(const Mesh& mesh, int cell);
// Chord length of the line through the cell centroid along `direction`.
double cell_chord_length(const Mesh& mesh, int cell, Point direction);
Point cell_centroid(const Mesh& mesh, int cell);

// Uniform value in [-1, 1) from (seed, key); platform independent.
double counter_uniform(std::uint64_t seed, std::uint64_t key);

// Legacy ASCII VTK, one point per cell corner so periodic seams stay intact.
void write_vtk(const Mesh& mesh, std::ostream& out,
               std::span<const double> corner_values = {},
               const std::string& field_name = "T");

}  // namespace anisoflux
