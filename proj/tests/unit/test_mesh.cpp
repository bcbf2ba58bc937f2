#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "core/fespace.hpp"
#include "core/mesh.hpp"

using namespace anisoflux;

namespace {

double shoelace(const std::array<Point, 4>& c) {
  double a = 0;
  for (int i = 0; i < 4; ++i) a += cross(c[i], c[(i + 1) % 4]);
  return 0.5 * a;
}

double quadrature_area(const Mesh& mesh) {
  const Quadrature q = tensor_gauss(3);
  double total = 0;
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const CellGeometry g = cell_geometry(mesh, c, q.points);
    for (std::size_t i = 0; i < q.weights.size(); ++i) total += q.weights[i] * g.dets[i];
  }
  return total;
}

}  // namespace

TEST(RectMesh, SingleCellHasUnitSquareCorners) {
  const Mesh m = build_rect_mesh({1, 1, 1.0, 1.0, false, false, 0.0, 3});
  ASSERT_EQ(m.num_cells(), 1);
  ASSERT_EQ(m.num_vertices(), 4);
  const auto& c = m.cell_corners(0);
  EXPECT_DOUBLE_EQ(c[0].x, 0.0);
  EXPECT_DOUBLE_EQ(c[0].y, 0.0);
  EXPECT_DOUBLE_EQ(c[2].x, 1.0);
  EXPECT_DOUBLE_EQ(c[2].y, 1.0);
  EXPECT_DOUBLE_EQ(cell_length_scale(m, 0), 1.0);
}

TEST(RectMesh, DoublyPeriodicCounts) {
  const Mesh m = build_rect_mesh({120, 96, 5.0, 4.0, true, true, 0.1, 7});
  EXPECT_EQ(m.num_cells(), 11520);
  EXPECT_EQ(m.num_vertices(), 11520);
  EXPECT_TRUE(m.boundary_facets().empty());
}

TEST(RectMesh, CentreVertexOfTwoByTwo) {
  const Mesh m = build_rect_mesh({2, 2, 1.0, 1.0, false, false, 0.0, 0});
  EXPECT_DOUBLE_EQ(m.cell_corners(0)[2].x, 0.5);
  EXPECT_DOUBLE_EQ(m.cell_corners(0)[2].y, 0.5);
  EXPECT_EQ(m.boundary_facets().size(), 8u);
}

TEST(RectMesh, UnperturbedLengthScale) {
  const Mesh m = build_rect_mesh({120, 96, 5.0, 4.0, true, true, 0.0, 0});
  EXPECT_NEAR(cell_length_scale(m, 0), 1.0 / 24.0, 1e-15);
  EXPECT_NEAR(cell_length_scale(m, 777), 1.0 / 24.0, 1e-15);
}

TEST(RectMesh, PerturbedLengthScaleIsRootShoelaceArea) {
  const Mesh m = build_rect_mesh({8, 6, 2.0, 1.5, false, false, 0.2, 11});
  for (int c = 0; c < m.num_cells(); ++c) {
    EXPECT_NEAR(cell_length_scale(m, c), std::sqrt(shoelace(m.cell_corners(c))), 1e-14);
  }
}

TEST(RectMesh, QuadratureAreaMatchesDomain) {
  EXPECT_NEAR(quadrature_area(build_rect_mesh({7, 5, 2.0, 3.0, false, false, 0.0, 0})), 6.0, 1e-12);
  // Perturbation moves interior vertices only, so the area is unchanged.
  EXPECT_NEAR(quadrature_area(build_rect_mesh({7, 5, 2.0, 3.0, false, false, 0.3, 5})), 6.0, 1e-12);
  EXPECT_NEAR(quadrature_area(build_rect_mesh({6, 4, 5.0, 4.0, true, true, 0.3, 5})), 20.0, 1e-12);
}

TEST(RectMesh, PerturbationIsDeterministic) {
  const Mesh a = build_rect_mesh({10, 10, 1.0, 1.0, true, false, 0.25, 42});
  const Mesh b = build_rect_mesh({10, 10, 1.0, 1.0, true, false, 0.25, 42});
  const Mesh c = build_rect_mesh({10, 10, 1.0, 1.0, true, false, 0.25, 43});
  bool differs = false;
  for (int v = 0; v < a.num_vertices(); ++v) {
    EXPECT_EQ(a.vertices()[v].x, b.vertices()[v].x);
    EXPECT_EQ(a.vertices()[v].y, b.vertices()[v].y);
    differs = differs || a.vertices()[v].x != c.vertices()[v].x;
  }
  EXPECT_TRUE(differs);
}

TEST(RectMesh, PeriodicSeamCornersAreUnwrapped) {
  const Mesh m = build_rect_mesh({4, 4, 1.0, 1.0, true, true, 0.2, 9});
  for (int c = 0; c < m.num_cells(); ++c) {
    EXPECT_GT(shoelace(m.cell_corners(c)), 0.0);
    EXPECT_NEAR(cell_length_scale(m, c), 0.25, 0.1);
  }
}

TEST(RectMesh, RejectsBadParameters) {
  EXPECT_THROW(build_rect_mesh({0, 1, 1.0, 1.0, false, false, 0.0, 0}), MeshError);
  EXPECT_THROW(build_rect_mesh({2, 2, -1.0, 1.0, false, false, 0.0, 0}), MeshError);
  EXPECT_THROW(build_rect_mesh({2, 2, 1.0, 1.0, false, false, 0.6, 0}), MeshError);
}

TEST(AnnulusMesh, CoarseRingHasPositiveJacobians) {
  const Mesh m = build_annulus_mesh(1, 8, 1.0, 2.0);
  ASSERT_EQ(m.num_cells(), 8);
  const Quadrature q = tensor_gauss(3);
  for (int c = 0; c < m.num_cells(); ++c) {
    for (double d : cell_geometry(m, c, q.points).dets) EXPECT_GT(d, 0.0);
  }
}

TEST(AnnulusMesh, InnerBoundaryFacetCount) {
  const Mesh m = build_annulus_mesh(2, 16, 0.5, 1.0);
  int inner = 0, outer = 0;
  for (const auto& f : m.boundary_facets()) {
    if (f.tag == boundary::kInner) ++inner;
    if (f.tag == boundary::kOuter) ++outer;
  }
  EXPECT_EQ(inner, 16);
  EXPECT_EQ(outer, 16);
  EXPECT_EQ(m.num_cells(), 32);
}

TEST(AnnulusMesh, AreaConvergesAtSecondOrder) {
  const double exact = std::numbers::pi * (1.0 - 0.25 * 0.25);
  double prev = 0;
  for (int nt : {16, 32, 64}) {
    const double err = std::abs(quadrature_area(build_annulus_mesh(4, nt, 0.25, 1.0)) - exact);
    EXPECT_LT(err, 25.0 / (nt * nt));
    if (prev > 0) EXPECT_NEAR(prev / err, 4.0, 0.1);
    prev = err;
  }
}

TEST(AnnulusMesh, PerturbationKeepsCellsValid) {
  const Mesh m = build_annulus_mesh(8, 32, 0.25, 1.0, 0.3, 5);
  const Quadrature q = tensor_gauss(5);
  for (int c = 0; c < m.num_cells(); ++c) {
    for (double d : cell_geometry(m, c, q.points).dets) EXPECT_GT(d, 0.0);
  }
  EXPECT_THROW(build_annulus_mesh(4, 4, 0.25, 1.0), MeshError);
  EXPECT_THROW(build_annulus_mesh(4, 16, 1.0, 0.5), MeshError);
}

TEST(CellGeometry, UnitSquareCentre) {
  const Mesh m = build_rect_mesh({1, 1, 1.0, 1.0, false, false, 0.0, 0});
  const std::array<RefPoint, 1> centre{{{0.0, 0.0}}};
  const CellGeometry g = cell_geometry(m, 0, centre);
  EXPECT_DOUBLE_EQ(g.jacobians[0].a[0][0], 0.5);
  EXPECT_DOUBLE_EQ(g.jacobians[0].a[0][1], 0.0);
  EXPECT_DOUBLE_EQ(g.jacobians[0].a[1][0], 0.0);
  EXPECT_DOUBLE_EQ(g.jacobians[0].a[1][1], 0.5);
  EXPECT_DOUBLE_EQ(g.dets[0], 0.25);
  EXPECT_NEAR(g.points[0].x, 0.5, 1e-15);
}

TEST(CellGeometry, ParallelogramHasNoCurvature) {
  const std::array<Point, 4> corners{{{0, 0}, {2, 0.5}, {2.7, 1.5}, {0.7, 1.0}}};
  const Mesh m(Lattice{1, 1, false, false}, {corners[0], corners[1], corners[2], corners[3]},
               {{0, 1, 2, 3}}, {corners}, {}, {});
  const Quadrature q = tensor_gauss(3);
  const CellGeometry g = cell_geometry(m, 0, q.points);
  for (const auto& h : g.hessians) {
    for (const Point& p : h) {
      EXPECT_NEAR(p.x, 0.0, 1e-15);
      EXPECT_NEAR(p.y, 0.0, 1e-15);
    }
  }
}

TEST(CellGeometry, PerturbedQuadDeterminantVariesButStaysPositive) {
  const Mesh m = build_rect_mesh({3, 3, 1.0, 1.0, false, false, 0.3, 2});
  std::vector<RefPoint> pts;
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) pts.push_back({-1.0 + 0.5 * i, -1.0 + 0.5 * j});
  const CellGeometry g = cell_geometry(m, 4, pts);
  const auto [lo, hi] = std::minmax_element(g.dets.begin(), g.dets.end());
  EXPECT_GT(*lo, 0.0);
  EXPECT_GT(*hi - *lo, 1e-6);
}

TEST(CellGeometry, ChordLengthOfSquare) {
  const Mesh m = build_rect_mesh({4, 4, 1.0, 1.0, false, false, 0.0, 0});
  EXPECT_NEAR(cell_chord_length(m, 5, {1.0, 0.0}), 0.25, 1e-14);
  EXPECT_NEAR(cell_chord_length(m, 5, {1.0, 1.0}), 0.25 * std::sqrt(2.0), 1e-14);
}

TEST(CounterUniform, RangeAndDeterminism) {
  for (std::uint64_t k = 0; k < 1000; ++k) {
    const double u = counter_uniform(17, k);
    EXPECT_GE(u, -1.0);
    EXPECT_LT(u, 1.0);
    EXPECT_EQ(u, counter_uniform(17, k));
  }
}

TEST(Vtk, WritesOnePointPerCorner) {
  const Mesh m = build_rect_mesh({2, 3, 1.0, 1.0, false, false, 0.0, 0});
  std::ostringstream out;
  write_vtk(m, out);
  EXPECT_NE(out.str().find("POINTS 24"), std::string::npos);
  EXPECT_NE(out.str().find("CELLS 6"), std::string::npos);
}
