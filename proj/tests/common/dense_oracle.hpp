// Brute-force dense assembly used as an independent oracle. Shares only dof
// numbering and the mesh corner lists with the library.
#pragma once

#include <Eigen/Dense>

#include <functional>

#include "core/assembly.hpp"

namespace oracle {

using anisoflux::Point;
using Dense = Eigen::MatrixXd;

struct Gauss {
  std::vector<double> x, w;
};
Gauss gauss(int n);

// Equispaced Lagrange polynomial i of degree k on [-1, 1]: value, d/dx, d²/dx².
std::array<double, 3> lagrange(int k, int i, double x);

struct PhysicalPoint {
  Point x;
  double det = 0;
  std::vector<double> phi;
  std::vector<Point> grad;
  std::vector<double> lap;
};

// Basis of `space` on `cell` at reference point (xi, eta).
PhysicalPoint evaluate(const anisoflux::FunctionSpace& space, int cell, double xi, double eta);

Dense mass(const anisoflux::FunctionSpace& space, int npts, const std::function<double(Point)>& weight = {});
Dense perp_stiffness(const anisoflux::FunctionSpace& space, int npts, double kperp);
Dense dir_gradient(const anisoflux::FunctionSpace& t, const anisoflux::FunctionSpace& z, int npts,
                   const std::function<Point(Point)>& s);

struct Blocks {
  Dense M_a, L, K, G, M_f, G_b;
};

// Every volume and boundary form of the three discretizations.
Blocks blocks(const anisoflux::Discretization& disc, const anisoflux::CoefficientSet& coeffs,
              const Eigen::VectorXd& T_lag, double dt);

struct System {
  Dense A11, A12, A21, A22;
  Eigen::VectorXd R_T;
};

System system(const anisoflux::Discretization& disc, const anisoflux::CoefficientSet& coeffs,
              const Eigen::VectorXd& T_lag, const Eigen::VectorXd& T_old, const Eigen::VectorXd& boundary,
              double dt, double mass_scale, const std::function<double(Point)>& source);

double max_abs_diff(const Dense& a, const anisoflux::SparseMatrix& b);

}  // namespace oracle
