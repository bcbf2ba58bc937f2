#include "core/assembly.hpp"

#include <Eigen/SparseLU>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <ostream>
#include <thread>

namespace anisoflux {

using Triplet = Eigen::Triplet<double>;

const char* method_name(Method m) {
  switch (m) {
    case Method::Primal: return "primal";
    case Method::Mixed: return "mixed";
    case Method::Supg: return "supg";
  }
  return "unknown";
}

std::optional<Method> parse_method(const std::string& name) {
  if (name == "primal") return Method::Primal;
  if (name == "mixed") return Method::Mixed;
  if (name == "supg") return Method::Supg;
  return std::nullopt;
}

double supg_tau(double dt, int degree, double kappa_delta, double dx) {
  return 1.0 / (2.0 / std::sqrt(dt) + degree * std::sqrt(std::max(kappa_delta, 0.0)) / dx);
}

void Discretization::validate() const {
  if (!t_space) throw AssemblyError("discretization needs a temperature space");
  if (!t_space->continuous()) throw AssemblyError("temperature space must be continuous");
  if (method == Method::Primal) {
    if (z_space) throw AssemblyError("primal discretization takes no auxiliary space");
    return;
  }
  if (!z_space) throw AssemblyError("mixed and supg discretizations need an auxiliary space");
  if (z_space->mesh_ptr() != t_space->mesh_ptr())
    throw AssemblyError("temperature and auxiliary spaces live on different meshes");
  if (!z_space->dirichlet_tags().empty())
    throw AssemblyError("auxiliary space cannot carry Dirichlet conditions");
  const int k = t_space->element().degree();
  const int kz = z_space->element().degree();
  if (method == Method::Supg) {
    if (!z_space->continuous() || kz != k)
      throw AssemblyError("supg needs a continuous auxiliary space of the temperature degree");
  } else {
    const bool dg_pair = !z_space->continuous() && kz == k - 1;
    const bool cg_pair = z_space->continuous() && kz == k;
    if (!dg_pair && !cg_pair)
      throw AssemblyError("mixed needs a dQ(k-1) or Q(k) auxiliary space");
  }
}

int Discretization::quadrature_order() const {
  return quad_order > 0 ? quad_order : default_quadrature_order(*t_space);
}

Discretization make_discretization(Method method, std::shared_ptr<const FunctionSpace> t_space,
                                   int quad_order) {
  Discretization d;
  d.method = method;
  d.quad_order = quad_order;
  const int k = t_space->element().degree();
  if (method == Method::Mixed)
    d.z_space = build_space(t_space->mesh_ptr(), Family::DiscontinuousLagrange, k - 1);
  else if (method == Method::Supg)
    d.z_space = build_space(t_space->mesh_ptr(), Family::Lagrange, k);
  d.t_space = std::move(t_space);
  d.validate();
  return d;
}

// ---------------------------------------------------------------------------
// Threaded cell loops

namespace {

std::atomic<int> g_threads{0};

int default_threads() {
  if (const char* env = std::getenv("ANISOFLUX_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  const unsigned hc = std::thread::hardware_concurrency();
  return hc > 0 ? static_cast<int>(hc) : 1;
}

struct Sink {
  std::vector<std::vector<Triplet>> mats;
  std::vector<std::pair<int, double>> vec;
};

// Runs make_kernel() once per worker over contiguous cell chunks. Outputs
// are concatenated in chunk order, so results do not depend on the worker
// count.
template <typename MakeKernel>
Sink for_cells(int num_cells, int num_mats, MakeKernel&& make_kernel) {
  const int nt = std::max(1, std::min(assembly_threads(), num_cells / 64));
  std::vector<Sink> sinks(nt);
  for (auto& s : sinks) s.mats.resize(num_mats);
  auto work = [&](int t) {
    auto kernel = make_kernel();
    const int c0 = static_cast<int>(static_cast<long long>(num_cells) * t / nt);
    const int c1 = static_cast<int>(static_cast<long long>(num_cells) * (t + 1) / nt);
    for (int c = c0; c < c1; ++c) kernel(c, sinks[t]);
  };
  if (nt == 1) {
    work(0);
  } else {
    std::vector<std::exception_ptr> errors(nt);
    std::vector<std::thread> pool;
    for (int t = 0; t < nt; ++t)
      pool.emplace_back([&, t] {
        try {
          work(t);
        } catch (...) {
          errors[t] = std::current_exception();
        }
      });
    for (auto& th : pool) th.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }
  if (nt == 1) return std::move(sinks[0]);
  Sink out;
  out.mats.resize(num_mats);
  for (int m = 0; m < num_mats; ++m) {
    std::size_t total = 0;
    for (auto& s : sinks) total += s.mats[m].size();
    out.mats[m].reserve(total);
    for (auto& s : sinks) out.mats[m].insert(out.mats[m].end(), s.mats[m].begin(), s.mats[m].end());
  }
  for (auto& s : sinks) out.vec.insert(out.vec.end(), s.vec.begin(), s.vec.end());
  return out;
}

SparseMatrix from_triplets(int rows, int cols, const std::vector<Triplet>& t) {
  SparseMatrix A(rows, cols);
  A.setFromTriplets(t.begin(), t.end());
  A.makeCompressed();
  return A;
}

Eigen::VectorXd from_entries(int n, const std::vector<std::pair<int, double>>& entries) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(n);
  for (const auto& [i, x] : entries) v[i] += x;
  return v;
}

// Coefficient data at one quadrature point.
struct PointCoeff {
  double kd = 0;   // κΔ, clamped at 0
  Point s;         // √κΔ b
  double tau = 0;
  double s_grad_tau = 0;
};

struct CoeffContext {
  const Discretization& disc;
  const CoefficientSet& coeffs;
  const Eigen::VectorXd* T_lag;
  double dt;
  bool with_tau;
};

double cell_dx(const CoeffContext& ctx, int cell) {
  const Mesh& mesh = ctx.disc.t_space->mesh();
  if (ctx.coeffs.length_scale == LengthScale::FieldAligned) {
    const Point c = cell_centroid(mesh, cell);
    return cell_chord_length(mesh, cell, ctx.coeffs.b(c));
  }
  return cell_length_scale(mesh, cell);
}

Point unit_direction(const CoefficientSet& coeffs, Point x) {
  const Point b = coeffs.b(x);
  const double n = std::sqrt(dot(b, b));
  if (!(std::abs(n - 1.0) <= 1e-12))
    throw AssemblyError("field direction b is not a unit vector");
  return b;
}

void eval_coeffs(const CoeffContext& ctx, int cell, double dx, const CellGeometry& geom,
                 const PhysicalBasis& tb, std::vector<PointCoeff>& out) {
  const auto dofs = ctx.disc.t_space->cell_dofs(cell);
  const KappaModel& km = ctx.coeffs.kappa;
  const int k = ctx.disc.t_space->element().degree();
  const bool nonlinear = km.temperature_dependent();
  out.resize(tb.num_points);
  for (int q = 0; q < tb.num_points; ++q) {
    double T = 0.0;
    Point gT;
    if (nonlinear) {
      const Eigen::VectorXd& Tl = *ctx.T_lag;
      for (int i = 0; i < tb.num_basis; ++i) {
        const double c = Tl[dofs[i]];
        T += c * tb.value(i, q);
        gT = gT + c * tb.gradient(i, q);
      }
    }
    const double kpar = km.kappa_par(T);
    const double kd = std::max(kpar - km.kappa_perp(), 0.0);
    const double sq = std::sqrt(kd);
    PointCoeff& pc = out[q];
    pc.kd = kd;
    pc.s = sq * unit_direction(ctx.coeffs, geom.points[q]);
    pc.tau = 0.0;
    pc.s_grad_tau = 0.0;
    if (!ctx.with_tau) continue;
    if (ctx.coeffs.tau_override) {
      pc.tau = *ctx.coeffs.tau_override;
      continue;
    }
    pc.tau = supg_tau(ctx.dt, k, kd, dx);
    if (nonlinear && kd > 0.0) {
      const double dsq = km.kappa_par_derivative(T) / (2.0 * sq);
      pc.s_grad_tau = -pc.tau * pc.tau * (k / dx) * dsq * dot(pc.s, gT);
    }
  }
}

struct RawBlocks {
  SparseMatrix M_a, L, K, G, M_f, G_b;
};

struct Tabulations {
  Quadrature quad;
  Tabulation t;
  Tabulation z;
};

Tabulations make_tabulations(const Discretization& disc) {
  Tabulations tabs;
  tabs.quad = tensor_gauss(disc.quadrature_order());
  tabs.t = disc.t_space->element().tabulate(tabs.quad.points);
  if (disc.z_space) tabs.z = disc.z_space->element().tabulate(tabs.quad.points);
  return tabs;
}

enum BlockIndex { kMa = 0, kL, kK, kG, kMf, kNumBlocks };

// Edge reference points, tangent orientation (counterclockwise) per edge.
RefPoint edge_point(int edge, double s) {
  switch (edge) {
    case 0: return {s, -1.0};
    case 1: return {1.0, s};
    case 2: return {-s, 1.0};
    default: return {-1.0, -s};
  }
}

Point edge_tangent(int edge, const Jacobian& J) {
  const Point dxi{J.a[0][0], J.a[1][0]};
  const Point deta{J.a[0][1], J.a[1][1]};
  switch (edge) {
    case 0: return dxi;
    case 1: return deta;
    case 2: return -1.0 * dxi;
    default: return -1.0 * deta;
  }
}

SparseMatrix assemble_boundary_block(const CoeffContext& ctx) {
  const Discretization& disc = ctx.disc;
  const FunctionSpace& ts = *disc.t_space;
  const FunctionSpace& zs = *disc.z_space;
  const Mesh& mesh = ts.mesh();
  const Quadrature1D g = gauss_legendre(disc.quadrature_order());
  std::vector<Triplet> trip;
  std::vector<PointCoeff> pc;
  for (const BoundaryFacet& f : mesh.boundary_facets()) {
    std::vector<RefPoint> pts;
    for (double s : g.points) pts.push_back(edge_point(f.local_edge, s));
    const CellGeometry geom = cell_geometry(mesh, f.cell, pts);
    const PhysicalBasis tb = push_forward(ts.element().tabulate(pts), geom, false);
    const PhysicalBasis zb = push_forward(zs.element().tabulate(pts), geom, false);
    eval_coeffs(ctx, f.cell, cell_dx(ctx, f.cell), geom, tb, pc);
    const auto tdofs = ts.cell_dofs(f.cell);
    const auto zdofs = zs.cell_dofs(f.cell);
    for (int i = 0; i < zb.num_basis; ++i)
      for (int j = 0; j < tb.num_basis; ++j) {
        double v = 0.0;
        for (int q = 0; q < tb.num_points; ++q) {
          const Point t = edge_tangent(f.local_edge, geom.jacobians[q]);
          const double n_s = t.y * pc[q].s.x - t.x * pc[q].s.y;  // (n·s)|t|
          v += g.weights[q] * pc[q].tau * zb.value(i, q) * dot(pc[q].s, tb.gradient(j, q)) * n_s;
        }
        if (v != 0.0) trip.emplace_back(zdofs[i], tdofs[j], -v);
      }
  }
  return from_triplets(zs.num_dofs(), ts.num_dofs(), trip);
}

RawBlocks compute_blocks(const CoeffContext& ctx) {
  const Discretization& disc = ctx.disc;
  const FunctionSpace& ts = *disc.t_space;
  const Mesh& mesh = ts.mesh();
  const bool primal = disc.method == Method::Primal;
  const bool supg = disc.method == Method::Supg;
  const double kperp = ctx.coeffs.kappa.kappa_perp();
  const Tabulations tabs = make_tabulations(disc);
  const bool need_lap = supg && kperp != 0.0;

  auto make_kernel = [&]() {
    std::vector<PointCoeff> pc;
    return [&, pc](int c, Sink& sink) mutable {
      const CellGeometry geom = cell_geometry(mesh, c, tabs.quad.points);
      const PhysicalBasis tb = push_forward(tabs.t, geom, need_lap);
      eval_coeffs(ctx, c, cell_dx(ctx, c), geom, tb, pc);
      const int nq = tb.num_points;
      const int nt = tb.num_basis;
      std::vector<double> w(nq), sgphi(static_cast<std::size_t>(nt) * nq);
      for (int q = 0; q < nq; ++q) w[q] = tabs.quad.weights[q] * geom.dets[q];
      for (int i = 0; i < nt; ++i)
        for (int q = 0; q < nq; ++q) sgphi[i * nq + q] = dot(pc[q].s, tb.gradient(i, q));
      const auto tdofs = ts.cell_dofs(c);
      for (int i = 0; i < nt; ++i)
        for (int j = 0; j < nt; ++j) {
          double ma = 0, l = 0, kk = 0;
          for (int q = 0; q < nq; ++q) {
            const double test = tb.value(i, q) + pc[q].tau * sgphi[i * nq + q];
            ma += w[q] * test * tb.value(j, q);
            double lq = kperp * dot(tb.gradient(i, q), tb.gradient(j, q));
            if (need_lap) lq -= pc[q].tau * sgphi[i * nq + q] * kperp * tb.laplacian(j, q);
            l += w[q] * lq;
            if (primal) kk += w[q] * sgphi[i * nq + q] * sgphi[j * nq + q];
          }
          sink.mats[kMa].emplace_back(tdofs[i], tdofs[j], ma);
          sink.mats[kL].emplace_back(tdofs[i], tdofs[j], l);
          if (primal) sink.mats[kK].emplace_back(tdofs[i], tdofs[j], kk);
        }
      if (primal) return;
      const PhysicalBasis zb = push_forward(tabs.z, geom, false);
      const auto zdofs = disc.z_space->cell_dofs(c);
      const int nz = zb.num_basis;
      // ψ_i(1 + s·∇τ) + τ s·∇ψ_i
      std::vector<double> ztest(static_cast<std::size_t>(nz) * nq);
      for (int i = 0; i < nz; ++i)
        for (int q = 0; q < nq; ++q)
          ztest[i * nq + q] = zb.value(i, q) * (1.0 + pc[q].s_grad_tau) +
                              pc[q].tau * dot(pc[q].s, zb.gradient(i, q));
      for (int i = 0; i < nz; ++i) {
        for (int j = 0; j < nt; ++j) {
          double gv = 0;
          for (int q = 0; q < nq; ++q) gv += w[q] * sgphi[j * nq + q] * ztest[i * nq + q];
          sink.mats[kG].emplace_back(zdofs[i], tdofs[j], gv);
        }
        for (int j = 0; j < nz; ++j) {
          double mf = 0;
          for (int q = 0; q < nq; ++q) mf += w[q] * ztest[j * nq + q] * zb.value(i, q);
          sink.mats[kMf].emplace_back(zdofs[i], zdofs[j], mf);
        }
      }
    };
  };
  const Sink sink = for_cells(mesh.num_cells(), kNumBlocks, make_kernel);
  RawBlocks rb;
  const int n = ts.num_dofs();
  rb.M_a = from_triplets(n, n, sink.mats[kMa]);
  rb.L = from_triplets(n, n, sink.mats[kL]);
  if (primal) {
    rb.K = from_triplets(n, n, sink.mats[kK]);
    return rb;
  }
  const int nz = disc.z_space->num_dofs();
  rb.G = from_triplets(nz, n, sink.mats[kG]);
  rb.M_f = from_triplets(nz, nz, sink.mats[kMf]);
  if (supg)
    rb.G_b = assemble_boundary_block(ctx);
  else
    rb.G_b = SparseMatrix(nz, n);
  return rb;
}

void require_lag(const Discretization& disc, const Eigen::VectorXd* T_lag) {
  if (!T_lag) throw AssemblyError("lagged temperature is required");
  if (T_lag->size() != disc.t_space->num_dofs())
    throw AssemblyError("lagged temperature length does not match the temperature space");
}

void zero_rows(SparseMatrix& A, const std::vector<char>& mask) {
  for (int r = 0; r < A.outerSize(); ++r) {
    if (!mask[r]) continue;
    for (SparseMatrix::InnerIterator it(A, r); it; ++it) it.valueRef() = 0.0;
  }
}

}  // namespace

void set_assembly_threads(int n) { g_threads.store(std::max(n, 0)); }

int assembly_threads() {
  const int n = g_threads.load();
  return n > 0 ? n : default_threads();
}

SparseMatrix BlockSystem::monolithic() const {
  if (!has_aux()) return A11;
  const int nt = num_t();
  const int nz = num_z();
  std::vector<Triplet> t;
  t.reserve(A11.nonZeros() + A12.nonZeros() + A21.nonZeros() + A22.nonZeros());
  auto add = [&t](const SparseMatrix& A, int r0, int c0) {
    for (int r = 0; r < A.outerSize(); ++r)
      for (SparseMatrix::InnerIterator it(A, r); it; ++it)
        if (it.value() != 0.0) t.emplace_back(r0 + it.row(), c0 + it.col(), it.value());
  };
  add(A11, 0, 0);
  add(A12, 0, nt);
  add(A21, nt, 0);
  add(A22, nt, nt);
  return from_triplets(nt + nz, nt + nz, t);
}

Eigen::VectorXd BlockSystem::rhs() const {
  if (!has_aux()) return R_T;
  Eigen::VectorXd r(R_T.size() + R_z.size());
  r << R_T, R_z;
  return r;
}

Eigen::VectorXd assemble_load(const Discretization& disc, const CoefficientSet& coeffs,
                              const Eigen::VectorXd& T_lag, double dt, const ScalarFunction& source) {
  disc.validate();
  require_lag(disc, &T_lag);
  const int n = disc.t_space->num_dofs();
  if (!source) return Eigen::VectorXd::Zero(n);
  const CoeffContext ctx{disc, coeffs, &T_lag, dt, disc.method == Method::Supg};
  const Tabulations tabs = make_tabulations(disc);
  const FunctionSpace& ts = *disc.t_space;
  auto make_kernel = [&]() {
    std::vector<PointCoeff> pc;
    return [&, pc](int c, Sink& sink) mutable {
      const CellGeometry geom = cell_geometry(ts.mesh(), c, tabs.quad.points);
      const PhysicalBasis tb = push_forward(tabs.t, geom, false);
      if (ctx.with_tau) eval_coeffs(ctx, c, cell_dx(ctx, c), geom, tb, pc);
      const auto dofs = ts.cell_dofs(c);
      std::vector<double> sw(tb.num_points);
      for (int q = 0; q < tb.num_points; ++q)
        sw[q] = source(geom.points[q]) * tabs.quad.weights[q] * geom.dets[q];
      for (int i = 0; i < tb.num_basis; ++i) {
        double v = 0;
        for (int q = 0; q < tb.num_points; ++q) {
          double test = tb.value(i, q);
          if (ctx.with_tau) test += pc[q].tau * dot(pc[q].s, tb.gradient(i, q));
          v += test * sw[q];
        }
        sink.vec.emplace_back(dofs[i], v);
      }
    };
  };
  return from_entries(n, for_cells(ts.mesh().num_cells(), 0, make_kernel).vec);
}

void update_rhs(BlockSystem& sys, const Eigen::VectorXd& T_old, const Eigen::VectorXd& load) {
  sys.R_T = sys.history * T_old + load - sys.lifting;
  for (std::size_t i = 0; i < sys.dirichlet_dofs.size(); ++i)
    sys.R_T[sys.dirichlet_dofs[i]] = sys.dirichlet_values[static_cast<Eigen::Index>(i)];
}

BlockSystem assemble_system(const Discretization& disc, const CoefficientSet& coeffs,
                            const SystemInputs& in) {
  disc.validate();
  if (!(in.dt > 0.0)) throw AssemblyError("time step must be positive");
  require_lag(disc, in.T_lag);
  if (!coeffs.b) throw AssemblyError("field direction b is not set");
  coeffs.kappa.validate();
  const FunctionSpace& ts = *disc.t_space;
  const int n = ts.num_dofs();
  const CoeffContext ctx{disc, coeffs, in.T_lag, in.dt, disc.method == Method::Supg};
  RawBlocks rb = compute_blocks(ctx);

  BlockSystem sys;
  sys.method = disc.method;
  SparseMatrix A11 = in.mass_scale * rb.M_a + rb.L;
  if (disc.method == Method::Primal) A11 += rb.K;
  sys.history = in.mass_scale * rb.M_a;

  std::vector<char> mask(n, 0);
  sys.dirichlet_dofs = ts.boundary_dofs();
  sys.dirichlet_values.resize(static_cast<Eigen::Index>(sys.dirichlet_dofs.size()));
  Eigen::VectorXd g = Eigen::VectorXd::Zero(n);
  for (std::size_t i = 0; i < sys.dirichlet_dofs.size(); ++i) {
    const int d = sys.dirichlet_dofs[i];
    mask[d] = 1;
    const double v = in.boundary ? (*in.boundary)[d] : 0.0;
    sys.dirichlet_values[static_cast<Eigen::Index>(i)] = v;
    g[d] = v;
  }

  sys.lifting = Eigen::VectorXd::Zero(n);
  if (disc.method == Method::Primal && !sys.dirichlet_dofs.empty()) {
    sys.lifting = A11 * g;
    for (int d : sys.dirichlet_dofs) sys.lifting[d] = 0.0;
    for (int r = 0; r < A11.outerSize(); ++r) {
      if (mask[r]) continue;
      for (SparseMatrix::InnerIterator it(A11, r); it; ++it)
        if (mask[it.col()]) it.valueRef() = 0.0;
    }
  }
  zero_rows(A11, mask);
  for (int d : sys.dirichlet_dofs) A11.coeffRef(d, d) = 1.0;
  A11.prune(0.0);
  zero_rows(sys.history, mask);
  sys.history.prune(0.0);
  sys.A11 = std::move(A11);

  if (disc.method != Method::Primal) {
    SparseMatrix A12 = SparseMatrix(rb.G.transpose());
    zero_rows(A12, mask);
    A12.prune(0.0);
    sys.A12 = std::move(A12);
    sys.A21 = -(rb.G + rb.G_b);
    sys.A22 = std::move(rb.M_f);
    sys.R_z = Eigen::VectorXd::Zero(sys.A22.rows());
  }

  Eigen::VectorXd load = assemble_load(disc, coeffs, *in.T_lag, in.dt, in.source);
  const Eigen::VectorXd T_old = in.T_old ? *in.T_old : Eigen::VectorXd::Zero(n);
  update_rhs(sys, T_old, load);
  return sys;
}

SparseMatrix assemble_mass(const FunctionSpace& space, const ScalarFunction& weight, int quad_order) {
  const int order = quad_order > 0 ? quad_order : default_quadrature_order(space);
  const Quadrature quad = tensor_gauss(order);
  const Tabulation tab = space.element().tabulate(quad.points);
  auto make_kernel = [&]() {
    return [&](int c, Sink& sink) {
      const CellGeometry geom = cell_geometry(space.mesh(), c, quad.points);
      const auto dofs = space.cell_dofs(c);
      std::vector<double> w(tab.num_points);
      for (int q = 0; q < tab.num_points; ++q)
        w[q] = quad.weights[q] * geom.dets[q] * (weight ? weight(geom.points[q]) : 1.0);
      for (int i = 0; i < tab.num_basis; ++i)
        for (int j = 0; j < tab.num_basis; ++j) {
          double v = 0;
          for (int q = 0; q < tab.num_points; ++q) v += w[q] * tab.value(i, q) * tab.value(j, q);
          sink.mats[0].emplace_back(dofs[i], dofs[j], v);
        }
    };
  };
  const Sink s = for_cells(space.mesh().num_cells(), 1, make_kernel);
  return from_triplets(space.num_dofs(), space.num_dofs(), s.mats[0]);
}

SparseMatrix assemble_perp_stiffness(const FunctionSpace& space, double kappa_perp, int quad_order) {
  if (kappa_perp < 0.0) throw AssemblyError("kappa_perp must be non-negative");
  const int order = quad_order > 0 ? quad_order : default_quadrature_order(space);
  const Quadrature quad = tensor_gauss(order);
  const Tabulation tab = space.element().tabulate(quad.points);
  auto make_kernel = [&]() {
    return [&](int c, Sink& sink) {
      const CellGeometry geom = cell_geometry(space.mesh(), c, quad.points);
      const PhysicalBasis pb = push_forward(tab, geom, false);
      const auto dofs = space.cell_dofs(c);
      for (int i = 0; i < pb.num_basis; ++i)
        for (int j = 0; j < pb.num_basis; ++j) {
          double v = 0;
          for (int q = 0; q < pb.num_points; ++q)
            v += quad.weights[q] * geom.dets[q] * kappa_perp * dot(pb.gradient(i, q), pb.gradient(j, q));
          sink.mats[0].emplace_back(dofs[i], dofs[j], v);
        }
    };
  };
  const Sink s = for_cells(space.mesh().num_cells(), 1, make_kernel);
  return from_triplets(space.num_dofs(), space.num_dofs(), s.mats[0]);
}

SparseMatrix assemble_dir_gradient(const FunctionSpace& t_space, const FunctionSpace& z_space,
                                   const VectorFunction& s, int quad_order) {
  if (t_space.mesh_ptr() != z_space.mesh_ptr())
    throw AssemblyError("spaces live on different meshes");
  const int order = quad_order > 0 ? quad_order : default_quadrature_order(t_space);
  const Quadrature quad = tensor_gauss(order);
  const Tabulation tt = t_space.element().tabulate(quad.points);
  const Tabulation tz = z_space.element().tabulate(quad.points);
  auto make_kernel = [&]() {
    return [&](int c, Sink& sink) {
      const CellGeometry geom = cell_geometry(t_space.mesh(), c, quad.points);
      const PhysicalBasis pb = push_forward(tt, geom, false);
      const auto td = t_space.cell_dofs(c);
      const auto zd = z_space.cell_dofs(c);
      std::vector<Point> sq(pb.num_points);
      for (int q = 0; q < pb.num_points; ++q) sq[q] = s(geom.points[q]);
      for (int i = 0; i < tz.num_basis; ++i)
        for (int j = 0; j < pb.num_basis; ++j) {
          double v = 0;
          for (int q = 0; q < pb.num_points; ++q)
            v += quad.weights[q] * geom.dets[q] * tz.value(i, q) * dot(sq[q], pb.gradient(j, q));
          sink.mats[0].emplace_back(zd[i], td[j], v);
        }
    };
  };
  const Sink sk = for_cells(t_space.mesh().num_cells(), 1, make_kernel);
  return from_triplets(z_space.num_dofs(), t_space.num_dofs(), sk.mats[0]);
}

SupgBlocks assemble_supg_blocks(const Discretization& disc, const CoefficientSet& coeffs,
                                const Eigen::VectorXd& T_lag, double dt) {
  disc.validate();
  if (disc.method != Method::Supg) throw AssemblyError("supg blocks need a supg discretization");
  if (!(dt > 0.0)) throw AssemblyError("time step must be positive");
  require_lag(disc, &T_lag);
  const CoeffContext ctx{disc, coeffs, &T_lag, dt, true};
  RawBlocks rb = compute_blocks(ctx);
  return {std::move(rb.M_a), std::move(rb.M_f), std::move(rb.G), std::move(rb.G_b), std::move(rb.L)};
}

Eigen::MatrixXd schur_complement(const BlockSystem& sys) {
  const Eigen::MatrixXd A11 = Eigen::MatrixXd(sys.A11);
  if (!sys.has_aux()) return A11;
  Eigen::SparseMatrix<double> A22(sys.A22);
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(A22);
  if (lu.info() != Eigen::Success) throw AssemblyError("auxiliary block is singular");
  const Eigen::MatrixXd A21 = Eigen::MatrixXd(sys.A21);
  const Eigen::MatrixXd X = lu.solve(A21);
  if (lu.info() != Eigen::Success || !X.allFinite()) throw AssemblyError("auxiliary block is singular");
  return A11 - Eigen::MatrixXd(sys.A12) * X;
}

void write_matrix_market(const SparseMatrix& A, std::ostream& out) {
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << A.rows() << ' ' << A.cols() << ' ' << A.nonZeros() << '\n';
  out.precision(17);
  for (int r = 0; r < A.outerSize(); ++r)
    for (SparseMatrix::InnerIterator it(A, r); it; ++it)
      out << it.row() + 1 << ' ' << it.col() + 1 << ' ' << it.value() << '\n';
}

}  // namespace anisoflux
