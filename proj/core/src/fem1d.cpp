#include "heatrec/fem1d.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace heatrec::fem {

Mesh1D::Mesh1D(int cells) : n_cells(cells), h(1.0 / cells) {
  if (cells < 2) throw std::invalid_argument("Mesh1D: need at least 2 cells");
}

ObservationWindow::ObservationWindow(double a_) : a(a_) {
  if (!(a >= 0.0 && a < 0.5))
    throw std::invalid_argument("ObservationWindow: a must lie in [0, 1/2)");
}

NodalField::NodalField(const Mesh1D& m, linalg::DenseVector c) : mesh(m), coeffs(std::move(c)) {
  if (static_cast<int>(coeffs.size()) != mesh.n_interior())
    throw std::invalid_argument("NodalField: coefficient count does not match the mesh");
}

NodalField NodalField::zeros(const Mesh1D& m) {
  return NodalField(m, linalg::DenseVector(m.n_interior(), 0.0));
}

double NodalField::eval(double x) const {
  if (x <= 0.0 || x >= 1.0) return 0.0;
  int cell = std::min(static_cast<int>(x / mesh.h), mesh.n_cells - 1);
  const double xl = cell * mesh.h;
  const double vl = cell == 0 ? 0.0 : coeffs[cell - 1];
  const double vr = cell + 1 == mesh.n_cells ? 0.0 : coeffs[cell];
  return vl + (vr - vl) * (x - xl) / mesh.h;
}

namespace {

// Gauss-Legendre nodes/weights on [-1, 1], n = 5.
constexpr double kG5X[5] = {0.0, -0.5384693101056831, 0.5384693101056831,
                            -0.9061798459386640, 0.9061798459386640};
constexpr double kG5W[5] = {0.5688888888888889, 0.4786286704993665, 0.4786286704993665,
                            0.2369268850561891, 0.2369268850561891};

}  // namespace

double integrate_gauss5(const ScalarFn& f, double a, double b) {
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  double s = 0.0;
  for (int g = 0; g < 5; ++g) s += kG5W[g] * f(mid + half * kG5X[g]);
  return half * s;
}

linalg::SparseSymMatrix assemble_mass(const Mesh1D& mesh) {
  const int nd = mesh.n_interior();
  linalg::SparseSymMatrix m(nd);
  const double h = mesh.h;
  for (int c = 0; c < mesh.n_cells; ++c) {
    const int l = c - 1, r = c;  // interior DOF indices of the cell's endpoints
    if (l >= 0) m.add(l, l, h / 3.0);
    if (r < nd) m.add(r, r, h / 3.0);
    if (l >= 0 && r < nd) m.add(l, r, h / 6.0);
  }
  m.finalize();
  return m;
}

linalg::SparseSymMatrix assemble_stiffness(const Mesh1D& mesh) {
  const int nd = mesh.n_interior();
  linalg::SparseSymMatrix a(nd);
  const double ih = 1.0 / mesh.h;
  for (int c = 0; c < mesh.n_cells; ++c) {
    const int l = c - 1, r = c;
    if (l >= 0) a.add(l, l, ih);
    if (r < nd) a.add(r, r, ih);
    if (l >= 0 && r < nd) a.add(l, r, -ih);
  }
  a.finalize();
  return a;
}

linalg::SparseSymMatrix assemble_obs_mass(const Mesh1D& mesh, const ObservationWindow& w) {
  const int nd = mesh.n_interior();
  linalg::SparseSymMatrix m(nd);
  const double h = mesh.h;
  // 2-point Gauss is exact for the quadratic basis products on each
  // sub-interval of a cell clipped by the window.
  const double g = 1.0 / std::sqrt(3.0);
  for (int c = 0; c < mesh.n_cells; ++c) {
    const double xl = c * h, xr = xl + h;
    const double lo = std::max(xl, w.lo());
    const double hi = std::min(xr, w.hi());
    if (hi <= lo) continue;
    const double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
    double ll = 0.0, lr = 0.0, rr = 0.0;
    for (double sgn : {-1.0, 1.0}) {
      const double x = mid + sgn * half * g;
      const double pl = (xr - x) / h;
      const double pr = (x - xl) / h;
      ll += half * pl * pl;
      lr += half * pl * pr;
      rr += half * pr * pr;
    }
    const int l = c - 1, r = c;
    if (l >= 0) m.add(l, l, ll);
    if (r < nd) m.add(r, r, rr);
    if (l >= 0 && r < nd) m.add(l, r, lr);
  }
  m.finalize();
  return m;
}

NodalField interpolate_nodal(const Mesh1D& mesh, const ScalarFn& u) {
  linalg::DenseVector c(mesh.n_interior());
  for (int i = 1; i < mesh.n_cells; ++i) c[i - 1] = u(mesh.node(i));
  if (!linalg::all_finite(c))
    throw std::invalid_argument("interpolate_nodal: non-finite sample");
  return NodalField(mesh, std::move(c));
}

NodalField ritz_project(const Mesh1D& mesh, const ScalarFn& u, const ScalarFn& du) {
  (void)u;  // the projection depends on u only through du
  const int nd = mesh.n_interior();
  linalg::DenseVector rhs(nd, 0.0);
  const double ih = 1.0 / mesh.h;
  for (int c = 0; c < mesh.n_cells; ++c) {
    const double gc = integrate_gauss5(du, c * mesh.h, (c + 1) * mesh.h);
    const int l = c - 1, r = c;
    if (l >= 0) rhs[l] -= gc * ih;  // left hat decreases across the cell
    if (r < nd) rhs[r] += gc * ih;
  }
  if (!linalg::all_finite(rhs))
    throw std::invalid_argument("ritz_project: non-finite quadrature of the derivative");

  auto stiffness = assemble_stiffness(mesh);
  linalg::DenseVector x(nd, 0.0);
  auto rep = linalg::cg_solve(stiffness, rhs, x, {1e-12, 0});
  if (!rep.converged) throw std::runtime_error("ritz_project: stiffness solve failed");
  return NodalField(mesh, std::move(x));
}

double l2_error_vs_exact(const NodalField& v, const ScalarFn& u_exact) {
  const Mesh1D& mesh = v.mesh;
  double err2 = 0.0;
  for (int c = 0; c < mesh.n_cells; ++c) {
    auto diff2 = [&](double x) {
      const double d = v.eval(x) - u_exact(x);
      return d * d;
    };
    err2 += integrate_gauss5(diff2, c * mesh.h, (c + 1) * mesh.h);
  }
  return std::sqrt(err2);
}

}  // namespace heatrec::fem
