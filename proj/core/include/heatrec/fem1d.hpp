#pragma once

#include <functional>

#include "heatrec/linalg.hpp"

namespace heatrec::fem {

/// Uniform mesh of (0,1). Degrees of freedom are the interior nodes
/// x_i = i*h, i = 1..n_cells-1; homogeneous Dirichlet values at 0 and 1 are
/// eliminated from all assembled operators.
struct Mesh1D {
  explicit Mesh1D(int n_cells = 2);

  int n_cells;
  double h;

  int n_interior() const { return n_cells - 1; }
  double node(int i) const { return i * h; }  // i in [0, n_cells]
};

/// Symmetric interior observation window (a, 1-a). a = 0 degenerates to the
/// full domain, which is allowed for cross-checks against the plain mass
/// matrix.
struct ObservationWindow {
  explicit ObservationWindow(double a = 0.2);

  double a;
  double lo() const { return a; }
  double hi() const { return 1.0 - a; }
};

/// Piecewise-linear function on a mesh, stored by interior nodal values.
struct NodalField {
  Mesh1D mesh;
  linalg::DenseVector coeffs;  // size mesh.n_interior()

  NodalField(const Mesh1D& m, linalg::DenseVector c);
  static NodalField zeros(const Mesh1D& m);

  /// Evaluate at x in [0,1]; zero at and beyond the boundary.
  double eval(double x) const;
};

using ScalarFn = std::function<double(double)>;

/// 5-point Gauss-Legendre quadrature on [a, b] (exact through degree 9).
double integrate_gauss5(const ScalarFn& f, double a, double b);

/// Tridiagonal mass matrix: 2h/3 on the diagonal, h/6 off it.
linalg::SparseSymMatrix assemble_mass(const Mesh1D& mesh);

/// Tridiagonal stiffness matrix: 2/h on the diagonal, -1/h off it.
linalg::SparseSymMatrix assemble_stiffness(const Mesh1D& mesh);

/// Mass matrix of the window: entries are integrals of basis products over
/// the intersection of each cell with (a, 1-a), integrated exactly.
linalg::SparseSymMatrix assemble_obs_mass(const Mesh1D& mesh, const ObservationWindow& w);

/// Nodal interpolant of u (u must vanish at the boundary to be represented
/// faithfully; boundary values are dropped).
NodalField interpolate_nodal(const Mesh1D& mesh, const ScalarFn& u);

/// Stiffness-orthogonal projection onto the mesh: solves a(p, phi_i) =
/// integral of du * phi_i' for all interior basis functions, with the right
/// side assembled by per-cell Gauss quadrature of the derivative du.
NodalField ritz_project(const Mesh1D& mesh, const ScalarFn& u, const ScalarFn& du);

/// L2(0,1) distance between a nodal field and a callable, by per-cell
/// 5-point Gauss quadrature.
double l2_error_vs_exact(const NodalField& v, const ScalarFn& u_exact);

}  // namespace heatrec::fem
