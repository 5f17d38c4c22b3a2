#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "heatrec/fem1d.hpp"
#include "heatrec/linalg.hpp"

namespace heatrec::forms {

/// Parameters of one reconstruction problem: misfit weight gamma_m, initial
/// gradient penalty gamma_0, time-increment gradient penalty gamma_1, and the
/// uniform time grid t_n = n * tau, tau = final_time / n_steps.
///
/// gamma_m > 0 and gamma_0 > 0 are required (gamma_1 >= 0 may vanish);
/// allow_zero_gamma0 lifts the gamma_0 check so the unregularized breakdown
/// can be demonstrated deliberately.
struct AssimConfig {
  double gamma_m = 1.0;
  double gamma_0 = 1.0;
  double gamma_1 = 0.0;
  int n_steps = 1;
  double final_time = 1.0;
  fem::Mesh1D mesh{2};
  fem::ObservationWindow window{0.2};
  bool allow_zero_gamma0 = false;

  double tau() const { return final_time / n_steps; }
  void validate() const;  // throws std::invalid_argument on violations
};

/// Primal trajectory u^0..u^N of interior nodal vectors on a shared mesh.
struct SpaceTimeState {
  fem::Mesh1D mesh{2};
  std::vector<linalg::DenseVector> levels;  // size n_steps + 1

  static SpaceTimeState zeros(const fem::Mesh1D& m, int n_steps);

  int n_steps() const { return static_cast<int>(levels.size()) - 1; }
  const linalg::DenseVector& at(int n) const { return levels.at(n); }
  linalg::DenseVector& at(int n) { return levels.at(n); }
};

/// Dual trajectory z^1..z^N; the closing value z^{N+1} = 0 is implicit.
struct DualState {
  fem::Mesh1D mesh{2};
  std::vector<linalg::DenseVector> levels;  // size n_steps, index n-1 <-> z^n

  static DualState zeros(const fem::Mesh1D& m, int n_steps);

  int n_steps() const { return static_cast<int>(levels.size()); }
  const linalg::DenseVector& at(int n) const { return levels.at(n - 1); }
  linalg::DenseVector& at(int n) { return levels.at(n - 1); }
};

/// Source and observation samples at t_1..t_N (nodal coefficients).
struct ProblemData {
  std::vector<linalg::DenseVector> f_levels;
  std::vector<linalg::DenseVector> q_levels;

  static ProblemData zeros(const fem::Mesh1D& m, int n_steps);

  int n_steps() const { return static_cast<int>(f_levels.size()); }
  const linalg::DenseVector& f(int n) const { return f_levels.at(n - 1); }
  const linalg::DenseVector& q(int n) const { return q_levels.at(n - 1); }
};

/// A validated configuration together with its assembled spatial operators
/// (mass, stiffness, window mass). Everything downstream works off this.
class Discretization {
 public:
  explicit Discretization(AssimConfig cfg);

  const AssimConfig& config() const { return cfg_; }
  const fem::Mesh1D& mesh() const { return cfg_.mesh; }
  double tau() const { return cfg_.tau(); }
  int n_steps() const { return cfg_.n_steps; }
  int n_dof() const { return cfg_.mesh.n_interior(); }

  const linalg::SparseSymMatrix& mass() const { return mass_; }
  const linalg::SparseSymMatrix& stiffness() const { return stiffness_; }
  const linalg::SparseSymMatrix& obs_mass() const { return obs_mass_; }

 private:
  AssimConfig cfg_;
  linalg::SparseSymMatrix mass_, stiffness_, obs_mass_;
};

/// Backward difference (u^n - u^{n-1}) / tau, n in [1, n_steps].
linalg::DenseVector time_derivative(const SpaceTimeState& u, int n, double tau);

/// Piecewise-linear-in-time sample of the trajectory at t in [0, T].
linalg::DenseVector sample_in_time(const SpaceTimeState& u, double tau, double t);

/// Objective-plus-constraint functional driving the whole scheme:
/// misfit on the window, gradient penalties on u^0 and on the scaled time
/// increments, and the weak residual of the implicit Euler heat equation
/// tested with z.
double lagrangian_value(const Discretization& d, const SpaceTimeState& u, const DualState& z,
                        const ProblemData& data);

/// Heat-residual pairing: A1(u, w) = tau * sum_n [(du^n, w^n) + a(u^n, w^n)].
double form_a1(const Discretization& d, const SpaceTimeState& u, const DualState& w);

/// Derivative pairing of the Lagrangian in u: penalties tested with v plus
/// the adjoint coupling of v with z.
double form_a2(const Discretization& d, const SpaceTimeState& u, const DualState& z,
               const SpaceTimeState& v);

/// Residual-type seminorm |u|_R: window misfit mass, gamma_0 and gamma_1
/// penalty terms. A norm whenever gamma_1 > 0.
double seminorm_r(const Discretization& d, const SpaceTimeState& u);

/// Stability norm |(u,z)|_D used by the coercivity certificate.
double norm_d(const Discretization& d, const SpaceTimeState& u, const DualState& z);

/// Continuity norm |(v,w)|_C = sqrt(|v|_R^2 + tau * sum |w^n|^2).
double norm_c(const Discretization& d, const SpaceTimeState& v, const DualState& w);

/// Flat ordering of the coupled unknowns: all u-levels (time-major,
/// node-minor), then all z-levels. Keeps block extraction in tests trivial.
struct KktIndexMap {
  int n_steps = 0;
  int n_dof = 0;

  std::size_t size() const {
    return static_cast<std::size_t>(2 * n_steps + 1) * static_cast<std::size_t>(n_dof);
  }
  std::size_t u_index(int level, int node) const {  // level in [0, N]
    return static_cast<std::size_t>(level) * n_dof + node;
  }
  std::size_t z_index(int level, int node) const {  // level in [1, N]
    return static_cast<std::size_t>(n_steps + level) * n_dof + node;
  }
};

/// First-order optimality system of the Lagrangian: symmetric indefinite,
/// primal penalties in the upper-left block, the heat constraint and its
/// transpose coupling u and z.
struct KktSystem {
  KktIndexMap map;
  linalg::SparseSymMatrix matrix;
  linalg::DenseVector rhs;

  KktSystem(KktIndexMap m, linalg::SparseSymMatrix mat, linalg::DenseVector r)
      : map(m), matrix(std::move(mat)), rhs(std::move(r)) {}
};

KktSystem assemble_kkt(const Discretization& d, const ProblemData& data);

linalg::DenseVector flatten(const KktIndexMap& map, const SpaceTimeState& u, const DualState& z);
std::pair<SpaceTimeState, DualState> unflatten(const KktIndexMap& map, const fem::Mesh1D& mesh,
                                               const linalg::DenseVector& x);

/// Test pair (v, w) certifying coercivity: v^0 = u^0, v^n = u^n + alpha z^n,
/// w^n = -z^n + alpha h^2 du^n. For alpha in a suitable range,
/// (|u|_R^2 + alpha |(u,z)|_D^2) / 2 <= A1(u, w) + A2((u,z), v).
std::pair<SpaceTimeState, DualState> coercivity_witness(const Discretization& d,
                                                        const SpaceTimeState& u,
                                                        const DualState& z, double alpha);

}  // namespace heatrec::forms
