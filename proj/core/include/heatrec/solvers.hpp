#pragma once

#include <vector>

#include "heatrec/fem1d.hpp"
#include "heatrec/forms.hpp"
#include "heatrec/linalg.hpp"

namespace heatrec::solvers {

/// Options for the per-step SPD solves (M + tau A and mass solves).
/// max_iterations == 0 selects the CG default of 10 * dim.
struct StepSolverOptions {
  double tol = 1e-10;
  int max_iterations = 0;
};

/// Options for the monolithic MINRES solve of the coupled optimality system.
struct MonolithicOptions {
  double tol = 1e-8;
  int max_iterations = 50000;
};

enum class StopReason {
  converged,       // residual criterion met
  z1_increase,     // |z^1|_M started to increase; pre-increase iterate returned
  max_iterations,  // iteration budget exhausted; best iterate returned
};

/// Options for gradient descent on the initial value. The primary stop rule
/// halts when |z^1|_M increases between iterates and returns the iterate
/// before the increase; coupling_tol is an absolute floor on |C|_2 that also
/// terminates (it is the rule that fires when starting at the solution).
struct GdOptions {
  double alpha = 0.1;
  int max_iterations = 10000;
  double coupling_tol = 1e-10;
  bool stop_on_z1_increase = true;
  StepSolverOptions inner{};
};

/// Result of either solution strategy. For gradient descent, z1_history,
/// coupling_history and lagrangian_history record |z^1|_M, |C|_2 and the
/// Lagrangian at each visited iterate (including the returned one).
struct AssimSolution {
  forms::SpaceTimeState u;
  forms::DualState z;
  linalg::SolveReport report;
  double lagrangian = 0.0;
  StopReason stop = StopReason::converged;
  std::vector<double> z1_history;
  std::vector<double> coupling_history;
  std::vector<double> lagrangian_history;
};

/// Implicit Euler march: u^0 = phi, (M + tau A) u^n = M u^{n-1} + tau M f^n.
/// `warm` (same shape) seeds the per-level CG solves when given.
forms::SpaceTimeState forward_heat(const forms::Discretization& d, const fem::NodalField& phi,
                                   const forms::ProblemData& data,
                                   const StepSolverOptions& opt = {},
                                   const forms::SpaceTimeState* warm = nullptr);

/// Backward dual march with z^{N+1} = 0 and the convention du^{N+1} = 0:
/// (M + tau A) z^n = M z^{n+1} + gamma_m tau W (q^n - u^n)
///                   - gamma_1 tau^2 A (du^n - du^{n+1}),   n = N..1.
forms::DualState backward_dual(const forms::Discretization& d, const forms::SpaceTimeState& u,
                               const forms::ProblemData& data,
                               const StepSolverOptions& opt = {},
                               const forms::DualState* warm = nullptr);

/// Coupling functional of the one-way splitting, as a vector over the nodal
/// basis: C_i = gamma_0 h^2 (A u^0)_i - gamma_1 tau (A (u^1 - u^0))_i
/// - (M z^1)_i. The pair (u, z) solves the full optimality system exactly
/// when this vanishes.
linalg::DenseVector coupling_functional(const forms::Discretization& d,
                                        const forms::SpaceTimeState& u,
                                        const forms::DualState& z);

/// Max over levels n = 1..N of |(M + tau A) u^n - M u^{n-1} - tau M f^n|_2;
/// measures how well a trajectory satisfies the discrete heat equation.
double heat_residual(const forms::Discretization& d, const forms::SpaceTimeState& u,
                     const forms::ProblemData& data);

/// Monolithic strategy: assemble the coupled optimality system and run MINRES
/// from a zero initial guess. Non-convergence is reported, not thrown; the
/// last iterate is still returned (this is the expected outcome when the
/// initial regularization is switched off).
AssimSolution solve_monolithic(const forms::Discretization& d, const forms::ProblemData& data,
                               const MonolithicOptions& opt = {});

/// Dense LU on the assembled optimality system; exact reference for small
/// instances (dimension capped by linalg::kDenseSolveCap).
AssimSolution solve_direct(const forms::Discretization& d, const forms::ProblemData& data);

/// One-way strategy: gradient descent phi_{m+1} = phi_m - alpha M^{-1} C(phi_m)
/// where each evaluation runs forward_heat + backward_dual.
AssimSolution solve_gradient_descent(const forms::Discretization& d,
                                     const forms::ProblemData& data,
                                     const fem::NodalField& phi0, const GdOptions& opt = {});

}  // namespace heatrec::solvers
