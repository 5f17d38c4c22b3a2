#include "heatrec/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

namespace heatrec::solvers {

namespace {

using forms::Discretization;
using forms::DualState;
using forms::ProblemData;
using forms::SpaceTimeState;
using linalg::DenseVector;

linalg::SparseSymMatrix step_matrix(const Discretization& d) {
  // M + tau A, the SPD matrix of one implicit Euler step
  linalg::SparseSymMatrix s(d.n_dof());
  d.mass().for_each_upper([&](std::size_t i, std::size_t j, double v) { s.add(i, j, v); });
  d.stiffness().for_each_upper(
      [&](std::size_t i, std::size_t j, double v) { s.add(i, j, d.tau() * v); });
  s.finalize();
  return s;
}

void require_converged(const linalg::SolveReport& rep, const char* where, int level) {
  if (!rep.converged)
    throw std::runtime_error(std::string(where) + ": inner CG did not converge at level " +
                             std::to_string(level));
}

double mass_norm(const Discretization& d, const DenseVector& v) {
  return std::sqrt(std::max(0.0, d.mass().quad_form(v)));
}

void check_phi(const Discretization& d, const fem::NodalField& phi, const char* where) {
  if (phi.mesh.n_cells != d.mesh().n_cells ||
      static_cast<int>(phi.coeffs.size()) != d.n_dof())
    throw std::invalid_argument(std::string(where) + ": initial value does not match the mesh");
}

}  // namespace

forms::SpaceTimeState forward_heat(const Discretization& d, const fem::NodalField& phi,
                                   const ProblemData& data, const StepSolverOptions& opt,
                                   const SpaceTimeState* warm) {
  check_phi(d, phi, "forward_heat");
  if (data.n_steps() != d.n_steps())
    throw std::invalid_argument("forward_heat: data does not match the time grid");

  const auto S = step_matrix(d);
  const double tau = d.tau();
  SpaceTimeState u = SpaceTimeState::zeros(d.mesh(), d.n_steps());
  u.at(0) = phi.coeffs;

  DenseVector tmp(d.n_dof());
  const linalg::CgOptions cg{opt.tol, opt.max_iterations};
  for (int n = 1; n <= d.n_steps(); ++n) {
    // rhs = M (u^{n-1} + tau f^n)
    const auto& fn = data.f(n);
    for (int i = 0; i < d.n_dof(); ++i) tmp[i] = u.at(n - 1)[i] + tau * fn[i];
    DenseVector rhs = d.mass().apply(tmp);

    DenseVector x = warm ? warm->at(n) : u.at(n - 1);
    require_converged(cg_solve(S, rhs, x, cg), "forward_heat", n);
    u.at(n) = std::move(x);
  }
  return u;
}

forms::DualState backward_dual(const Discretization& d, const SpaceTimeState& u,
                               const ProblemData& data, const StepSolverOptions& opt,
                               const DualState* warm) {
  if (u.n_steps() != d.n_steps() || data.n_steps() != d.n_steps())
    throw std::invalid_argument("backward_dual: shapes do not match the time grid");

  const auto S = step_matrix(d);
  const auto& cfg = d.config();
  const double tau = d.tau();
  const int N = d.n_steps();

  DualState z = DualState::zeros(d.mesh(), N);
  DenseVector znext(d.n_dof(), 0.0);  // z^{N+1} = 0
  DenseVector diff(d.n_dof());
  const linalg::CgOptions cg{opt.tol, opt.max_iterations};

  for (int n = N; n >= 1; --n) {
    DenseVector rhs = d.mass().apply(znext);

    const auto& qn = data.q(n);
    for (int i = 0; i < d.n_dof(); ++i) diff[i] = qn[i] - u.at(n)[i];
    DenseVector wq = d.obs_mass().apply(diff);
    linalg::axpy(cfg.gamma_m * tau, wq, rhs);

    if (cfg.gamma_1 > 0.0) {
      // tau^2 (du^n - du^{n+1}) with du^{N+1} = 0, i.e. tau (u^n - u^{n-1})
      // minus tau (u^{n+1} - u^n) for n < N
      for (int i = 0; i < d.n_dof(); ++i) {
        double v = u.at(n)[i] - u.at(n - 1)[i];
        if (n < N) v -= u.at(n + 1)[i] - u.at(n)[i];
        diff[i] = v;
      }
      DenseVector ad = d.stiffness().apply(diff);
      linalg::axpy(-cfg.gamma_1 * tau, ad, rhs);
    }

    DenseVector x = warm ? warm->at(n) : znext;
    require_converged(cg_solve(S, rhs, x, cg), "backward_dual", n);
    znext = x;
    z.at(n) = std::move(x);
  }
  return z;
}

linalg::DenseVector coupling_functional(const Discretization& d, const SpaceTimeState& u,
                                        const DualState& z) {
  if (u.n_steps() != d.n_steps() || z.n_steps() != d.n_steps())
    throw std::invalid_argument("coupling_functional: shapes do not match the time grid");
  const auto& cfg = d.config();
  const double h = d.mesh().h;

  DenseVector c = d.stiffness().apply(u.at(0));
  linalg::scale(cfg.gamma_0 * h * h, c);

  if (cfg.gamma_1 > 0.0) {
    DenseVector incr(d.n_dof());
    for (int i = 0; i < d.n_dof(); ++i) incr[i] = u.at(1)[i] - u.at(0)[i];
    DenseVector ai = d.stiffness().apply(incr);
    linalg::axpy(-cfg.gamma_1 * d.tau(), ai, c);
  }

  DenseVector mz = d.mass().apply(z.at(1));
  linalg::axpy(-1.0, mz, c);
  return c;
}

double heat_residual(const Discretization& d, const SpaceTimeState& u, const ProblemData& data) {
  const auto S = step_matrix(d);
  const double tau = d.tau();
  DenseVector tmp(d.n_dof());
  double worst = 0.0;
  for (int n = 1; n <= d.n_steps(); ++n) {
    const auto& fn = data.f(n);
    for (int i = 0; i < d.n_dof(); ++i) tmp[i] = u.at(n - 1)[i] + tau * fn[i];
    DenseVector r = S.apply(u.at(n));
    DenseVector m = d.mass().apply(tmp);
    linalg::axpy(-1.0, m, r);
    worst = std::max(worst, linalg::norm2(r));
  }
  return worst;
}

AssimSolution solve_monolithic(const Discretization& d, const ProblemData& data,
                               const MonolithicOptions& opt) {
  const auto sys = forms::assemble_kkt(d, data);
  DenseVector x(sys.map.size(), 0.0);
  const auto report =
      linalg::minres_solve(sys.matrix, sys.rhs, x, {opt.tol, opt.max_iterations});

  auto [u, z] = forms::unflatten(sys.map, d.mesh(), x);
  AssimSolution sol;
  sol.u = std::move(u);
  sol.z = std::move(z);
  sol.report = report;
  sol.stop = report.converged ? StopReason::converged : StopReason::max_iterations;
  sol.lagrangian = forms::lagrangian_value(d, sol.u, sol.z, data);
  return sol;
}

AssimSolution solve_direct(const Discretization& d, const ProblemData& data) {
  const auto sys = forms::assemble_kkt(d, data);
  auto dense = linalg::DenseMatrix::from_sparse(sys.matrix);
  DenseVector x = linalg::dense_solve(std::move(dense), sys.rhs);

  DenseVector r = sys.matrix.apply(x);
  linalg::axpy(-1.0, sys.rhs, r);

  auto [u, z] = forms::unflatten(sys.map, d.mesh(), x);
  AssimSolution sol;
  sol.u = std::move(u);
  sol.z = std::move(z);
  sol.report = {0, linalg::norm2(r), true};
  sol.lagrangian = forms::lagrangian_value(d, sol.u, sol.z, data);
  return sol;
}

AssimSolution solve_gradient_descent(const Discretization& d, const ProblemData& data,
                                     const fem::NodalField& phi0, const GdOptions& opt) {
  if (!(opt.alpha > 0.0))
    throw std::invalid_argument("solve_gradient_descent: alpha must be positive");
  check_phi(d, phi0, "solve_gradient_descent");

  struct Iterate {
    fem::NodalField phi;
    SpaceTimeState u;
    DualState z;
    DenseVector c;
    double cnorm = 0.0, z1 = 0.0, lagr = 0.0;
  };

  auto evaluate = [&](fem::NodalField phi, const SpaceTimeState* uw, const DualState* zw) {
    Iterate it{std::move(phi), {}, {}, {}, 0.0, 0.0, 0.0};
    it.u = forward_heat(d, it.phi, data, opt.inner, uw);
    it.z = backward_dual(d, it.u, data, opt.inner, zw);
    it.c = coupling_functional(d, it.u, it.z);
    it.cnorm = linalg::norm2(it.c);
    it.z1 = mass_norm(d, it.z.at(1));
    it.lagr = forms::lagrangian_value(d, it.u, it.z, data);
    return it;
  };

  AssimSolution sol;
  auto record = [&](const Iterate& it) {
    sol.z1_history.push_back(it.z1);
    sol.coupling_history.push_back(it.cnorm);
    sol.lagrangian_history.push_back(it.lagr);
  };

  Iterate cur = evaluate(phi0, nullptr, nullptr);
  record(cur);
  Iterate best = cur;

  const linalg::CgOptions mass_cg{opt.inner.tol, opt.inner.max_iterations};
  DenseVector dphi(d.n_dof(), 0.0);
  int accepted = 0;
  StopReason stop = StopReason::max_iterations;

  for (int m = 0;; ++m) {
    if (cur.cnorm <= opt.coupling_tol) {
      stop = StopReason::converged;
      break;
    }
    if (m >= opt.max_iterations) break;

    // phi_{m+1} = phi_m - alpha M^{-1} C; warm-start the mass solve with the
    // previous step direction
    require_converged(cg_solve(d.mass(), cur.c, dphi, mass_cg), "solve_gradient_descent",
                      accepted + 1);
    fem::NodalField phi_next = cur.phi;
    linalg::axpy(-opt.alpha, dphi, phi_next.coeffs);

    Iterate next = evaluate(std::move(phi_next), &cur.u, &cur.z);
    if (opt.stop_on_z1_increase && next.z1 > cur.z1) {
      stop = StopReason::z1_increase;
      break;
    }
    cur = std::move(next);
    ++accepted;
    record(cur);
    if (cur.cnorm < best.cnorm) best = cur;
  }

  Iterate& out = (stop == StopReason::max_iterations) ? best : cur;
  sol.u = std::move(out.u);
  sol.z = std::move(out.z);
  sol.report = {accepted, out.cnorm, stop != StopReason::max_iterations};
  sol.lagrangian = out.lagr;
  sol.stop = stop;
  return sol;
}

}  // namespace heatrec::solvers
