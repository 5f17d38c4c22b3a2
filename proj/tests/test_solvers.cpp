#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "heatrec/solvers.hpp"
#include "test_util.hpp"

using namespace heatrec;
using namespace heatrec::forms;
using namespace heatrec::solvers;

namespace {

AssimConfig config(int steps, int cells, double g1 = 0.0, double T = 0.1) {
  AssimConfig cfg;
  cfg.gamma_m = 1.0;
  cfg.gamma_0 = 1.0;
  cfg.gamma_1 = g1;
  cfg.n_steps = steps;
  cfg.final_time = T;
  cfg.mesh = fem::Mesh1D(cells);
  cfg.window = fem::ObservationWindow(0.2);
  return cfg;
}

ProblemData zero_data(const Discretization& d) {
  ProblemData data;
  data.f_levels.assign(d.n_steps(), linalg::DenseVector(d.n_dof(), 0.0));
  data.q_levels.assign(d.n_steps(), linalg::DenseVector(d.n_dof(), 0.0));
  return data;
}

ProblemData make_random_data(std::mt19937_64& rng, const Discretization& d) {
  ProblemData data;
  data.f_levels.resize(d.n_steps());
  data.q_levels.resize(d.n_steps());
  for (int n = 0; n < d.n_steps(); ++n) {
    data.f_levels[n] = testutil::random_vector(rng, d.n_dof());
    data.q_levels[n] = testutil::random_vector(rng, d.n_dof());
  }
  return data;
}

}  // namespace

TEST_CASE("forward march: zero initial value and source stay zero") {
  Discretization d(config(4, 6));
  auto u = forward_heat(d, fem::NodalField::zeros(d.mesh()), zero_data(d));
  for (int n = 0; n <= d.n_steps(); ++n) CHECK(linalg::norm2(u.at(n)) == 0.0);
}

TEST_CASE("forward march reproduces the single-node closed form") {
  // cells=2: M = [1/3], A = [4], so each step is u <- (1/3) u / (1/3 + 4 tau).
  Discretization d(config(3, 2, 0.0, 0.3));  // tau = 0.1
  const double tau = d.tau();
  fem::NodalField phi(d.mesh(), {1.0});
  auto u = forward_heat(d, phi, zero_data(d));
  double expect = 1.0;
  for (int n = 1; n <= 3; ++n) {
    expect *= (1.0 / 3.0) / (1.0 / 3.0 + 4.0 * tau);
    CHECK(u.at(n)[0] == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("forward march dissipates the mass norm without sources") {
  Discretization d(config(5, 12, 0.0, 0.05));
  auto rng = testutil::make_rng(7);
  fem::NodalField phi(d.mesh(), testutil::random_vector(rng, d.n_dof()));
  auto u = forward_heat(d, phi, zero_data(d));
  for (int n = 1; n <= d.n_steps(); ++n)
    CHECK(d.mass().quad_form(u.at(n)) <= d.mass().quad_form(u.at(n - 1)) * (1.0 + 1e-13));
}

TEST_CASE("heat residual measures constraint violation") {
  Discretization d(config(3, 8));
  auto rng = testutil::make_rng(11);
  auto data = make_random_data(rng, d);
  fem::NodalField phi(d.mesh(), testutil::random_vector(rng, d.n_dof()));
  auto u = forward_heat(d, phi, data);
  CHECK(heat_residual(d, u, data) < 1e-9);
  u.at(2)[0] += 0.5;  // break the march at one level
  CHECK(heat_residual(d, u, data) > 1e-3);
}

TEST_CASE("backward dual vanishes when the trajectory matches the data") {
  // With u == q on the window and gamma_1 = 0 the misfit source is zero and
  // the terminal condition propagates z = 0 backwards.
  Discretization d(config(4, 6));
  auto rng = testutil::make_rng(13);
  auto u = testutil::random_state(rng, d);
  ProblemData data = zero_data(d);
  for (int n = 1; n <= d.n_steps(); ++n) data.q_levels[n - 1] = u.at(n);
  auto z = backward_dual(d, u, data);
  for (int n = 1; n <= d.n_steps(); ++n) CHECK(linalg::norm2(z.at(n)) == 0.0);
}

TEST_CASE("backward dual reproduces the single-node closed form") {
  // One step, cells=2: (M + tau A) z^1 = gamma_M tau W (q^1 - u^1) with
  // W = 39/125 for the (0.2, 0.8) window.
  Discretization d(config(1, 2, 0.0, 0.1));
  const double tau = d.tau();
  auto u = SpaceTimeState::zeros(d.mesh(), 1);
  u.at(0) = {0.0};
  u.at(1) = {0.25};
  ProblemData data = zero_data(d);
  data.q_levels[0] = {1.25};
  auto z = backward_dual(d, u, data);
  const double w = 39.0 / 125.0;
  const double expect = tau * w * 1.0 / (1.0 / 3.0 + 4.0 * tau);
  CHECK(z.at(1)[0] == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("sweep pair satisfies every optimality row except the initial one") {
  // u = forward(phi), z = backward(u) zeroes all rows of the assembled
  // system apart from the u^0 block, whose residual is exactly the coupling
  // functional. This pins the recursions to the matrix assembly.
  for (double g1 : {0.0, 0.8}) {
    CAPTURE(g1);
    Discretization d(config(3, 6, g1));
    auto rng = testutil::make_rng(17);
    auto data = make_random_data(rng, d);
    fem::NodalField phi(d.mesh(), testutil::random_vector(rng, d.n_dof()));
    StepSolverOptions tight;
    tight.tol = 1e-13;
    auto u = forward_heat(d, phi, data, tight);
    auto z = backward_dual(d, u, data, tight);
    auto c = coupling_functional(d, u, z);

    auto sys = assemble_kkt(d, data);
    auto res = sys.matrix.apply(flatten(sys.map, u, z));
    linalg::axpy(-1.0, sys.rhs, res);

    const std::size_t nd = static_cast<std::size_t>(d.n_dof());
    for (std::size_t i = 0; i < res.size(); ++i) {
      if (i < nd) {
        CHECK(std::abs(res[i] - c[i]) < 1e-10);
      } else {
        CHECK(std::abs(res[i]) < 1e-9);
      }
    }
  }
}

TEST_CASE("coupling functional isolates the initial-value optimality terms") {
  Discretization d(config(2, 5, 0.0));
  auto rng = testutil::make_rng(19);
  auto u = testutil::random_state(rng, d);
  auto z = testutil::random_dual(rng, d);
  auto c = coupling_functional(d, u, z);
  // gamma_1 = 0: C = gamma_0 h^2 A u^0 - M z^1 componentwise.
  const double h2 = d.mesh().h * d.mesh().h;
  auto expect = d.stiffness().apply(u.at(0));
  linalg::scale(h2, expect);
  linalg::axpy(-1.0, d.mass().apply(z.at(1)), expect);
  CHECK(testutil::max_abs_diff(c, expect) < 1e-14);
}

TEST_CASE("monolithic and dense solutions agree on a small instance") {
  for (double g1 : {0.0, 1.0}) {
    CAPTURE(g1);
    Discretization d(config(2, 5, g1, 0.05));
    auto rng = testutil::make_rng(23);
    auto data = make_random_data(rng, d);
    auto direct = solve_direct(d, data);
    MonolithicOptions opt;
    opt.tol = 1e-12;
    auto krylov = solve_monolithic(d, data, opt);
    CHECK(krylov.report.converged);
    for (int n = 0; n <= d.n_steps(); ++n)
      CHECK(testutil::max_abs_diff(direct.u.at(n), krylov.u.at(n)) < 1e-8);
    for (int n = 1; n <= d.n_steps(); ++n)
      CHECK(testutil::max_abs_diff(direct.z.at(n), krylov.z.at(n)) < 1e-8);
    CHECK(testutil::rel_diff(direct.lagrangian, krylov.lagrangian) < 1e-8);
  }
}

TEST_CASE("optimized trajectory still satisfies the heat constraint") {
  // The multiplier enforces the march exactly at the optimum, whatever the
  // regularization weights are.
  for (double g1 : {0.0, 1.0}) {
    Discretization d(config(3, 6, g1, 0.05));
    auto rng = testutil::make_rng(29);
    auto data = make_random_data(rng, d);
    MonolithicOptions opt;
    opt.tol = 1e-12;
    auto sol = solve_monolithic(d, data, opt);
    REQUIRE(sol.report.converged);
    CHECK(heat_residual(d, sol.u, data) < 1e-8);
  }
}

TEST_CASE("coupling functional vanishes at the optimum") {
  Discretization d(config(2, 6, 0.5, 0.05));
  auto rng = testutil::make_rng(31);
  auto data = make_random_data(rng, d);
  auto sol = solve_direct(d, data);
  StepSolverOptions tight;
  tight.tol = 1e-13;
  auto u = forward_heat(d, fem::NodalField(d.mesh(), sol.u.at(0)), data, tight);
  auto z = backward_dual(d, u, data, tight);
  CHECK(linalg::norm2(coupling_functional(d, u, z)) < 1e-9);
}

TEST_CASE("gradient descent recognizes the solution as a fixed point") {
  Discretization d(config(2, 5, 0.0, 0.05));
  auto rng = testutil::make_rng(37);
  auto data = make_random_data(rng, d);
  auto direct = solve_direct(d, data);
  GdOptions opt;
  opt.inner.tol = 1e-13;
  opt.coupling_tol = 1e-8;
  auto sol = solve_gradient_descent(d, data, fem::NodalField(d.mesh(), direct.u.at(0)), opt);
  CHECK(sol.stop == StopReason::converged);
  CHECK(sol.report.iterations == 0);
  CHECK(testutil::max_abs_diff(sol.u.at(0), direct.u.at(0)) == 0.0);
}

TEST_CASE("gradient descent converges to the direct solution on a small instance") {
  Discretization d(config(2, 4, 0.0, 0.05));
  auto rng = testutil::make_rng(41);
  auto data = make_random_data(rng, d);
  auto direct = solve_direct(d, data);
  GdOptions opt;
  opt.inner.tol = 1e-13;
  opt.coupling_tol = 1e-10;
  opt.stop_on_z1_increase = false;
  opt.max_iterations = 50000;
  auto sol = solve_gradient_descent(d, data, fem::NodalField::zeros(d.mesh()), opt);
  CHECK(sol.stop == StopReason::converged);
  CHECK(testutil::max_abs_diff(sol.u.at(0), direct.u.at(0)) < 1e-6);
}

TEST_CASE("oversized steps trigger the dual-increase guard immediately") {
  Discretization d(config(3, 8, 0.0));
  auto rng = testutil::make_rng(43);
  auto data = make_random_data(rng, d);
  GdOptions opt;
  opt.alpha = 1e6;
  auto sol = solve_gradient_descent(d, data, fem::NodalField::zeros(d.mesh()), opt);
  CHECK(sol.stop == StopReason::z1_increase);
  CHECK(sol.report.iterations == 0);
  // the returned iterate is the pre-increase one, i.e. the initial guess
  CHECK(linalg::norm2(sol.u.at(0)) == 0.0);
}

TEST_CASE("iteration budget returns the best visited iterate") {
  Discretization d(config(2, 6, 0.0));
  auto rng = testutil::make_rng(47);
  auto data = make_random_data(rng, d);
  GdOptions opt;
  opt.max_iterations = 3;
  opt.stop_on_z1_increase = false;
  opt.coupling_tol = 0.0;
  auto sol = solve_gradient_descent(d, data, fem::NodalField::zeros(d.mesh()), opt);
  CHECK(sol.stop == StopReason::max_iterations);
  CHECK_FALSE(sol.report.converged);
  CHECK(sol.report.iterations == 3);
  CHECK(sol.coupling_history.size() == 4);  // initial iterate plus three steps
}

TEST_CASE("descent histories shrink the lagrangian monotonically") {
  Discretization d(config(3, 10, 0.0));
  auto rng = testutil::make_rng(53);
  auto data = make_random_data(rng, d);
  GdOptions opt;
  opt.max_iterations = 200;
  opt.stop_on_z1_increase = false;
  opt.coupling_tol = 0.0;
  auto sol = solve_gradient_descent(d, data, fem::NodalField::zeros(d.mesh()), opt);
  REQUIRE(sol.lagrangian_history.size() >= 2);
  for (std::size_t i = 1; i < sol.lagrangian_history.size(); ++i)
    CHECK(sol.lagrangian_history[i] <=
          sol.lagrangian_history[i - 1] + 1e-12 * std::abs(sol.lagrangian_history[i - 1]));
}

TEST_CASE("starved inner solver surfaces as an exception") {
  Discretization d(config(1, 16, 0.0, 1.0));  // tau = 1: far from the identity
  auto rng = testutil::make_rng(59);
  auto data = make_random_data(rng, d);
  GdOptions opt;
  opt.inner.tol = 1e-14;
  opt.inner.max_iterations = 1;
  CHECK_THROWS_AS(
      solve_gradient_descent(d, data, fem::NodalField::zeros(d.mesh()), opt),
      std::runtime_error);
}

TEST_CASE("homogeneous data produces the zero solution across strategies") {
  Discretization d(config(2, 4, 1.0, 0.05));
  auto data = zero_data(d);
  auto direct = solve_direct(d, data);
  auto mono = solve_monolithic(d, data);
  auto gd = solve_gradient_descent(d, data, fem::NodalField::zeros(d.mesh()));
  for (int n = 0; n <= d.n_steps(); ++n) {
    CHECK(linalg::norm2(direct.u.at(n)) < 1e-12);
    CHECK(linalg::norm2(mono.u.at(n)) < 1e-10);
    CHECK(linalg::norm2(gd.u.at(n)) < 1e-10);
  }
}
