#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "heatrec/harness.hpp"
#include "test_util.hpp"

using namespace heatrec;
using namespace heatrec::harness;

namespace {

constexpr double kPi = std::numbers::pi;

forms::Discretization make_disc(int steps, int cells, double a = 0.2) {
  forms::AssimConfig cfg;
  cfg.n_steps = steps;
  cfg.final_time = 0.02;
  cfg.mesh = fem::Mesh1D(cells);
  cfg.window = fem::ObservationWindow(a);
  return forms::Discretization(cfg);
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

}  // namespace

TEST_CASE("exact solution evaluates the separated mode") {
  ExactSolution s1{1};
  CHECK(s1.value(0.0, 0.5) == doctest::Approx(1.0));
  CHECK(s1.initial(0.25) == doctest::Approx(std::sqrt(0.5)));
  CHECK(s1.value(0.1, 0.5) == doctest::Approx(std::exp(-kPi * kPi * 0.1)));
  ExactSolution s2{2};
  CHECK(s2.value(0.0, 0.25) == doctest::Approx(1.0));
  CHECK(s2.value(0.02, 0.25) == doctest::Approx(std::exp(-4.0 * kPi * kPi * 0.02)));
  CHECK(s2.value(0.3, 0.5) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("generated data interpolates the solution with a zero source") {
  auto d = make_disc(4, 10);
  ExactSolution sol{1};
  auto data = generate_data(d, sol);
  for (int n = 1; n <= d.n_steps(); ++n) {
    CHECK(linalg::norm2(data.f(n)) == 0.0);
    const double t = n * d.tau();
    for (int i = 0; i < d.n_dof(); ++i) {
      const double x = d.mesh().node(i + 1);
      CHECK(data.q(n)[i] == doctest::Approx(sol.value(t, x)).epsilon(1e-14));
    }
  }
}

TEST_CASE("noise is rescaled to the requested window norm per level") {
  auto d = make_disc(3, 20);
  ExactSolution sol{1};
  NoiseSpec noise;
  noise.eps = 0.01;
  auto clean = generate_data(d, sol);
  auto noisy = generate_data(d, sol, noise);
  for (int n = 1; n <= d.n_steps(); ++n) {
    auto delta = noisy.q(n);
    linalg::axpy(-1.0, clean.q(n), delta);
    const double wnorm = std::sqrt(d.obs_mass().quad_form(delta));
    CHECK(std::abs(wnorm - 0.01) < 1e-12);
  }
}

TEST_CASE("noise is reproducible by seed and varies across seeds") {
  auto d = make_disc(2, 12);
  ExactSolution sol{2};
  NoiseSpec a;
  a.eps = 0.05;
  a.seed = 123;
  auto qa = generate_data(d, sol, a);
  auto qb = generate_data(d, sol, a);
  for (int n = 1; n <= d.n_steps(); ++n)
    CHECK(testutil::max_abs_diff(qa.q(n), qb.q(n)) == 0.0);
  NoiseSpec c = a;
  c.seed = 124;
  auto qc = generate_data(d, sol, c);
  double dev = 0.0;
  for (int n = 1; n <= d.n_steps(); ++n)
    dev = std::max(dev, testutil::max_abs_diff(qa.q(n), qc.q(n)));
  CHECK(dev > 1e-6);
}

TEST_CASE("default initial guess perturbs the interpolated state by h sin(pi x)") {
  auto d = make_disc(2, 8);
  ExactSolution sol{1};
  auto phi = default_initial_guess(d, sol);
  for (int i = 0; i < d.n_dof(); ++i) {
    const double x = d.mesh().node(i + 1);
    const double expect = sol.initial(x) + d.mesh().h * std::sin(kPi * x);
    CHECK(phi.coeffs[i] == doctest::Approx(expect).epsilon(1e-14));
  }
}

TEST_CASE("observed order reproduces the reference ratios") {
  CHECK(observed_order(0.224, 0.119, 2.0) == doctest::Approx(0.91254).epsilon(1e-4));
  CHECK(observed_order(0.4, 0.1, 2.0) == doctest::Approx(2.0));
  CHECK(observed_order(0.4, 0.2, 4.0) == doctest::Approx(0.5));
  CHECK(std::isnan(observed_order(0.0, 0.1, 2.0)));
  CHECK(std::isnan(observed_order(0.1, 0.1, 1.0)));
}

TEST_CASE("log-log slope fit recovers exact power laws") {
  std::vector<double> x{0.1, 0.05, 0.025, 0.0125};
  std::vector<double> y;
  for (double v : x) y.push_back(3.0 * std::pow(v, 1.5));
  CHECK(fit_slope_loglog(x, y) == doctest::Approx(1.5).epsilon(1e-12));
  for (auto& v : y) v = 2.0;  // constant data: zero slope
  CHECK(fit_slope_loglog(x, y) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK_THROWS_AS(fit_slope_loglog({0.1}, {1.0}), std::invalid_argument);
  CHECK_THROWS_AS(fit_slope_loglog({0.1, 0.2}, {1.0}), std::invalid_argument);
  CHECK_THROWS_AS(fit_slope_loglog({0.1, -0.2}, {1.0, 1.0}), std::invalid_argument);
}

TEST_CASE("csv schema: header, field count, parseability") {
  RunRecord r;
  r.mode = Mode::converge_h;
  r.solver = SolverKind::minres;
  r.h = 0.02;
  r.tau = 0.00125;
  r.gamma_m = 1.0;
  r.gamma_0 = 1.0;
  r.gamma_1 = 0.0;
  r.error = 0.224;
  r.order = 0.91;
  r.iterations = 852;
  r.wall_time_s = 0.011;
  r.converged = true;
  auto csv = to_csv({r});
  std::istringstream is(csv);
  std::string header, row, extra;
  REQUIRE(std::getline(is, header));
  REQUIRE(std::getline(is, row));
  CHECK_FALSE(std::getline(is, extra));
  CHECK(header == "mode,solver,h,tau,gamma_m,gamma_0,gamma_1,error,order,iterations,wall_time_s");
  auto fields = split_fields(row);
  REQUIRE(fields.size() == 11);
  CHECK(fields[0] == "converge_h");
  CHECK(fields[1] == "minres");
  CHECK(std::stod(fields[2]) == doctest::Approx(0.02));
  CHECK(std::stod(fields[3]) == doctest::Approx(0.00125));
  CHECK(std::stod(fields[7]) == doctest::Approx(0.224));
  CHECK(std::stod(fields[8]) == doctest::Approx(0.91));
  CHECK(std::stoi(fields[9]) == 852);
  CHECK(csv.back() == '\n');
}

TEST_CASE("csv prints an undefined order as an empty field") {
  RunRecord r;
  r.order = std::nan("");
  auto csv = to_csv({r});
  std::istringstream is(csv);
  std::string header, row;
  std::getline(is, header);
  std::getline(is, row);
  auto fields = split_fields(row);
  REQUIRE(fields.size() == 11);
  CHECK(fields[8].empty());
}

TEST_CASE("csv of no records is just the header") {
  auto csv = to_csv({});
  CHECK(csv == "mode,solver,h,tau,gamma_m,gamma_0,gamma_1,error,order,iterations,wall_time_s\n");
}

TEST_CASE("emit_csv writes the file and rejects unwritable paths") {
  const std::string path = "harness_test_out.csv";
  RunRecord r;
  r.error = 0.5;
  emit_csv({r}, path);
  std::ifstream in(path);
  REQUIRE(in.good());
  std::string header;
  std::getline(in, header);
  CHECK(header ==
        "mode,solver,h,tau,gamma_m,gamma_0,gamma_1,error,order,iterations,wall_time_s");
  in.close();
  std::remove(path.c_str());
  CHECK_THROWS_AS(emit_csv({r}, "no_such_dir/xyz/out.csv"), std::runtime_error);
}

TEST_CASE("experiment validation rejects malformed requests") {
  ExperimentSpec spec;
  CHECK_NOTHROW(spec.validate());
  spec.n_cells = 1;
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
  spec = {};
  spec.noise.eps = -1.0;
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
  spec = {};
  spec.mode = Mode::converge_h;
  spec.cells_values.clear();
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
  spec = {};
  spec.mode = Mode::converge_tau;
  spec.steps_values.clear();
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
  spec = {};
  spec.gamma_0 = 0.0;
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
  spec.allow_zero_gamma0 = true;
  CHECK_NOTHROW(spec.validate());
  spec = {};
  spec.solver_tol = -1e-3;
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
}

TEST_CASE("single run records the requested configuration") {
  ExperimentSpec spec;
  spec.solver = SolverKind::graddesc;
  spec.n_cells = 20;
  spec.n_steps = 4;
  spec.final_time = 0.02;
  spec.freq_k = 1;
  auto rec = run_single(spec);
  CHECK(rec.mode == Mode::single_solve);
  CHECK(rec.solver == SolverKind::graddesc);
  CHECK(rec.h == doctest::Approx(0.05));
  CHECK(rec.tau == doctest::Approx(0.005));
  CHECK(rec.error > 0.0);
  CHECK(rec.error < 0.5);
  CHECK(std::isnan(rec.order));
  CHECK(rec.wall_time_s >= 0.0);
  CHECK(std::isfinite(rec.lagrangian));
}

TEST_CASE("h-refinement study pairs orders with actual ratios") {
  ExperimentSpec spec;
  spec.mode = Mode::converge_h;
  spec.solver = SolverKind::minres;
  spec.cells_values = {10, 20, 40};
  spec.n_steps = 4;
  spec.final_time = 0.02;
  spec.freq_k = 2;
  auto rows = run_convergence_h(spec);
  REQUIRE(rows.size() == 3);
  CHECK(std::isnan(rows[0].order));
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const double ratio = rows[i - 1].h / rows[i].h;
    const double expect = observed_order(rows[i - 1].error, rows[i].error, ratio);
    CHECK(rows[i].order == doctest::Approx(expect).epsilon(1e-12));
  }
  CHECK(rows[0].error > rows[1].error);
  CHECK(rows[1].error > rows[2].error);
}

TEST_CASE("tau-refinement study emits one row per step count") {
  ExperimentSpec spec;
  spec.mode = Mode::converge_tau;
  spec.solver = SolverKind::graddesc;
  spec.steps_values = {2, 4, 8};
  spec.n_cells = 20;
  spec.final_time = 0.02;
  spec.freq_k = 1;
  auto rows = run_convergence_tau(spec);
  REQUIRE(rows.size() == 3);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].h == doctest::Approx(0.05));
    CHECK(rows[i].tau == doctest::Approx(0.02 / spec.steps_values[i]));
  }
}

TEST_CASE("divergence check produces the breakdown, probe and baseline rows") {
  // The breakdown itself only shows at fine grids (the unregularized system is
  // well within reach of the solver on a 16-cell mesh), so this checks the
  // report structure; the full-size run lives in the acceptance gate.
  ExperimentSpec spec;
  spec.mode = Mode::diverge_check;
  spec.n_cells = 16;
  spec.n_steps = 6;
  spec.final_time = 0.02;
  spec.freq_k = 2;
  spec.max_iterations = 500;
  auto rows = run_divergence_check(spec);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].gamma_0 == 0.0);
  CHECK(rows[1].gamma_0 == doctest::Approx(1e-6));
  CHECK(rows[2].gamma_0 == doctest::Approx(1.0));
  for (const auto& r : rows) {
    CHECK(r.solver == SolverKind::minres);
    CHECK(r.mode == Mode::diverge_check);
    CHECK(r.h == doctest::Approx(1.0 / 16));
    CHECK(std::isfinite(r.error));
  }
}

TEST_CASE("divergence predicate reads the breakdown and baseline rows") {
  RunRecord broken, baseline;
  broken.gamma_0 = 0.0;
  broken.error = 5.0;
  broken.converged = true;
  baseline.gamma_0 = 1.0;
  baseline.error = 0.2;
  baseline.converged = true;
  CHECK(divergence_observed({broken, baseline}));  // 25x the baseline error
  broken.error = 0.3;
  CHECK_FALSE(divergence_observed({broken, baseline}));
  broken.converged = false;  // non-convergence alone counts as breakdown
  CHECK(divergence_observed({broken, baseline}));
  broken.converged = true;
  broken.error = std::nan("");
  CHECK(divergence_observed({broken, baseline}));
}

TEST_CASE("over-regularization predicate compares the largest gamma_0 with the rest") {
  auto row = [](double g0, double g1, double err) {
    RunRecord r;
    r.gamma_0 = g0;
    r.gamma_1 = g1;
    r.error = err;
    return r;
  };
  std::vector<RunRecord> sweep{row(0.01, 0.0, 0.08), row(0.1, 0.0, 0.05),
                               row(0.1, 1.0, 0.04),  row(1.5, 0.0, 0.2),
                               row(1.5, 1.0, 0.3)};
  CHECK(overregularized(sweep));
  sweep[3].error = 0.01;  // the large-gamma_0 family now wins somewhere
  CHECK_FALSE(overregularized(sweep));
}

TEST_CASE("param sweep is deterministic apart from wall time") {
  ExperimentSpec spec;
  spec.mode = Mode::param_sweep;
  spec.solver = SolverKind::graddesc;
  spec.n_cells = 10;
  spec.n_steps = 4;
  spec.final_time = 0.04;
  spec.freq_k = 1;
  spec.gamma0_values = {0.5, 1.0};
  spec.gamma1_values = {0.0, 0.1};
  auto a = run_param_sweep(spec);
  auto b = run_param_sweep(spec);
  REQUIRE(a.size() == 4);
  REQUIRE(b.size() == a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].gamma_0 == b[i].gamma_0);
    CHECK(a[i].gamma_1 == b[i].gamma_1);
    CHECK(a[i].error == b[i].error);
    CHECK(a[i].iterations == b[i].iterations);
    CHECK(a[i].lagrangian == b[i].lagrangian);
  }
}

TEST_CASE("exactly consistent data is reconstructed to solver tolerance") {
  // With q taken from the model's own march and the initial penalty switched
  // off, the optimality system is solved exactly by (march, z=0): the misfit
  // vanishes and no bias term pulls on u0.  The computed final-time error
  // against the march is then pure solver tolerance, orders of magnitude below
  // the regularized continuum-data error at the same configuration.
  forms::AssimConfig cfg;
  cfg.gamma_0 = 0.0;
  cfg.allow_zero_gamma0 = true;
  cfg.n_steps = 8;
  cfg.final_time = 0.02;
  cfg.mesh = fem::Mesh1D(20);
  cfg.window = fem::ObservationWindow(0.2);
  forms::Discretization d(cfg);
  ExactSolution sol{2};

  auto data = generate_data(d, sol);
  auto truth = solvers::forward_heat(
      d, fem::interpolate_nodal(cfg.mesh, [&](double x) { return sol.initial(x); }), data);
  for (int n = 1; n <= d.n_steps(); ++n) data.q_levels[n - 1] = truth.at(n);

  solvers::MonolithicOptions opt;
  opt.tol = 1e-10;
  auto s = solvers::solve_monolithic(d, data, opt);

  auto diff = s.u.at(d.n_steps());
  linalg::axpy(-1.0, truth.at(d.n_steps()), diff);
  const double err = std::sqrt(d.mass().quad_form(diff));
  CHECK(err < 1e-6);
}
