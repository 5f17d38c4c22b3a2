#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "heatrec/fem1d.hpp"
#include "heatrec/forms.hpp"
#include "heatrec/solvers.hpp"

namespace heatrec::harness {

/// Closed-form reference u(t,x) = e^{-pi^2 k^2 t} sin(pi k x): source-free,
/// zero Dirichlet data, one separated Fourier mode.
struct ExactSolution {
  int k = 1;

  double value(double t, double x) const;
  double initial(double x) const { return value(0.0, x); }
};

/// Measurement noise: i.i.d. uniform [-1,1] nodal perturbations on the
/// window-supported nodes, rescaled per time level to L2(window) size eps.
struct NoiseSpec {
  double eps = 0.0;
  std::uint64_t seed = 20260814;
};

/// q^n = nodal interpolant of u(t_n, .) (plus noise when eps > 0); f = 0.
forms::ProblemData generate_data(const forms::Discretization& d, const ExactSolution& sol,
                                 const NoiseSpec& noise = {});

/// Default gradient-descent start: interpolant of the true initial state
/// plus an h-sized boundary-compatible perturbation h * sin(pi x).
fem::NodalField default_initial_guess(const forms::Discretization& d, const ExactSolution& sol);

enum class SolverKind { minres, graddesc, direct };
enum class Mode { single_solve, converge_h, converge_tau, param_sweep, diverge_check, oracle_check };

const char* solver_name(SolverKind kind);
const char* mode_name(Mode mode);
SolverKind solver_from_name(const std::string& name);  // throws on unknown name

/// One experiment request: base configuration plus the ranges the selected
/// mode varies. Unused ranges may stay empty.
struct ExperimentSpec {
  Mode mode = Mode::single_solve;
  SolverKind solver = SolverKind::minres;
  double gamma_m = 1.0;
  double gamma_0 = 1.0;
  double gamma_1 = 0.0;
  int n_cells = 100;
  int n_steps = 16;
  double final_time = 0.02;
  int freq_k = 2;
  double obs_a = 0.2;
  double alpha = 0.1;
  int max_iterations = 0;   // 0 keeps the solver default
  double solver_tol = 0.0;  // 0 keeps the solver default
  bool allow_zero_gamma0 = false;
  NoiseSpec noise{};
  std::vector<int> cells_values;                  // converge_h
  std::vector<int> steps_values;                  // converge_tau
  std::vector<double> gamma0_values;              // param_sweep
  std::vector<double> gamma1_values;              // param_sweep
  std::string out_path;                           // empty: no CSV written

  void validate() const;  // throws std::invalid_argument
};

/// One solve, flattened for tabulation. `order` is the observed convergence
/// order against the previous row of a refinement study (NaN elsewhere);
/// `error` is the final-time L2 distance to the exact solution.
struct RunRecord {
  Mode mode = Mode::single_solve;
  SolverKind solver = SolverKind::minres;
  double h = 0.0;
  double tau = 0.0;
  double gamma_m = 0.0;
  double gamma_0 = 0.0;
  double gamma_1 = 0.0;
  double error = 0.0;
  double order = 0.0;
  int iterations = 0;
  double wall_time_s = 0.0;
  double lagrangian = 0.0;
  bool converged = false;
};

RunRecord run_single(const ExperimentSpec& spec);
std::vector<RunRecord> run_convergence_h(const ExperimentSpec& spec);
std::vector<RunRecord> run_convergence_tau(const ExperimentSpec& spec);
std::vector<RunRecord> run_param_sweep(const ExperimentSpec& spec);

/// Rows for gamma_0 in {0, 1e-6, baseline}, in that order, at the requested
/// configuration; the gamma_0 = 0 row is the deliberate breakdown, the
/// baseline row the control.
std::vector<RunRecord> run_divergence_check(const ExperimentSpec& spec);

/// True when the gamma_0 = 0 row failed to converge or its error exceeds ten
/// times the baseline row's error.
bool divergence_observed(const std::vector<RunRecord>& rows);

/// True when the best error at the largest gamma_0 of a sweep exceeds the
/// best error over the interior gamma_0 values (over-regularization signal).
bool overregularized(const std::vector<RunRecord>& sweep);

/// Cross-solver agreement checks on a grid of small instances; `measure` is
/// the worst relevant deviation for each named check.
struct OracleCheck {
  std::string name;
  bool pass = false;
  double measure = 0.0;
};
std::vector<OracleCheck> run_oracle_checks();

/// log(e_coarse/e_fine) / log(ratio) with the actual refinement ratio.
double observed_order(double e_coarse, double e_fine, double ratio);

/// Least-squares slope of ln(y) against ln(x).
double fit_slope_loglog(const std::vector<double>& x, const std::vector<double>& y);

/// 11 fixed columns: mode, solver, h, tau, gamma_m, gamma_0, gamma_1, error,
/// order, iterations, wall_time_s. Locale-independent; NaN order prints as an
/// empty field; newline-terminated.
std::string to_csv(const std::vector<RunRecord>& records);
void emit_csv(const std::vector<RunRecord>& records, const std::string& path);

}  // namespace heatrec::harness
