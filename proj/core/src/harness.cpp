#include "heatrec/harness.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>
#include <utility>

namespace heatrec::harness {

namespace {

using forms::AssimConfig;
using forms::Discretization;
using forms::ProblemData;
using linalg::DenseVector;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

AssimConfig make_config(const ExperimentSpec& spec) {
  AssimConfig cfg;
  cfg.gamma_m = spec.gamma_m;
  cfg.gamma_0 = spec.gamma_0;
  cfg.gamma_1 = spec.gamma_1;
  cfg.n_steps = spec.n_steps;
  cfg.final_time = spec.final_time;
  cfg.mesh = fem::Mesh1D(spec.n_cells);
  cfg.window = fem::ObservationWindow(spec.obs_a);
  cfg.allow_zero_gamma0 = spec.allow_zero_gamma0;
  return cfg;
}

std::string fmt_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void append_row(std::string& out, const RunRecord& r) {
  out += mode_name(r.mode);
  out += ',';
  out += solver_name(r.solver);
  out += ',';
  out += fmt_double(r.h);
  out += ',';
  out += fmt_double(r.tau);
  out += ',';
  out += fmt_double(r.gamma_m);
  out += ',';
  out += fmt_double(r.gamma_0);
  out += ',';
  out += fmt_double(r.gamma_1);
  out += ',';
  out += fmt_double(r.error);
  out += ',';
  if (!std::isnan(r.order)) out += fmt_double(r.order);
  out += ',';
  out += std::to_string(r.iterations);
  out += ',';
  out += fmt_double(r.wall_time_s);
  out += '\n';
}

void maybe_emit(const std::vector<RunRecord>& rows, const ExperimentSpec& spec) {
  if (!spec.out_path.empty()) emit_csv(rows, spec.out_path);
}

}  // namespace

double ExactSolution::value(double t, double x) const {
  const double pk = std::numbers::pi * k;
  return std::exp(-pk * pk * t) * std::sin(pk * x);
}

forms::ProblemData generate_data(const Discretization& d, const ExactSolution& sol,
                                 const NoiseSpec& noise) {
  if (noise.eps < 0.0) throw std::invalid_argument("generate_data: noise size must be >= 0");

  ProblemData data = ProblemData::zeros(d.mesh(), d.n_steps());
  for (int n = 1; n <= d.n_steps(); ++n) {
    const double t = n * d.tau();
    data.q_levels[n - 1] =
        fem::interpolate_nodal(d.mesh(), [&](double x) { return sol.value(t, x); }).coeffs;
  }

  if (noise.eps > 0.0) {
    const DenseVector diag = d.obs_mass().diagonal();
    std::mt19937_64 rng(noise.seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    for (int n = 1; n <= d.n_steps(); ++n) {
      DenseVector delta(d.n_dof(), 0.0);
      for (int i = 0; i < d.n_dof(); ++i)
        if (diag[i] > 0.0) delta[i] = unit(rng);
      const double size = std::sqrt(std::max(0.0, d.obs_mass().quad_form(delta)));
      if (!(size > 0.0))
        throw std::runtime_error("generate_data: window carries no mass, cannot scale noise");
      linalg::scale(noise.eps / size, delta);
      linalg::axpy(1.0, delta, data.q_levels[n - 1]);
    }
  }
  return data;
}

fem::NodalField default_initial_guess(const Discretization& d, const ExactSolution& sol) {
  fem::NodalField guess =
      fem::interpolate_nodal(d.mesh(), [&](double x) { return sol.initial(x); });
  const fem::NodalField pert = fem::interpolate_nodal(
      d.mesh(), [](double x) { return std::sin(std::numbers::pi * x); });
  linalg::axpy(d.mesh().h, pert.coeffs, guess.coeffs);
  return guess;
}

const char* solver_name(SolverKind kind) {
  switch (kind) {
    case SolverKind::minres: return "minres";
    case SolverKind::graddesc: return "graddesc";
    case SolverKind::direct: return "direct";
  }
  return "unknown";
}

const char* mode_name(Mode mode) {
  switch (mode) {
    case Mode::single_solve: return "single_solve";
    case Mode::converge_h: return "converge_h";
    case Mode::converge_tau: return "converge_tau";
    case Mode::param_sweep: return "param_sweep";
    case Mode::diverge_check: return "diverge_check";
    case Mode::oracle_check: return "oracle_check";
  }
  return "unknown";
}

SolverKind solver_from_name(const std::string& name) {
  if (name == "minres") return SolverKind::minres;
  if (name == "graddesc") return SolverKind::graddesc;
  if (name == "direct") return SolverKind::direct;
  throw std::invalid_argument("unknown solver '" + name + "' (minres, graddesc, direct)");
}

void ExperimentSpec::validate() const {
  if (n_cells < 2) throw std::invalid_argument("spec: cells must be >= 2");
  if (n_steps < 1) throw std::invalid_argument("spec: steps must be >= 1");
  if (!(final_time > 0.0)) throw std::invalid_argument("spec: final time must be positive");
  if (freq_k < 1) throw std::invalid_argument("spec: frequency k must be >= 1");
  if (!(gamma_m > 0.0)) throw std::invalid_argument("spec: gamma_m must be positive");
  if (gamma_0 < 0.0 || (gamma_0 == 0.0 && !allow_zero_gamma0))
    throw std::invalid_argument(
        "spec: gamma_0 must be positive (or pass the explicit zero override)");
  if (gamma_1 < 0.0) throw std::invalid_argument("spec: gamma_1 must be >= 0");
  if (!(obs_a >= 0.0 && obs_a < 0.5))
    throw std::invalid_argument("spec: window margin must lie in [0, 1/2)");
  if (!(alpha > 0.0)) throw std::invalid_argument("spec: alpha must be positive");
  if (max_iterations < 0) throw std::invalid_argument("spec: max iterations must be >= 0");
  if (solver_tol < 0.0) throw std::invalid_argument("spec: solver tolerance must be >= 0");
  if (noise.eps < 0.0) throw std::invalid_argument("spec: noise size must be >= 0");
  if (mode == Mode::converge_h && cells_values.empty())
    throw std::invalid_argument("spec: converge_h needs a nonempty cell range");
  if (mode == Mode::converge_tau && steps_values.empty())
    throw std::invalid_argument("spec: converge_tau needs a nonempty step range");
  if (mode == Mode::param_sweep && (gamma0_values.empty() || gamma1_values.empty()))
    throw std::invalid_argument("spec: param_sweep needs nonempty gamma ranges");
  for (int c : cells_values)
    if (c < 2) throw std::invalid_argument("spec: cell range entries must be >= 2");
  for (int s : steps_values)
    if (s < 1) throw std::invalid_argument("spec: step range entries must be >= 1");
}

RunRecord run_single(const ExperimentSpec& spec) {
  spec.validate();
  const Discretization d(make_config(spec));
  const ExactSolution sol{spec.freq_k};
  const ProblemData data = generate_data(d, sol, spec.noise);

  const auto t0 = std::chrono::steady_clock::now();
  const solvers::AssimSolution s = [&] {
    switch (spec.solver) {
      case SolverKind::direct:
        return solvers::solve_direct(d, data);
      case SolverKind::graddesc: {
        solvers::GdOptions opt;
        opt.alpha = spec.alpha;
        if (spec.max_iterations > 0) opt.max_iterations = spec.max_iterations;
        if (spec.solver_tol > 0.0) opt.coupling_tol = spec.solver_tol;
        return solvers::solve_gradient_descent(d, data, default_initial_guess(d, sol), opt);
      }
      case SolverKind::minres:
      default: {
        solvers::MonolithicOptions opt;
        if (spec.max_iterations > 0) opt.max_iterations = spec.max_iterations;
        if (spec.solver_tol > 0.0) opt.tol = spec.solver_tol;
        return solvers::solve_monolithic(d, data, opt);
      }
    }
  }();
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  const fem::NodalField final_state(d.mesh(), s.u.at(d.n_steps()));
  const double err = fem::l2_error_vs_exact(
      final_state, [&](double x) { return sol.value(spec.final_time, x); });

  RunRecord r;
  r.mode = spec.mode;
  r.solver = spec.solver;
  r.h = d.mesh().h;
  r.tau = d.tau();
  r.gamma_m = spec.gamma_m;
  r.gamma_0 = spec.gamma_0;
  r.gamma_1 = spec.gamma_1;
  r.error = err;
  r.order = kNaN;
  r.iterations = s.report.iterations;
  r.wall_time_s = wall;
  r.lagrangian = s.lagrangian;
  r.converged = s.report.converged;
  return r;
}

std::vector<RunRecord> run_convergence_h(const ExperimentSpec& spec) {
  spec.validate();
  std::vector<RunRecord> rows;
  for (int cells : spec.cells_values) {
    ExperimentSpec one = spec;
    one.mode = Mode::converge_h;
    one.n_cells = cells;
    rows.push_back(run_single(one));
  }
  for (std::size_t i = 1; i < rows.size(); ++i)
    rows[i].order = observed_order(rows[i - 1].error, rows[i].error, rows[i - 1].h / rows[i].h);
  maybe_emit(rows, spec);
  return rows;
}

std::vector<RunRecord> run_convergence_tau(const ExperimentSpec& spec) {
  spec.validate();
  std::vector<RunRecord> rows;
  for (int steps : spec.steps_values) {
    ExperimentSpec one = spec;
    one.mode = Mode::converge_tau;
    one.n_steps = steps;
    rows.push_back(run_single(one));
  }
  for (std::size_t i = 1; i < rows.size(); ++i)
    rows[i].order =
        observed_order(rows[i - 1].error, rows[i].error, rows[i - 1].tau / rows[i].tau);
  maybe_emit(rows, spec);
  return rows;
}

std::vector<RunRecord> run_param_sweep(const ExperimentSpec& spec) {
  spec.validate();
  std::vector<RunRecord> rows;
  for (double g0 : spec.gamma0_values)
    for (double g1 : spec.gamma1_values) {
      ExperimentSpec one = spec;
      one.mode = Mode::param_sweep;
      one.gamma_0 = g0;
      one.gamma_1 = g1;
      rows.push_back(run_single(one));
    }
  maybe_emit(rows, spec);
  return rows;
}

std::vector<RunRecord> run_divergence_check(const ExperimentSpec& spec) {
  spec.validate();
  const double baseline = spec.gamma_0 > 0.0 ? spec.gamma_0 : 1.0;
  std::vector<RunRecord> rows;
  for (double g0 : {0.0, 1e-6, baseline}) {
    ExperimentSpec one = spec;
    one.mode = Mode::diverge_check;
    one.solver = SolverKind::minres;  // the breakdown is a saddle-point phenomenon
    one.gamma_0 = g0;
    one.allow_zero_gamma0 = true;
    rows.push_back(run_single(one));
  }
  maybe_emit(rows, spec);
  return rows;
}

bool divergence_observed(const std::vector<RunRecord>& rows) {
  const RunRecord* zero = nullptr;
  const RunRecord* base = nullptr;
  for (const auto& r : rows) {
    if (r.gamma_0 == 0.0 && !zero) zero = &r;
    if (!base || r.gamma_0 > base->gamma_0) base = &r;
  }
  if (!zero || !base || base->gamma_0 <= 0.0) return false;
  if (!zero->converged) return true;
  return !(zero->error < 10.0 * base->error);  // NaN counts as divergence
}

bool overregularized(const std::vector<RunRecord>& sweep) {
  double g_min = std::numeric_limits<double>::infinity();
  double g_max = -std::numeric_limits<double>::infinity();
  for (const auto& r : sweep) {
    g_min = std::min(g_min, r.gamma_0);
    g_max = std::max(g_max, r.gamma_0);
  }
  double best_top = std::numeric_limits<double>::infinity();
  double best_mid = std::numeric_limits<double>::infinity();
  bool has_mid = false;
  for (const auto& r : sweep) {
    if (r.gamma_0 == g_max) {
      best_top = std::min(best_top, r.error);
    } else if (r.gamma_0 > g_min) {
      best_mid = std::min(best_mid, r.error);
      has_mid = true;
    }
  }
  return has_mid && best_top > best_mid;
}

std::vector<OracleCheck> run_oracle_checks() {
  double worst_mono = 0.0;
  double worst_gd = 0.0;
  double worst_zero = 0.0;

  const auto state_gap = [](const solvers::AssimSolution& a, const solvers::AssimSolution& b) {
    double gap = 0.0;
    for (int n = 0; n <= a.u.n_steps(); ++n)
      for (std::size_t i = 0; i < a.u.at(n).size(); ++i)
        gap = std::max(gap, std::abs(a.u.at(n)[i] - b.u.at(n)[i]));
    for (int n = 1; n <= a.z.n_steps(); ++n)
      for (std::size_t i = 0; i < a.z.at(n).size(); ++i)
        gap = std::max(gap, std::abs(a.z.at(n)[i] - b.z.at(n)[i]));
    return gap;
  };
  const auto state_max = [](const solvers::AssimSolution& a) {
    double m = 0.0;
    for (int n = 0; n <= a.u.n_steps(); ++n)
      for (double v : a.u.at(n)) m = std::max(m, std::abs(v));
    for (int n = 1; n <= a.z.n_steps(); ++n)
      for (double v : a.z.at(n)) m = std::max(m, std::abs(v));
    return m;
  };

  for (int steps : {2, 4})
    for (int cells : {4, 8})
      for (double g1 : {0.0, 1.0}) {
        AssimConfig cfg;
        cfg.gamma_m = 1.0;
        cfg.gamma_0 = 1.0;
        cfg.gamma_1 = g1;
        cfg.n_steps = steps;
        cfg.final_time = 0.02;
        cfg.mesh = fem::Mesh1D(cells);
        const Discretization d(cfg);
        const ExactSolution sol{1};
        const ProblemData data = generate_data(d, sol, {});

        const auto direct = solvers::solve_direct(d, data);
        const auto mono = solvers::solve_monolithic(d, data, {1e-12, 50000});
        solvers::GdOptions gd_opt;
        gd_opt.coupling_tol = 1e-10;
        gd_opt.stop_on_z1_increase = false;  // this grid runs to the residual floor
        gd_opt.max_iterations = 50000;
        const auto gd =
            solvers::solve_gradient_descent(d, data, default_initial_guess(d, sol), gd_opt);

        worst_mono = std::max(worst_mono, state_gap(mono, direct));
        worst_gd = std::max(worst_gd, state_gap(gd, direct));

        const ProblemData empty = ProblemData::zeros(d.mesh(), d.n_steps());
        worst_zero = std::max(worst_zero, state_max(solvers::solve_direct(d, empty)));
        worst_zero = std::max(
            worst_zero, state_max(solvers::solve_monolithic(d, empty, {1e-12, 50000})));
        worst_zero = std::max(
            worst_zero, state_max(solvers::solve_gradient_descent(
                            d, empty, fem::NodalField::zeros(d.mesh()), gd_opt)));
      }

  std::vector<OracleCheck> out;
  out.push_back({"monolithic minres matches dense direct (small grid)", worst_mono <= 1e-6,
                 worst_mono});
  out.push_back(
      {"gradient descent matches dense direct (small grid)", worst_gd <= 1e-6, worst_gd});
  out.push_back({"homogeneous data yields the zero solution", worst_zero <= 1e-10, worst_zero});
  return out;
}

double observed_order(double e_coarse, double e_fine, double ratio) {
  if (!(e_coarse > 0.0) || !(e_fine > 0.0) || !(ratio > 0.0) || ratio == 1.0) return kNaN;
  return std::log(e_coarse / e_fine) / std::log(ratio);
}

double fit_slope_loglog(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("fit_slope_loglog: need two or more points");
  const std::size_t n = x.size();
  double mx = 0.0, my = 0.0;
  std::vector<double> lx(n), ly(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0))
      throw std::invalid_argument("fit_slope_loglog: points must be positive");
    lx[i] = std::log(x[i]);
    ly[i] = std::log(y[i]);
    mx += lx[i];
    my += ly[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  if (sxx == 0.0) throw std::invalid_argument("fit_slope_loglog: degenerate abscissae");
  return sxy / sxx;
}

std::string to_csv(const std::vector<RunRecord>& records) {
  std::string out =
      "mode,solver,h,tau,gamma_m,gamma_0,gamma_1,error,order,iterations,wall_time_s\n";
  for (const auto& r : records) append_row(out, r);
  return out;
}

void emit_csv(const std::vector<RunRecord>& records, const std::string& path) {
  std::ofstream stream(path, std::ios::binary);
  if (!stream) throw std::runtime_error("emit_csv: cannot open '" + path + "'");
  stream << to_csv(records);
  stream.flush();
  if (!stream) throw std::runtime_error("emit_csv: write failed for '" + path + "'");
}

}  // namespace heatrec::harness
