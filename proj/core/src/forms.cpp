#include "heatrec/forms.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace heatrec::forms {

namespace {

using linalg::DenseVector;

DenseVector diff_scaled(const DenseVector& a, const DenseVector& b, double s) {
  // s * (a - b)
  DenseVector r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = s * (a[i] - b[i]);
  return r;
}

void check_shapes(const Discretization& d, const SpaceTimeState& u) {
  if (u.n_steps() != d.n_steps() || u.mesh.n_cells != d.mesh().n_cells)
    throw std::invalid_argument("space-time state does not match the discretization");
  for (const auto& lvl : u.levels)
    if (static_cast<int>(lvl.size()) != d.n_dof())
      throw std::invalid_argument("space-time state has a level of wrong size");
}

void check_shapes(const Discretization& d, const DualState& z) {
  if (z.n_steps() != d.n_steps() || z.mesh.n_cells != d.mesh().n_cells)
    throw std::invalid_argument("dual state does not match the discretization");
  for (const auto& lvl : z.levels)
    if (static_cast<int>(lvl.size()) != d.n_dof())
      throw std::invalid_argument("dual state has a level of wrong size");
}

void check_shapes(const Discretization& d, const ProblemData& data) {
  if (data.n_steps() != d.n_steps() ||
      data.q_levels.size() != data.f_levels.size())
    throw std::invalid_argument("problem data does not match the discretization");
  for (int n = 1; n <= d.n_steps(); ++n)
    if (static_cast<int>(data.f(n).size()) != d.n_dof() ||
        static_cast<int>(data.q(n).size()) != d.n_dof())
      throw std::invalid_argument("problem data has a level of wrong size");
}

}  // namespace

void AssimConfig::validate() const {
  if (!(gamma_m > 0.0)) throw std::invalid_argument("AssimConfig: gamma_m must be positive");
  if (!(gamma_0 > 0.0) && !allow_zero_gamma0)
    throw std::invalid_argument("AssimConfig: gamma_0 must be positive (set allow_zero_gamma0 to override)");
  if (gamma_0 < 0.0) throw std::invalid_argument("AssimConfig: gamma_0 must be nonnegative");
  if (gamma_1 < 0.0) throw std::invalid_argument("AssimConfig: gamma_1 must be nonnegative");
  if (n_steps < 1) throw std::invalid_argument("AssimConfig: n_steps must be at least 1");
  if (!(final_time > 0.0)) throw std::invalid_argument("AssimConfig: final_time must be positive");
  if (mesh.n_cells < 2) throw std::invalid_argument("AssimConfig: mesh too coarse");
}

SpaceTimeState SpaceTimeState::zeros(const fem::Mesh1D& m, int n_steps) {
  SpaceTimeState s;
  s.mesh = m;
  s.levels.assign(n_steps + 1, linalg::DenseVector(m.n_interior(), 0.0));
  return s;
}

DualState DualState::zeros(const fem::Mesh1D& m, int n_steps) {
  DualState s;
  s.mesh = m;
  s.levels.assign(n_steps, linalg::DenseVector(m.n_interior(), 0.0));
  return s;
}

ProblemData ProblemData::zeros(const fem::Mesh1D& m, int n_steps) {
  ProblemData p;
  p.f_levels.assign(n_steps, linalg::DenseVector(m.n_interior(), 0.0));
  p.q_levels.assign(n_steps, linalg::DenseVector(m.n_interior(), 0.0));
  return p;
}

Discretization::Discretization(AssimConfig cfg)
    : cfg_(std::move(cfg)),
      mass_(fem::assemble_mass(cfg_.mesh)),
      stiffness_(fem::assemble_stiffness(cfg_.mesh)),
      obs_mass_(fem::assemble_obs_mass(cfg_.mesh, cfg_.window)) {
  cfg_.validate();
}

linalg::DenseVector time_derivative(const SpaceTimeState& u, int n, double tau) {
  if (n < 1 || n > u.n_steps())
    throw std::invalid_argument("time_derivative: level out of range");
  return diff_scaled(u.at(n), u.at(n - 1), 1.0 / tau);
}

linalg::DenseVector sample_in_time(const SpaceTimeState& u, double tau, double t) {
  const int n_max = u.n_steps();
  if (n_max < 1) return u.at(0);
  const double s = std::clamp(t / tau, 0.0, static_cast<double>(n_max));
  const int n = std::min(static_cast<int>(s), n_max - 1);
  const double w = s - n;
  DenseVector r(u.at(n).size());
  for (std::size_t i = 0; i < r.size(); ++i)
    r[i] = (1.0 - w) * u.at(n)[i] + w * u.at(n + 1)[i];
  return r;
}

double lagrangian_value(const Discretization& d, const SpaceTimeState& u, const DualState& z,
                        const ProblemData& data) {
  check_shapes(d, u);
  check_shapes(d, z);
  check_shapes(d, data);
  const auto& cfg = d.config();
  const double tau = d.tau();
  const double h = d.mesh().h;

  double misfit = 0.0, incr = 0.0, constraint = 0.0;
  for (int n = 1; n <= d.n_steps(); ++n) {
    DenseVector diff = diff_scaled(u.at(n), data.q(n), 1.0);
    misfit += d.obs_mass().quad_form(diff);

    DenseVector du = time_derivative(u, n, tau);
    if (cfg.gamma_1 > 0.0) incr += tau * tau * d.stiffness().quad_form(du);

    const auto& zn = z.at(n);
    constraint += linalg::dot(du, d.mass().apply(zn));
    constraint += linalg::dot(u.at(n), d.stiffness().apply(zn));
    constraint -= linalg::dot(data.f(n), d.mass().apply(zn));
  }
  const double initial = h * h * d.stiffness().quad_form(u.at(0));
  return 0.5 * cfg.gamma_m * tau * misfit + 0.5 * cfg.gamma_0 * initial +
         0.5 * cfg.gamma_1 * tau * incr + tau * constraint;
}

double form_a1(const Discretization& d, const SpaceTimeState& u, const DualState& w) {
  check_shapes(d, u);
  check_shapes(d, w);
  const double tau = d.tau();
  double s = 0.0;
  for (int n = 1; n <= d.n_steps(); ++n) {
    DenseVector du = time_derivative(u, n, tau);
    s += linalg::dot(du, d.mass().apply(w.at(n)));
    s += linalg::dot(u.at(n), d.stiffness().apply(w.at(n)));
  }
  return tau * s;
}

double form_a2(const Discretization& d, const SpaceTimeState& u, const DualState& z,
               const SpaceTimeState& v) {
  check_shapes(d, u);
  check_shapes(d, z);
  check_shapes(d, v);
  const auto& cfg = d.config();
  const double tau = d.tau();
  const double h = d.mesh().h;

  double s = cfg.gamma_0 * h * h * linalg::dot(u.at(0), d.stiffness().apply(v.at(0)));
  for (int n = 1; n <= d.n_steps(); ++n) {
    s += cfg.gamma_m * tau * linalg::dot(u.at(n), d.obs_mass().apply(v.at(n)));
    if (cfg.gamma_1 > 0.0) {
      DenseVector du = time_derivative(u, n, tau);
      DenseVector dv = time_derivative(v, n, tau);
      s += cfg.gamma_1 * tau * tau * tau * linalg::dot(du, d.stiffness().apply(dv));
    }
    DenseVector dv = time_derivative(v, n, tau);
    s += tau * linalg::dot(dv, d.mass().apply(z.at(n)));
    s += tau * linalg::dot(v.at(n), d.stiffness().apply(z.at(n)));
  }
  return s;
}

double seminorm_r(const Discretization& d, const SpaceTimeState& u) {
  check_shapes(d, u);
  const auto& cfg = d.config();
  const double tau = d.tau();
  const double h = d.mesh().h;

  double s = cfg.gamma_0 * h * h * d.stiffness().quad_form(u.at(0));
  for (int n = 1; n <= d.n_steps(); ++n) {
    s += cfg.gamma_m * tau * d.obs_mass().quad_form(u.at(n));
    if (cfg.gamma_1 > 0.0) {
      DenseVector du = time_derivative(u, n, tau);
      s += cfg.gamma_1 * tau * tau * tau * d.stiffness().quad_form(du);
    }
  }
  return std::sqrt(s);
}

double norm_d(const Discretization& d, const SpaceTimeState& u, const DualState& z) {
  check_shapes(d, u);
  check_shapes(d, z);
  const double tau = d.tau();
  const double h = d.mesh().h;
  const int N = d.n_steps();

  double s = d.mass().quad_form(z.at(1)) + d.mass().quad_form(z.at(N));
  for (int n = 2; n <= N; ++n) {
    DenseVector dz = diff_scaled(z.at(n), z.at(n - 1), 1.0);  // tau * dz^n
    s += d.mass().quad_form(dz);
  }
  for (int n = 1; n <= N; ++n) s += tau * d.stiffness().quad_form(z.at(n));

  s += h * h * d.stiffness().quad_form(u.at(N));
  for (int n = 1; n <= N; ++n) {
    DenseVector du = time_derivative(u, n, tau);
    s += h * h * tau * d.mass().quad_form(du);
    s += h * h * tau * tau * d.stiffness().quad_form(du);
  }
  return std::sqrt(s);
}

double norm_c(const Discretization& d, const SpaceTimeState& v, const DualState& w) {
  check_shapes(d, v);
  check_shapes(d, w);
  const double r = seminorm_r(d, v);
  double s = r * r;
  for (int n = 1; n <= d.n_steps(); ++n) s += d.tau() * d.mass().quad_form(w.at(n));
  return std::sqrt(s);
}

KktSystem assemble_kkt(const Discretization& d, const ProblemData& data) {
  check_shapes(d, data);
  const auto& cfg = d.config();
  const int N = d.n_steps();
  const int nd = d.n_dof();
  const double tau = d.tau();
  const double h = d.mesh().h;

  KktIndexMap map{N, nd};
  linalg::SparseSymMatrix K(map.size());

  const auto& M = d.mass();
  const auto& A = d.stiffness();
  const auto& W = d.obs_mass();

  // window misfit blocks, levels 1..N
  for (int n = 1; n <= N; ++n)
    W.for_each_upper([&](std::size_t i, std::size_t j, double v) {
      K.add(map.u_index(n, i), map.u_index(n, j), cfg.gamma_m * tau * v);
    });

  // initial gradient penalty at level 0
  A.for_each_upper([&](std::size_t i, std::size_t j, double v) {
    K.add(map.u_index(0, i), map.u_index(0, j), cfg.gamma_0 * h * h * v);
  });

  // increment penalty: second-difference pattern in time tensored with the
  // stiffness matrix, scaled by gamma_1 * tau
  if (cfg.gamma_1 > 0.0) {
    for (int p = 0; p <= N; ++p) {
      const double dpp = (p == 0 || p == N) ? 1.0 : 2.0;
      A.for_each_upper([&](std::size_t i, std::size_t j, double v) {
        K.add(map.u_index(p, i), map.u_index(p, j), cfg.gamma_1 * tau * dpp * v);
      });
    }
    for (int p = 0; p < N; ++p)
      A.for_each_upper([&](std::size_t i, std::size_t j, double v) {
        K.add(map.u_index(p, i), map.u_index(p + 1, j), -cfg.gamma_1 * tau * v);
        if (i != j) K.add(map.u_index(p, j), map.u_index(p + 1, i), -cfg.gamma_1 * tau * v);
      });
  }

  // heat constraint rows: (M + tau A) u^n - M u^{n-1}, mirrored into the
  // upper triangle against the z columns
  for (int n = 1; n <= N; ++n) {
    M.for_each_upper([&](std::size_t i, std::size_t j, double v) {
      K.add(map.u_index(n, i), map.z_index(n, j), v);
      if (i != j) K.add(map.u_index(n, j), map.z_index(n, i), v);
      K.add(map.u_index(n - 1, i), map.z_index(n, j), -v);
      if (i != j) K.add(map.u_index(n - 1, j), map.z_index(n, i), -v);
    });
    A.for_each_upper([&](std::size_t i, std::size_t j, double v) {
      K.add(map.u_index(n, i), map.z_index(n, j), tau * v);
      if (i != j) K.add(map.u_index(n, j), map.z_index(n, i), tau * v);
    });
  }
  K.finalize();

  linalg::DenseVector rhs(map.size(), 0.0);
  for (int n = 1; n <= N; ++n) {
    const linalg::DenseVector wq = W.apply(data.q(n));
    const linalg::DenseVector mf = M.apply(data.f(n));
    for (int i = 0; i < nd; ++i) {
      rhs[map.u_index(n, i)] = cfg.gamma_m * tau * wq[i];
      rhs[map.z_index(n, i)] = tau * mf[i];
    }
  }
  return KktSystem(map, std::move(K), std::move(rhs));
}

linalg::DenseVector flatten(const KktIndexMap& map, const SpaceTimeState& u, const DualState& z) {
  linalg::DenseVector x(map.size(), 0.0);
  for (int n = 0; n <= map.n_steps; ++n)
    for (int i = 0; i < map.n_dof; ++i) x[map.u_index(n, i)] = u.at(n)[i];
  for (int n = 1; n <= map.n_steps; ++n)
    for (int i = 0; i < map.n_dof; ++i) x[map.z_index(n, i)] = z.at(n)[i];
  return x;
}

std::pair<SpaceTimeState, DualState> unflatten(const KktIndexMap& map, const fem::Mesh1D& mesh,
                                               const linalg::DenseVector& x) {
  if (x.size() != map.size()) throw std::invalid_argument("unflatten: size mismatch");
  SpaceTimeState u = SpaceTimeState::zeros(mesh, map.n_steps);
  DualState z = DualState::zeros(mesh, map.n_steps);
  for (int n = 0; n <= map.n_steps; ++n)
    for (int i = 0; i < map.n_dof; ++i) u.at(n)[i] = x[map.u_index(n, i)];
  for (int n = 1; n <= map.n_steps; ++n)
    for (int i = 0; i < map.n_dof; ++i) z.at(n)[i] = x[map.z_index(n, i)];
  return {std::move(u), std::move(z)};
}

std::pair<SpaceTimeState, DualState> coercivity_witness(const Discretization& d,
                                                        const SpaceTimeState& u,
                                                        const DualState& z, double alpha) {
  check_shapes(d, u);
  check_shapes(d, z);
  const double tau = d.tau();
  const double h = d.mesh().h;
  const int N = d.n_steps();

  SpaceTimeState v = u;
  for (int n = 1; n <= N; ++n) linalg::axpy(alpha, z.at(n), v.at(n));

  DualState w = DualState::zeros(d.mesh(), N);
  for (int n = 1; n <= N; ++n) {
    DenseVector du = time_derivative(u, n, tau);
    auto& wn = w.at(n);
    for (std::size_t i = 0; i < wn.size(); ++i)
      wn[i] = -z.at(n)[i] + alpha * h * h * du[i];
  }
  return {std::move(v), std::move(w)};
}

}  // namespace heatrec::forms
