#include "heatrec/linalg.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace heatrec::linalg {

double dot(const DenseVector& x, const DenseVector& y) {
  assert(x.size() == y.size());
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

double norm2(const DenseVector& x) { return std::sqrt(dot(x, x)); }

void axpy(double a, const DenseVector& x, DenseVector& y) {
  assert(x.size() == y.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

void scale(double a, DenseVector& x) {
  for (double& v : x) v *= a;
}

bool all_finite(const DenseVector& x) {
  for (double v : x)
    if (!std::isfinite(v)) return false;
  return true;
}

SparseSymMatrix::SparseSymMatrix(std::size_t dim) : dim_(dim) {
  if (dim == 0) throw std::invalid_argument("SparseSymMatrix: dim must be positive");
}

std::size_t SparseSymMatrix::nnz_upper() const {
  return finalized_ ? val_.size() : coo_v_.size();
}

void SparseSymMatrix::add(std::size_t row, std::size_t col, double value) {
  if (finalized_) throw std::logic_error("SparseSymMatrix::add after finalize");
  if (row >= dim_ || col >= dim_)
    throw std::invalid_argument("SparseSymMatrix::add: index out of range");
  if (row > col) std::swap(row, col);
  coo_i_.push_back(row);
  coo_j_.push_back(col);
  coo_v_.push_back(value);
}

void SparseSymMatrix::finalize() {
  if (finalized_) throw std::logic_error("SparseSymMatrix::finalize called twice");

  std::vector<std::size_t> perm(coo_v_.size());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::sort(perm.begin(), perm.end(), [&](std::size_t a, std::size_t b) {
    if (coo_i_[a] != coo_i_[b]) return coo_i_[a] < coo_i_[b];
    return coo_j_[a] < coo_j_[b];
  });

  row_ptr_.assign(dim_ + 1, 0);
  col_.clear();
  val_.clear();
  col_.reserve(perm.size());
  val_.reserve(perm.size());

  std::size_t last_i = dim_, last_j = dim_;  // sentinel: no entry yet
  for (std::size_t p : perm) {
    std::size_t i = coo_i_[p], j = coo_j_[p];
    double v = coo_v_[p];
    if (i == last_i && j == last_j) {
      val_.back() += v;  // duplicate (i, j): merge
    } else {
      col_.push_back(j);
      val_.push_back(v);
      row_ptr_[i + 1] = col_.size();
      last_i = i;
      last_j = j;
    }
  }
  // turn per-row end offsets into cumulative pointers
  for (std::size_t i = 1; i <= dim_; ++i)
    row_ptr_[i] = std::max(row_ptr_[i], row_ptr_[i - 1]);

  coo_i_.clear();
  coo_i_.shrink_to_fit();
  coo_j_.clear();
  coo_j_.shrink_to_fit();
  coo_v_.clear();
  coo_v_.shrink_to_fit();
  finalized_ = true;
}

void SparseSymMatrix::apply(const DenseVector& x, DenseVector& y) const {
  if (!finalized_) throw std::logic_error("SparseSymMatrix::apply before finalize");
  if (x.size() != dim_) throw std::invalid_argument("SparseSymMatrix::apply: size mismatch");
  y.assign(dim_, 0.0);
  for (std::size_t i = 0; i < dim_; ++i) {
    double yi = 0.0;
    double xi = x[i];
    for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
      std::size_t j = col_[k];
      double v = val_[k];
      yi += v * x[j];
      if (j != i) y[j] += v * xi;
    }
    y[i] += yi;
  }
}

DenseVector SparseSymMatrix::apply(const DenseVector& x) const {
  DenseVector y;
  apply(x, y);
  return y;
}

double SparseSymMatrix::quad_form(const DenseVector& x) const {
  if (!finalized_) throw std::logic_error("SparseSymMatrix::quad_form before finalize");
  if (x.size() != dim_) throw std::invalid_argument("SparseSymMatrix::quad_form: size mismatch");
  double q = 0.0;
  for (std::size_t i = 0; i < dim_; ++i)
    for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
      std::size_t j = col_[k];
      double v = val_[k];
      q += (j == i) ? v * x[i] * x[i] : 2.0 * v * x[i] * x[j];
    }
  return q;
}

DenseVector SparseSymMatrix::diagonal() const {
  if (!finalized_) throw std::logic_error("SparseSymMatrix::diagonal before finalize");
  DenseVector d(dim_, 0.0);
  for (std::size_t i = 0; i < dim_; ++i)
    for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k)
      if (col_[k] == i) d[i] += val_[k];
  return d;
}

namespace {

DenseVector residual(const SparseSymMatrix& A, const DenseVector& x, const DenseVector& b) {
  DenseVector r = A.apply(x);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = b[i] - r[i];
  return r;
}

}  // namespace

SolveReport cg_solve(const SparseSymMatrix& A, const DenseVector& b, DenseVector& x,
                     const CgOptions& opt) {
  const std::size_t n = A.dim();
  if (b.size() != n) throw std::invalid_argument("cg_solve: rhs size mismatch");
  if (x.size() != n) x.assign(n, 0.0);
  const int maxit = opt.max_iterations > 0 ? opt.max_iterations : static_cast<int>(10 * n);

  SolveReport rep;
  const double nb = norm2(b);
  if (nb == 0.0) {
    x.assign(n, 0.0);
    rep.converged = true;
    return rep;
  }
  const double target = opt.tol * nb;

  DenseVector r = residual(A, x, b);
  double rho = dot(r, r);
  if (std::sqrt(rho) <= target) {
    rep.converged = true;
    rep.residual_norm = std::sqrt(rho);
    return rep;
  }
  DenseVector p = r, q(n);

  while (rep.iterations < maxit) {
    A.apply(p, q);
    const double pq = dot(p, q);
    if (!(pq > 0.0) || !std::isfinite(pq)) {
      rep.residual_norm = norm2(residual(A, x, b));
      return rep;  // matrix not SPD along p, or breakdown
    }
    const double alpha = rho / pq;
    axpy(alpha, p, x);
    axpy(-alpha, q, r);
    ++rep.iterations;

    double rho_next = dot(r, r);
    if (std::sqrt(rho_next) <= target) {
      // recurrence says done; confirm against the true residual
      r = residual(A, x, b);
      rho_next = dot(r, r);
      if (std::sqrt(rho_next) <= target) {
        rep.converged = true;
        rep.residual_norm = std::sqrt(rho_next);
        return rep;
      }
      p = r;  // restart direction from the true residual
      rho = rho_next;
      continue;
    }
    const double beta = rho_next / rho;
    for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * p[i];
    rho = rho_next;
  }
  rep.residual_norm = norm2(residual(A, x, b));
  rep.converged = rep.residual_norm <= target;
  return rep;
}

SolveReport minres_solve(const SparseSymMatrix& A, const DenseVector& b, DenseVector& x,
                         const MinresOptions& opt) {
  const std::size_t n = A.dim();
  if (b.size() != n) throw std::invalid_argument("minres_solve: rhs size mismatch");
  if (x.size() != n) x.assign(n, 0.0);

  SolveReport rep;
  DenseVector r1 = residual(A, x, b);
  const double beta1 = norm2(r1);
  if (beta1 == 0.0) {
    rep.converged = true;
    return rep;
  }
  double threshold = opt.tol * beta1;

  // Lanczos vectors and rotation state (Paige--Saunders recurrences).
  DenseVector y = r1, r2 = r1;
  DenseVector v(n), w(n, 0.0), w1(n, 0.0), w2(n, 0.0);
  double oldb = 0.0, beta = beta1, dbar = 0.0, epsln = 0.0, phibar = beta1;
  double cs = -1.0, sn = 0.0, oldeps = 0.0;

  while (rep.iterations < opt.max_iterations) {
    ++rep.iterations;
    const double s = 1.0 / beta;
    for (std::size_t i = 0; i < n; ++i) v[i] = s * y[i];
    A.apply(v, y);
    if (rep.iterations >= 2) axpy(-beta / oldb, r1, y);
    const double alfa = dot(v, y);
    axpy(-alfa / beta, r2, y);
    r1 = r2;
    r2 = y;
    oldb = beta;
    beta = norm2(r2);
    if (!std::isfinite(beta) || !std::isfinite(alfa)) break;

    oldeps = epsln;
    const double delta = cs * dbar + sn * alfa;
    const double gbar = sn * dbar - cs * alfa;
    epsln = sn * beta;
    dbar = -cs * beta;

    double gamma = std::sqrt(gbar * gbar + beta * beta);
    if (gamma == 0.0) gamma = 1e-300;
    cs = gbar / gamma;
    sn = beta / gamma;
    const double phi = cs * phibar;
    phibar = sn * phibar;

    w1 = w2;
    w2 = w;
    for (std::size_t i = 0; i < n; ++i)
      w[i] = (v[i] - oldeps * w1[i] - delta * w2[i]) / gamma;
    axpy(phi, w, x);

    if (std::abs(phibar) <= threshold) {
      rep.residual_norm = norm2(residual(A, x, b));
      if (rep.residual_norm <= opt.tol * beta1) {
        rep.converged = true;
        return rep;
      }
      threshold *= 0.25;  // recurrence drifted; keep going
    }
    if (beta <= 1e-300) break;  // invariant subspace exhausted
  }
  rep.residual_norm = norm2(residual(A, x, b));
  rep.converged = rep.residual_norm <= opt.tol * beta1 && all_finite(x);
  return rep;
}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), a_(rows * cols, 0.0) {}

DenseMatrix DenseMatrix::from_sparse(const SparseSymMatrix& A) {
  DenseMatrix d(A.dim(), A.dim());
  A.for_each_upper([&](std::size_t i, std::size_t j, double v) {
    d(i, j) += v;
    if (i != j) d(j, i) += v;
  });
  return d;
}

DenseVector dense_solve(DenseMatrix A, DenseVector b) {
  const std::size_t n = A.rows();
  if (A.cols() != n) throw std::invalid_argument("dense_solve: matrix must be square");
  if (b.size() != n) throw std::invalid_argument("dense_solve: rhs size mismatch");
  if (n > kDenseSolveCap)
    throw std::invalid_argument("dense_solve: dimension exceeds the dense solver cap");

  double max_abs = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) max_abs = std::max(max_abs, std::abs(A(i, j)));
  const double pivot_tol = 1e-14 * std::max(1.0, max_abs);

  std::vector<std::size_t> piv(n);
  std::iota(piv.begin(), piv.end(), std::size_t{0});

  for (std::size_t k = 0; k < n; ++k) {
    std::size_t imax = k;
    double vmax = std::abs(A(k, k));
    for (std::size_t i = k + 1; i < n; ++i) {
      const double v = std::abs(A(i, k));
      if (v > vmax) {
        vmax = v;
        imax = i;
      }
    }
    if (vmax <= pivot_tol)
      throw std::runtime_error("dense_solve: singular matrix (pivot in column " +
                               std::to_string(k) + ")");
    if (imax != k) {
      for (std::size_t j = 0; j < n; ++j) std::swap(A(k, j), A(imax, j));
      std::swap(b[k], b[imax]);
    }
    for (std::size_t i = k + 1; i < n; ++i) {
      const double m = A(i, k) / A(k, k);
      A(i, k) = 0.0;
      if (m == 0.0) continue;
      for (std::size_t j = k + 1; j < n; ++j) A(i, j) -= m * A(k, j);
      b[i] -= m * b[k];
    }
  }
  // back substitution
  DenseVector x(n, 0.0);
  for (std::size_t ir = n; ir-- > 0;) {
    double s = b[ir];
    for (std::size_t j = ir + 1; j < n; ++j) s -= A(ir, j) * x[j];
    x[ir] = s / A(ir, ir);
  }
  return x;
}

}  // namespace heatrec::linalg
