#pragma once

#include <cstddef>
#include <vector>

namespace heatrec::linalg {

using DenseVector = std::vector<double>;

double dot(const DenseVector& x, const DenseVector& y);
double norm2(const DenseVector& x);
/// y += a * x
void axpy(double a, const DenseVector& x, DenseVector& y);
void scale(double a, DenseVector& x);
bool all_finite(const DenseVector& x);

/// Outcome of an iterative (or direct) solve. residual_norm is the true
/// residual |b - A x| recomputed at exit, not the recurrence estimate.
struct SolveReport {
  int iterations = 0;
  double residual_norm = 0.0;
  bool converged = false;
};

/// Sparse symmetric matrix. Only entries with row <= col are stored; the
/// transpose half is applied implicitly in apply()/quad_form(). Assembly is
/// two-phase: add() accumulates coordinate entries, finalize() sorts, merges
/// duplicates and converts to CSR. apply() is only valid once finalized.
class SparseSymMatrix {
 public:
  explicit SparseSymMatrix(std::size_t dim);

  std::size_t dim() const { return dim_; }
  bool finalized() const { return finalized_; }
  std::size_t nnz_upper() const;

  /// Accumulate value at (row, col); indices are swapped into the upper
  /// triangle. Only valid before finalize().
  void add(std::size_t row, std::size_t col, double value);
  void finalize();

  /// y = A x (both triangles).
  void apply(const DenseVector& x, DenseVector& y) const;
  DenseVector apply(const DenseVector& x) const;

  /// x^T A x
  double quad_form(const DenseVector& x) const;

  DenseVector diagonal() const;

  /// Visit stored upper-triangle entries as f(row, col, value).
  template <class F>
  void for_each_upper(F&& f) const {
    for (std::size_t i = 0; i < dim_; ++i)
      for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k)
        f(i, col_[k], val_[k]);
  }

 private:
  std::size_t dim_;
  bool finalized_ = false;
  std::vector<std::size_t> coo_i_, coo_j_;
  std::vector<double> coo_v_;
  std::vector<std::size_t> row_ptr_, col_;
  std::vector<double> val_;
};

struct CgOptions {
  double tol = 1e-10;      // relative residual |b - A x| / |b|
  int max_iterations = 0;  // 0 means 10 * dim
};

/// Conjugate gradients for SPD systems. x holds the initial guess on entry
/// and the solution on exit. Fails (converged = false) on indefinite
/// directions or when max_iterations is exhausted.
SolveReport cg_solve(const SparseSymMatrix& A, const DenseVector& b,
                     DenseVector& x, const CgOptions& opt = {});

struct MinresOptions {
  double tol = 1e-8;  // relative to the initial residual norm
  int max_iterations = 50000;
};

/// MINRES for symmetric (possibly indefinite) systems, unpreconditioned
/// Lanczos with Givens rotations. x holds the initial guess on entry.
SolveReport minres_solve(const SparseSymMatrix& A, const DenseVector& b,
                         DenseVector& x, const MinresOptions& opt = {});

/// Row-major dense matrix, used by the direct solver and by tests that
/// cross-check sparse results against dense factorizations.
class DenseMatrix {
 public:
  DenseMatrix(std::size_t rows, std::size_t cols);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double& operator()(std::size_t i, std::size_t j) { return a_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return a_[i * cols_ + j]; }

  static DenseMatrix from_sparse(const SparseSymMatrix& A);

 private:
  std::size_t rows_, cols_;
  std::vector<double> a_;
};

/// Largest system dense_solve accepts; the direct path is meant for small
/// cross-check instances, not production solves.
inline constexpr std::size_t kDenseSolveCap = 2000;

/// Direct solve via LU with partial pivoting. Throws std::invalid_argument
/// on shape errors and std::runtime_error on a numerically singular pivot
/// (the message names the offending column).
DenseVector dense_solve(DenseMatrix A, DenseVector b);

}  // namespace heatrec::linalg
