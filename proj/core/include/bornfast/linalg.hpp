#ifndef BORNFAST_LINALG_HPP
#define BORNFAST_LINALG_HPP

// Dense real matrices, LU solves, one-sided Jacobi SVD and the truncated-SVD
// pseudoinverse that plays the role of the regularized inverse of K_1.

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace bornfast::linalg {

class LinalgError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SingularMatrixError : public LinalgError {
 public:
  SingularMatrixError(const std::string& what, double pivot)
      : LinalgError(what), pivot_(pivot) {}
  double pivot() const noexcept { return pivot_; }

 private:
  double pivot_;
};

class ConvergenceError : public LinalgError {
 public:
  ConvergenceError(const std::string& what, double condition_estimate)
      : LinalgError(what), condition_estimate_(condition_estimate) {}
  double condition_estimate() const noexcept { return condition_estimate_; }

 private:
  double condition_estimate_;
};

/// Row-major dense matrix.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> entries);

  static DenseMatrix identity(std::size_t n);
  static DenseMatrix from_rows(const std::vector<std::vector<double>>& rows);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return entries_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return entries_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return entries_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {entries_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {entries_.data() + r * cols_, cols_}; }

  std::span<const double> entries() const noexcept { return entries_; }

  DenseMatrix transposed() const;
  double frobenius_norm() const;
  bool all_finite() const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> entries_;
};

DenseMatrix operator*(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix operator-(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix operator*(double s, const DenseMatrix& a);

std::vector<double> multiply(const DenseMatrix& a, std::span<const double> x);
std::vector<double> multiply_transposed(const DenseMatrix& a, std::span<const double> x);

struct SvdFactors {
  DenseMatrix u;                       // rows x min(rows, cols), orthonormal columns
  std::vector<double> singular_values; // non-increasing, >= 0
  DenseMatrix v;                       // cols x min(rows, cols), orthonormal columns

  DenseMatrix reconstruct() const;
};

struct SvdOptions {
  int max_sweeps = 80;
  double tolerance = 1e-15;
};

/// One-sided (Hestenes) Jacobi SVD.
SvdFactors svd(const DenseMatrix& a, const SvdOptions& opts = {});

struct RegularizedInverse {
  DenseMatrix pinv;  // cols x rows of the original matrix
  std::size_t retained_rank = 0;
  std::vector<double> singular_values_kept;
  std::vector<double> singular_values_dropped;

  std::vector<double> apply(std::span<const double> data) const { return multiply(pinv, data); }
};

/// Pseudoinverse keeping the `rank` largest singular values.  Rejects a rank
/// whose last kept singular value is below 1e-14 times the largest.
RegularizedInverse truncated_pinv(const DenseMatrix& a, std::size_t rank);
RegularizedInverse truncated_pinv(const SvdFactors& factors, std::size_t rank);

/// Threshold mode: keep every singular value s_i >= tau * s_1.
RegularizedInverse truncated_pinv_threshold(const DenseMatrix& a, double tau);

/// Partial-pivoted LU factorization of a square matrix.
class LuFactorization {
 public:
  explicit LuFactorization(DenseMatrix a);
  std::vector<double> solve(std::span<const double> b) const;
  double min_pivot() const noexcept { return min_pivot_; }

 private:
  DenseMatrix lu_;
  std::vector<std::size_t> perm_;
  double min_pivot_ = 0.0;
};

std::vector<double> solve(const DenseMatrix& a, std::span<const double> b);

/// Largest singular value by power iteration on a^T a.
double spectral_norm_estimate(const DenseMatrix& a, int iterations = 200);

}  // namespace bornfast::linalg

#endif  // BORNFAST_LINALG_HPP
