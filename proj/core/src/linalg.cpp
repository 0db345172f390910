#include "bornfast/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace bornfast::linalg {

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), entries_(rows * cols, fill) {}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> entries)
    : rows_(rows), cols_(cols), entries_(std::move(entries)) {
  if (entries_.size() != rows_ * cols_) {
    throw LinalgError("DenseMatrix: entry count " + std::to_string(entries_.size()) +
                      " does not match " + std::to_string(rows_) + "x" + std::to_string(cols_));
  }
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
  DenseMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

DenseMatrix DenseMatrix::from_rows(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) return {};
  const std::size_t cols = rows.front().size();
  DenseMatrix m(rows.size(), cols);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != cols) throw LinalgError("DenseMatrix::from_rows: ragged rows");
    std::copy(rows[r].begin(), rows[r].end(), m.row(r).begin());
  }
  return m;
}

DenseMatrix DenseMatrix::transposed() const {
  DenseMatrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  return t;
}

double DenseMatrix::frobenius_norm() const {
  double scale = 0.0;
  for (double v : entries_) scale = std::max(scale, std::abs(v));
  if (scale == 0.0) return 0.0;
  double sum = 0.0;
  for (double v : entries_) sum += (v / scale) * (v / scale);
  return scale * std::sqrt(sum);
}

bool DenseMatrix::all_finite() const {
  return std::all_of(entries_.begin(), entries_.end(), [](double v) { return std::isfinite(v); });
}

DenseMatrix operator*(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.rows()) throw LinalgError("matrix product: inner dimensions differ");
  DenseMatrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto out = c.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      const auto brow = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) out[j] += aik * brow[j];
    }
  }
  return c;
}

DenseMatrix operator-(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw LinalgError("matrix difference: shapes differ");
  }
  DenseMatrix c(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) c(i, j) = a(i, j) - b(i, j);
  return c;
}

DenseMatrix operator*(double s, const DenseMatrix& a) {
  DenseMatrix c(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) c(i, j) = s * a(i, j);
  return c;
}

std::vector<double> multiply(const DenseMatrix& a, std::span<const double> x) {
  if (x.size() != a.cols()) {
    throw LinalgError("matrix-vector product: vector length " + std::to_string(x.size()) +
                      " != cols " + std::to_string(a.cols()));
  }
  std::vector<double> y(a.rows(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const auto r = a.row(i);
    y[i] = std::inner_product(r.begin(), r.end(), x.begin(), 0.0);
  }
  return y;
}

std::vector<double> multiply_transposed(const DenseMatrix& a, std::span<const double> x) {
  if (x.size() != a.rows()) throw LinalgError("transposed product: length mismatch");
  std::vector<double> y(a.cols(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const auto r = a.row(i);
    for (std::size_t j = 0; j < a.cols(); ++j) y[j] += r[j] * x[i];
  }
  return y;
}

DenseMatrix SvdFactors::reconstruct() const {
  DenseMatrix us = u;
  for (std::size_t i = 0; i < us.rows(); ++i)
    for (std::size_t j = 0; j < us.cols(); ++j) us(i, j) *= singular_values[j];
  return us * v.transposed();
}

namespace {

using Column = std::vector<double>;

double dot(const Column& a, const Column& b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

double norm(const Column& a) {
  double scale = 0.0;
  for (double v : a) scale = std::max(scale, std::abs(v));
  if (scale == 0.0) return 0.0;
  double s = 0.0;
  for (double v : a) s += (v / scale) * (v / scale);
  return scale * std::sqrt(s);
}

void rotate(Column& p, Column& q, double c, double s) {
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double wp = p[i];
    const double wq = q[i];
    p[i] = c * wp - s * wq;
    q[i] = s * wp + c * wq;
  }
}

// Extends `basis` (orthonormal columns, some possibly zero placeholders marked
// by `valid`) to a full orthonormal set by Gram-Schmidt on unit vectors.
void complete_orthonormal(std::vector<Column>& basis, const std::vector<bool>& valid) {
  const std::size_t dim = basis.empty() ? 0 : basis.front().size();
  std::vector<std::size_t> accepted;
  for (std::size_t i = 0; i < basis.size(); ++i)
    if (valid[i]) accepted.push_back(i);
  std::size_t candidate = 0;
  for (std::size_t i = 0; i < basis.size(); ++i) {
    if (valid[i]) continue;
    while (candidate < dim) {
      Column e(dim, 0.0);
      e[candidate++] = 1.0;
      for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t j : accepted) {
          const double proj = dot(e, basis[j]);
          for (std::size_t k = 0; k < dim; ++k) e[k] -= proj * basis[j][k];
        }
      }
      const double n = norm(e);
      if (n > 1e-8) {
        for (double& v : e) v /= n;
        basis[i] = std::move(e);
        accepted.push_back(i);
        break;
      }
    }
  }
}

// Jacobi on a tall (rows >= cols) matrix.
SvdFactors svd_tall(const DenseMatrix& a, const SvdOptions& opts) {
  const std::size_t m = a.rows();
  const std::size_t n = a.cols();
  std::vector<Column> w(n, Column(m));
  std::vector<Column> v(n, Column(n, 0.0));
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < m; ++i) w[j][i] = a(i, j);
    v[j][j] = 1.0;
  }

  bool converged = n < 2;
  double worst = 0.0;
  for (int sweep = 0; sweep < opts.max_sweeps && !converged; ++sweep) {
    bool rotated = false;
    worst = 0.0;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double alpha = dot(w[p], w[p]);
        const double beta = dot(w[q], w[q]);
        const double gamma = dot(w[p], w[q]);
        if (alpha == 0.0 || beta == 0.0) continue;
        const double off = std::abs(gamma) / std::sqrt(alpha * beta);
        worst = std::max(worst, off);
        if (off <= opts.tolerance) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::hypot(1.0, zeta));
        const double c = 1.0 / std::hypot(1.0, t);
        const double s = c * t;
        rotate(w[p], w[q], c, s);
        rotate(v[p], v[q], c, s);
      }
    }
    converged = !rotated;
  }

  std::vector<double> sigma(n);
  for (std::size_t j = 0; j < n; ++j) sigma[j] = norm(w[j]);
  if (!converged) {
    const double smax = *std::max_element(sigma.begin(), sigma.end());
    double smin = smax;
    for (double s : sigma)
      if (s > 0.0) smin = std::min(smin, s);
    throw ConvergenceError("Jacobi SVD did not converge in " + std::to_string(opts.max_sweeps) +
                               " sweeps (worst column cosine " + std::to_string(worst) + ")",
                           smin > 0.0 ? smax / smin : std::numeric_limits<double>::infinity());
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return sigma[i] > sigma[j]; });

  std::vector<Column> ucols(n);
  std::vector<bool> valid(n, true);
  SvdFactors f;
  f.singular_values.resize(n);
  f.v = DenseMatrix(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t j = order[k];
    f.singular_values[k] = sigma[j];
    for (std::size_t i = 0; i < n; ++i) f.v(i, k) = v[j][i];
    if (sigma[j] > std::numeric_limits<double>::min()) {
      ucols[k] = w[j];
      for (double& x : ucols[k]) x /= sigma[j];
    } else {
      f.singular_values[k] = 0.0;
      ucols[k] = Column(m, 0.0);
      valid[k] = false;
    }
  }
  complete_orthonormal(ucols, valid);
  f.u = DenseMatrix(m, n);
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < m; ++i) f.u(i, k) = ucols[k][i];
  return f;
}

}  // namespace

SvdFactors svd(const DenseMatrix& a, const SvdOptions& opts) {
  if (a.empty()) throw LinalgError("svd: empty matrix");
  if (!a.all_finite()) throw LinalgError("svd: matrix has non-finite entries");
  if (a.rows() >= a.cols()) return svd_tall(a, opts);
  SvdFactors t = svd_tall(a.transposed(), opts);
  std::swap(t.u, t.v);
  return t;
}

RegularizedInverse truncated_pinv(const SvdFactors& f, std::size_t rank) {
  const std::size_t full = f.singular_values.size();
  if (rank < 1 || rank > full) {
    throw LinalgError("truncated_pinv: rank " + std::to_string(rank) + " outside [1, " +
                      std::to_string(full) + "]");
  }
  const double s1 = f.singular_values.front();
  const double sr = f.singular_values[rank - 1];
  if (!(sr >= 1e-14 * s1) || sr == 0.0) {
    throw LinalgError("truncated_pinv: rank " + std::to_string(rank) +
                      " exceeds numerical rank (s_rank / s_1 = " + std::to_string(sr / s1) + ")");
  }
  RegularizedInverse out;
  out.retained_rank = rank;
  out.singular_values_kept.assign(f.singular_values.begin(),
                                  f.singular_values.begin() + static_cast<std::ptrdiff_t>(rank));
  out.singular_values_dropped.assign(
      f.singular_values.begin() + static_cast<std::ptrdiff_t>(rank), f.singular_values.end());

  const std::size_t n = f.v.rows();
  const std::size_t m = f.u.rows();
  out.pinv = DenseMatrix(n, m);
  for (std::size_t k = 0; k < rank; ++k) {
    const double inv = 1.0 / f.singular_values[k];
    for (std::size_t i = 0; i < n; ++i) {
      const double vik = f.v(i, k) * inv;
      auto row = out.pinv.row(i);
      for (std::size_t j = 0; j < m; ++j) row[j] += vik * f.u(j, k);
    }
  }
  return out;
}

RegularizedInverse truncated_pinv(const DenseMatrix& a, std::size_t rank) {
  return truncated_pinv(svd(a), rank);
}

RegularizedInverse truncated_pinv_threshold(const DenseMatrix& a, double tau) {
  if (!(tau > 0.0) || tau > 1.0) throw LinalgError("truncated_pinv_threshold: tau must be in (0, 1]");
  const SvdFactors f = svd(a);
  const double cut = tau * f.singular_values.front();
  std::size_t rank = 0;
  while (rank < f.singular_values.size() && f.singular_values[rank] >= cut) ++rank;
  return truncated_pinv(f, std::max<std::size_t>(rank, 1));
}

LuFactorization::LuFactorization(DenseMatrix a) : lu_(std::move(a)) {
  const std::size_t n = lu_.rows();
  if (n == 0 || lu_.cols() != n) throw LinalgError("LU: matrix must be square and non-empty");
  double scale = 0.0;
  for (double v : lu_.entries()) scale = std::max(scale, std::abs(v));
  perm_.resize(n);
  std::iota(perm_.begin(), perm_.end(), 0);
  min_pivot_ = std::numeric_limits<double>::infinity();
  const double threshold = 1e-14 * scale;
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t piv = k;
    for (std::size_t i = k + 1; i < n; ++i)
      if (std::abs(lu_(i, k)) > std::abs(lu_(piv, k))) piv = i;
    const double pivot = lu_(piv, k);
    min_pivot_ = std::min(min_pivot_, std::abs(pivot));
    if (!(std::abs(pivot) > threshold)) {
      throw SingularMatrixError("LU: matrix is singular to working precision (pivot " +
                                    std::to_string(std::abs(pivot)) + " at column " +
                                    std::to_string(k) + ")",
                                std::abs(pivot));
    }
    if (piv != k) {
      std::swap_ranges(lu_.row(k).begin(), lu_.row(k).end(), lu_.row(piv).begin());
      std::swap(perm_[k], perm_[piv]);
    }
    for (std::size_t i = k + 1; i < n; ++i) {
      const double l = lu_(i, k) / pivot;
      lu_(i, k) = l;
      if (l == 0.0) continue;
      for (std::size_t j = k + 1; j < n; ++j) lu_(i, j) -= l * lu_(k, j);
    }
  }
}

std::vector<double> LuFactorization::solve(std::span<const double> b) const {
  const std::size_t n = lu_.rows();
  if (b.size() != n) throw LinalgError("LU solve: right-hand side length mismatch");
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = b[perm_[i]];
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < i; ++j) x[i] -= lu_(i, j) * x[j];
  for (std::size_t i = n; i-- > 0;) {
    for (std::size_t j = i + 1; j < n; ++j) x[i] -= lu_(i, j) * x[j];
    x[i] /= lu_(i, i);
  }
  return x;
}

std::vector<double> solve(const DenseMatrix& a, std::span<const double> b) {
  if (a.rows() != a.cols()) throw LinalgError("solve: matrix must be square");
  if (b.size() != a.rows()) throw LinalgError("solve: right-hand side length mismatch");
  return LuFactorization(a).solve(b);
}

double spectral_norm_estimate(const DenseMatrix& a, int iterations) {
  if (a.empty()) return 0.0;
  std::vector<double> x(a.cols());
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = 1.0 + 0.37 * static_cast<double>(i % 7);
  double estimate = 0.0;
  for (int it = 0; it < iterations; ++it) {
    double nx = std::sqrt(std::inner_product(x.begin(), x.end(), x.begin(), 0.0));
    if (nx == 0.0) return 0.0;
    for (double& v : x) v /= nx;
    const std::vector<double> y = multiply(a, x);
    const double ny = std::sqrt(std::inner_product(y.begin(), y.end(), y.begin(), 0.0));
    x = multiply_transposed(a, y);
    if (std::abs(ny - estimate) <= 1e-13 * ny) {
      estimate = ny;
      break;
    }
    estimate = ny;
  }
  return estimate;
}

}  // namespace bornfast::linalg
