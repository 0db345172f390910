#ifndef BORNFAST_TESTS_ORACLES_HPP
#define BORNFAST_TESTS_ORACLES_HPP

// Reference computations that share no code path with the library.

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "bornfast/fields.hpp"
#include "bornfast/forward_model.hpp"
#include "bornfast/linalg.hpp"
#include "bornfast/radial_model.hpp"

namespace oracle {

using bornfast::BoundaryData;
using bornfast::MaterialField;
using bornfast::linalg::DenseMatrix;

// I_m(x) = sum_k (x/2)^(2k+m) / (k! (k+m)!)
inline double bessel_i_series(int m, double x, int terms = 40) {
  long double half = x / 2.0L;
  long double term = 1.0L;
  for (int i = 1; i <= m; ++i) term *= half / i;
  long double sum = 0.0L;
  for (int k = 0; k < terms; ++k) {
    sum += term;
    term *= half * half / ((k + 1.0L) * (k + 1.0L + m));
  }
  return static_cast<double>(sum);
}

inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                               double tol, int depth = 50) {
  auto simpson = [&](double lo, double hi, double flo, double fmid, double fhi) {
    return (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi);
  };
  std::function<double(double, double, double, double, double, double, double, int)> rec =
      [&](double lo, double hi, double flo, double fmid, double fhi, double whole, double eps,
          int d) {
        const double mid = 0.5 * (lo + hi);
        const double lm = 0.5 * (lo + mid);
        const double rm = 0.5 * (mid + hi);
        const double flm = f(lm);
        const double frm = f(rm);
        const double left = simpson(lo, mid, flo, flm, fmid);
        const double right = simpson(mid, hi, fmid, frm, fhi);
        if (d <= 0 || std::abs(left + right - whole) <= 15.0 * eps) {
          return left + right + (left + right - whole) / 15.0;
        }
        return rec(lo, mid, flo, flm, fmid, left, eps / 2, d - 1) +
               rec(mid, hi, fmid, frm, fhi, right, eps / 2, d - 1);
      };
  const double fa = f(a);
  const double fb = f(b);
  const double fm = f(0.5 * (a + b));
  return rec(a, b, fa, fm, fb, simpson(a, b, fa, fm, fb), tol, depth);
}

// K_0(x) = int_0^inf exp(-x cosh t) dt
inline double bessel_k0_integral(double x) {
  const double upper = std::acosh(800.0 / x + 1.0);
  return adaptive_simpson([x](double t) { return std::exp(-x * std::cosh(t)); }, 0.0, upper, 1e-15);
}

// Finite-volume solve of (r g')' - (m^2/r + k^2 r) g = -delta(r - rp) on
// [0, R] with g' + beta g = 0 at R, m = 0.  Returns g(rp) with rp on a node.
inline double greens_m0_fd(double k, double radius, double beta, double rp, int intervals) {
  const int n = intervals;
  const double h = radius / n;
  std::vector<double> lower(n + 1, 0.0), diag(n + 1, 0.0), upper(n + 1, 0.0), rhs(n + 1, 0.0);
  for (int i = 0; i <= n; ++i) {
    const double r = i * h;
    const double rl = r - 0.5 * h;
    const double rr = r + 0.5 * h;
    if (i == 0) {
      diag[i] = -rr / h - k * k * (h * h / 8.0);
      upper[i] = rr / h;
    } else if (i == n) {
      lower[i] = rl / h;
      diag[i] = -rl / h - radius * beta - k * k * (radius * h / 2.0 - h * h / 8.0);
    } else {
      lower[i] = rl / h;
      upper[i] = rr / h;
      diag[i] = -(rl + rr) / h - k * k * r * h;
    }
  }
  const int src = static_cast<int>(std::lround(rp / h));
  rhs[src] = -1.0;
  // Thomas algorithm
  for (int i = 1; i <= n; ++i) {
    const double w = lower[i] / diag[i - 1];
    diag[i] -= w * upper[i - 1];
    rhs[i] -= w * rhs[i - 1];
  }
  std::vector<double> g(n + 1);
  g[n] = rhs[n] / diag[n];
  for (int i = n - 1; i >= 0; --i) g[i] = (rhs[i] - upper[i] * g[i + 1]) / diag[i];
  return g[src];
}

// (K_j xi_1 x ... x xi_j)(m) as an explicit j-fold sum over grid nodes, with
// g_m and its boundary trace evaluated pointwise.
inline BoundaryData radial_kj_bruteforce(const bornfast::radial::ModelParams& p,
                                         const std::vector<MaterialField>& fields) {
  using namespace bornfast::radial;
  const RadialGrid grid = RadialGrid::midpoint(p.radius_r, p.grid_n);
  const auto n = static_cast<std::size_t>(grid.n);
  const std::size_t j = fields.size();
  const double k2 = p.k * p.k;
  BoundaryData out(static_cast<std::size_t>(p.modes));
  for (int m = 1; m <= p.modes; ++m) {
    std::vector<double> tr(n), w(n);
    for (std::size_t i = 0; i < n; ++i) {
      tr[i] = greens_boundary_trace(m, grid.nodes[i], p);
      w[i] = grid.nodes[i] * grid.dr;
    }
    std::vector<std::vector<double>> g(n, std::vector<double>(n));
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = 0; b < n; ++b) g[a][b] = greens_radial(m, grid.nodes[a], grid.nodes[b], p);
    std::vector<std::size_t> idx(j, 0);
    long double sum = 0.0L;
    for (;;) {
      long double t = tr[idx[0]] * tr[idx[j - 1]];
      for (std::size_t s = 0; s < j; ++s) t *= fields[s].values[idx[s]] * w[idx[s]];
      for (std::size_t s = 0; s + 1 < j; ++s) t *= g[idx[s]][idx[s + 1]];
      sum += t;
      std::size_t s = j;
      while (s > 0 && ++idx[s - 1] == n) idx[--s] = 0;
      if (s == 0) break;
    }
    const double sign = (j % 2 == 1) ? 1.0 : -1.0;
    out.values[static_cast<std::size_t>(m - 1)] =
        sign * std::pow(k2, static_cast<double>(j)) * p.radius_r * static_cast<double>(sum);
  }
  return out;
}

inline std::vector<double> matvec(const DenseMatrix& a, const std::vector<double>& x) {
  std::vector<double> y(a.rows(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t c = 0; c < a.cols(); ++c) y[i] += a(i, c) * x[c];
  return y;
}

// Multilinear inverse operator R_j(phi_1..phi_j).  Compositions of j are
// enumerated as bitmasks over the j-1 gaps: bit g set means a cut after
// argument g.
inline MaterialField ibs_bitmask(const bornfast::ForwardModel& model, const DenseMatrix& pinv,
                                 const std::vector<BoundaryData>& data) {
  const std::size_t j = data.size();
  if (j == 1) return MaterialField(matvec(pinv, data[0].values));
  std::vector<MaterialField> psi;
  for (const auto& d : data) psi.emplace_back(matvec(pinv, d.values));
  std::vector<double> total(model.field_size(), 0.0);
  const std::uint32_t gaps = static_cast<std::uint32_t>(j - 1);
  // mask 0 is the single block; all-ones (j blocks) is not a term
  for (std::uint32_t mask = 0; mask + 1 < (1u << gaps); ++mask) {
    std::vector<BoundaryData> inner;
    std::size_t begin = 0;
    for (std::size_t pos = 0; pos < j; ++pos) {
      const bool cut = pos + 1 == j || ((mask >> pos) & 1u);
      if (!cut) continue;
      std::vector<MaterialField> block(psi.begin() + static_cast<std::ptrdiff_t>(begin),
                                       psi.begin() + static_cast<std::ptrdiff_t>(pos + 1));
      inner.push_back(model.apply_kj(block));
      begin = pos + 1;
    }
    const MaterialField sub = ibs_bitmask(model, pinv, inner);
    for (std::size_t i = 0; i < total.size(); ++i) total[i] -= sub.values[i];
  }
  return MaterialField(std::move(total));
}

// Reduced operator by its defining recursion,
// R~_n(phi_1..phi_n) = -R~_{n-1}(K_2(psi_1, psi_2), K_1 psi_3, ..., K_1 psi_n).
inline MaterialField reduced_recursive(const bornfast::ForwardModel& model, const DenseMatrix& pinv,
                                       const std::vector<BoundaryData>& data) {
  const std::size_t n = data.size();
  if (n == 1) return MaterialField(matvec(pinv, data[0].values));
  std::vector<MaterialField> psi;
  for (const auto& d : data) psi.emplace_back(matvec(pinv, d.values));
  std::vector<BoundaryData> next;
  next.push_back(model.apply_kj(std::vector<MaterialField>{psi[0], psi[1]}));
  for (std::size_t l = 2; l < n; ++l) next.push_back(BoundaryData(matvec(model.k1_matrix(), psi[l].values)));
  MaterialField out = reduced_recursive(model, pinv, next);
  for (double& v : out.values) v = -v;
  return out;
}

inline DenseMatrix random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng,
                                 double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  DenseMatrix a(rows, cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t c = 0; c < cols; ++c) a(i, c) = dist(rng);
  return a;
}

inline DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
  DenseMatrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k)
      for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += a(i, k) * b(k, j);
  return c;
}

inline double max_abs_entry_diff(const DenseMatrix& a, const DenseMatrix& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) d = std::max(d, std::abs(a(i, j) - b(i, j)));
  return d;
}

// Largest violation of the four Moore-Penrose conditions.
inline double moore_penrose_defect(const DenseMatrix& a, const DenseMatrix& x) {
  const DenseMatrix ax = matmul(a, x);
  const DenseMatrix xa = matmul(x, a);
  double d = max_abs_entry_diff(matmul(ax, a), a);
  d = std::max(d, max_abs_entry_diff(matmul(xa, x), x));
  for (std::size_t i = 0; i < ax.rows(); ++i)
    for (std::size_t j = 0; j < ax.cols(); ++j) d = std::max(d, std::abs(ax(i, j) - ax(j, i)));
  for (std::size_t i = 0; i < xa.rows(); ++i)
    for (std::size_t j = 0; j < xa.cols(); ++j) d = std::max(d, std::abs(xa(i, j) - xa(j, i)));
  return d;
}

}  // namespace oracle

#endif  // BORNFAST_TESTS_ORACLES_HPP
