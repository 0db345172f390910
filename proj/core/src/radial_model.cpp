#include "bornfast/radial_model.hpp"

#include <cmath>
#include <string>

#include "bornfast/parallel.hpp"
#include "bornfast/special_functions.hpp"

namespace bornfast::radial {

namespace sf = bornfast::special;

void ModelParams::validate() const {
  auto fail = [](const std::string& what) { throw ModelError("invalid model parameters: " + what); };
  if (!(k > 0.0) || !std::isfinite(k)) fail("k must be > 0");
  if (!(radius_r > 0.0) || !std::isfinite(radius_r)) fail("radius_r must be > 0");
  if (!(radius_a > 0.0) || !(radius_a < radius_r)) fail("radius_a must lie in (0, radius_r)");
  if (!(eta_a > -1.0) || !std::isfinite(eta_a)) fail("eta_a must be > -1");
  if (!(beta > 0.0) || !std::isfinite(beta)) fail("beta must be > 0");
  if (modes < 1) fail("modes must be >= 1");
  if (grid_n < 2) fail("grid_n must be >= 2");
}

RadialGrid RadialGrid::midpoint(double radius, int n) {
  if (n < 1 || !(radius > 0.0)) throw ModelError("RadialGrid: need radius > 0 and n >= 1");
  RadialGrid g;
  g.n = n;
  g.dr = radius / n;
  g.nodes.resize(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) g.nodes[static_cast<std::size_t>(j)] = (j + 0.5) * g.dr;
  return g;
}

std::vector<double> RadialGrid::weights() const {
  std::vector<double> w(nodes.size());
  for (std::size_t j = 0; j < nodes.size(); ++j) w[j] = nodes[j] * dr;
  return w;
}

MaterialField ground_truth(const ModelParams& params, const RadialGrid& grid) {
  MaterialField eta(grid.nodes.size());
  for (std::size_t j = 0; j < grid.nodes.size(); ++j)
    if (grid.nodes[j] <= params.radius_a) eta.values[j] = params.eta_a;
  return eta;
}

namespace {

// Signed number stored as sign * exp(log_abs).
struct LogValue {
  double log_abs = 0.0;
  double sign = 1.0;
};

// Boundary constants of mode m: ln I_m(kR), ln K_m(kR), their log-derivatives
// and the reflection coefficient
//   kappa_m = (beta K_m(kR) + k K'_m(kR)) / (beta I_m(kR) + k I'_m(kR)).
struct BoundaryConstants {
  double log_i = 0.0;
  double log_k = 0.0;
  double i_ld = 0.0;
  double k_ld = 0.0;
  LogValue kappa;
  // ln of 1 / (R (beta I_m(kR) + k I'_m(kR))), the prefactor of g~_m.
  double log_trace_scale = 0.0;
};

BoundaryConstants boundary_constants(const sf::ScaledBesselTable& t, int m, const ModelParams& p) {
  const auto i = static_cast<std::size_t>(m);
  BoundaryConstants bc;
  bc.log_i = t.log_i[i];
  bc.log_k = t.log_k[i];
  bc.i_ld = t.i_log_deriv[i];
  bc.k_ld = t.k_log_deriv[i];
  const double num = p.beta + p.k * bc.k_ld;  // (beta K + k K') / K
  const double den = p.beta + p.k * bc.i_ld;  // (beta I + k I') / I, > 0
  bc.kappa.sign = num < 0.0 ? -1.0 : 1.0;
  bc.kappa.log_abs = bc.log_k - bc.log_i + std::log(std::abs(num)) - std::log(den);
  bc.log_trace_scale = -std::log(p.radius_r) - bc.log_i - std::log(den);
  return bc;
}

// g_m(r, r') from scaled Bessel data at k*min(r, r') and k*max(r, r').
double greens_from_logs(double log_i_min, double log_k_max, double log_i_r, double log_i_rp,
                        const LogValue& kappa) {
  const double direct = std::exp(log_k_max + log_i_min);
  const double reflected = kappa.sign * std::exp(kappa.log_abs + log_i_r + log_i_rp);
  return direct - reflected;
}

void require_radius(double r, const ModelParams& p, const char* what) {
  if (!(r > 0.0) || r > p.radius_r * (1.0 + 1e-14)) {
    throw ModelError(std::string(what) + " must lie in (0, R], got " + std::to_string(r));
  }
}

struct ModeValues {
  double i = 0.0, k = 0.0, di = 0.0, dk = 0.0;
};

ModeValues values_at(const sf::ScaledBesselTable& t, int m) {
  const auto i = static_cast<std::size_t>(m);
  ModeValues v;
  v.i = std::exp(t.log_i[i]);
  v.k = std::exp(t.log_k[i]);
  v.di = v.i * t.i_log_deriv[i];
  v.dk = v.k * t.k_log_deriv[i];
  if (!std::isfinite(v.k) || !std::isfinite(v.dk) || v.i == 0.0) {
    throw ModelError("Bessel values of mode " + std::to_string(m) + " at argument " +
                     std::to_string(t.argument) + " leave double range");
  }
  return v;
}

}  // namespace

double greens_radial(int m, double r, double rp, const ModelParams& p) {
  require_radius(r, p, "r");
  require_radius(rp, p, "r'");
  if (m < 0) m = -m;
  const double rmin = std::min(r, rp);
  const double rmax = std::max(r, rp);
  const auto tR = sf::scaled_bessel_table(m, p.k * p.radius_r);
  const auto bc = boundary_constants(tR, m, p);
  const double log_i_min = sf::log_bessel_i(m, p.k * rmin);
  const double log_i_max = sf::log_bessel_i(m, p.k * rmax);
  const double log_k_max = sf::log_bessel_k(m, p.k * rmax);
  return greens_from_logs(log_i_min, log_k_max, log_i_min, log_i_max, bc.kappa);
}

double greens_boundary_trace(int m, double r, const ModelParams& p) {
  require_radius(r, p, "r");
  if (m < 0) m = -m;
  const auto tR = sf::scaled_bessel_table(m, p.k * p.radius_r);
  const auto bc = boundary_constants(tR, m, p);
  return std::exp(bc.log_trace_scale + sf::log_bessel_i(m, p.k * r));
}

double greens_robin_relative_residual(int m, double rp, const ModelParams& p) {
  require_radius(rp, p, "r'");
  if (m < 0) m = -m;
  const auto pair = sf::bessel_pair(m, p.k * p.radius_r);
  const double kappa = (p.beta * pair.k_value + p.k * pair.k_deriv) /
                       (p.beta * pair.i_value + p.k * pair.i_deriv);
  const double g = greens_radial(m, p.radius_r, rp, p);
  // dg / g = k I_m(k r') (K' - kappa I') / g; I_m(k r') / g is formed in log
  // space because I_m(k r') alone can underflow where g does not.
  const double i_over_g = std::exp(sf::log_bessel_i(m, p.k * rp) - std::log(std::abs(g)));
  const double dg_over_g =
      (g < 0.0 ? -1.0 : 1.0) * p.k * i_over_g * (pair.k_deriv - kappa * pair.i_deriv);
  return std::abs(dg_over_g + p.beta);
}

namespace {

struct TransmissionSystem {
  linalg::DenseMatrix a{3, 3};
  std::vector<double> rhs = std::vector<double>(3);
  ModeValues inner, at_a, at_r;
  double s = 1.0;
};

TransmissionSystem transmission_system(int m, const ModelParams& p) {
  TransmissionSystem sys;
  sys.s = std::sqrt(1.0 + p.eta_a);
  const double k = p.k;
  sys.inner = values_at(sf::scaled_bessel_table(m, sys.s * k * p.radius_a), m);
  sys.at_a = values_at(sf::scaled_bessel_table(m, k * p.radius_a), m);
  sys.at_r = values_at(sf::scaled_bessel_table(m, k * p.radius_r), m);
  const auto& in = sys.inner;
  const auto& va = sys.at_a;
  const auto& vr = sys.at_r;
  auto& a = sys.a;
  a(0, 0) = in.i;
  a(0, 1) = -va.k;
  a(0, 2) = -va.i;
  a(1, 0) = sys.s * k * in.di;
  a(1, 1) = -k * va.dk;
  a(1, 2) = -k * va.di;
  a(2, 0) = 0.0;
  a(2, 1) = p.beta * vr.k + k * vr.dk;
  a(2, 2) = p.beta * vr.i + k * vr.di;
  sys.rhs[0] = va.i * vr.k;
  sys.rhs[1] = k * va.di * vr.k;
  // Robin condition with the rim source taken as the limit r' -> R^-.
  sys.rhs[2] = -(k * vr.i * vr.dk + p.beta * vr.i * vr.k);
  return sys;
}

}  // namespace

TransmissionCoefficients transmission_coefficients(int m, const ModelParams& p) {
  p.validate();
  if (m < 0) m = -m;
  const TransmissionSystem sys = transmission_system(m, p);

  // Row and column equilibration: the entries span hundreds of decades at
  // high modes.
  std::vector<double> col_scale(3, 0.0), row_scale(3, 0.0);
  for (std::size_t j = 0; j < 3; ++j)
    for (std::size_t i = 0; i < 3; ++i) col_scale[j] = std::max(col_scale[j], std::abs(sys.a(i, j)));
  linalg::DenseMatrix scaled(3, 3);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) scaled(i, j) = sys.a(i, j) / col_scale[j];
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) row_scale[i] = std::max(row_scale[i], std::abs(scaled(i, j)));
  std::vector<double> rhs(3);
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 3; ++j) scaled(i, j) /= row_scale[i];
    rhs[i] = sys.rhs[i] / row_scale[i];
  }

  std::vector<double> y;
  try {
    y = linalg::solve(scaled, rhs);
  } catch (const linalg::SingularMatrixError& e) {
    throw ModelError("transmission system of mode " + std::to_string(m) +
                     " is singular (scaled pivot " + std::to_string(e.pivot()) + ")");
  }
  TransmissionCoefficients out;
  out.a = y[0] / col_scale[0];
  out.b = y[1] / col_scale[1];
  out.c = y[2] / col_scale[2];

  const double x[3] = {out.a, out.b, out.c};
  for (std::size_t i = 0; i < 3; ++i) {
    double r = -sys.rhs[i];
    double mag = std::abs(sys.rhs[i]);
    for (std::size_t j = 0; j < 3; ++j) {
      r += sys.a(i, j) * x[j];
      mag += std::abs(sys.a(i, j) * x[j]);
    }
    if (mag > 0.0) out.relative_residual = std::max(out.relative_residual, std::abs(r) / mag);
  }
  return out;
}

InterfaceMismatch interface_mismatch(int m, const ModelParams& p,
                                     const TransmissionCoefficients& c) {
  if (m < 0) m = -m;
  const TransmissionSystem sys = transmission_system(m, p);
  const double v = c.a * sys.inner.i;
  const double w = sys.at_a.i * sys.at_r.k + c.b * sys.at_a.k + c.c * sys.at_a.i;
  const double dv = c.a * sys.s * p.k * sys.inner.di;
  const double dw = p.k * (sys.at_a.di * sys.at_r.k + c.b * sys.at_a.dk + c.c * sys.at_a.di);
  InterfaceMismatch out;
  out.value = std::abs(v - w) / std::abs(v);
  out.flux = std::abs(dv - dw) / std::abs(dv);
  return out;
}

double forward_exact_direct(int m, const ModelParams& p) {
  const TransmissionCoefficients c = transmission_coefficients(m, p);
  const TransmissionSystem sys = transmission_system(m, p);
  const auto& vr = sys.at_r;
  const double g_rr = greens_radial(m, p.radius_r, p.radius_r, p);
  return p.radius_r * (g_rr - (vr.i * vr.k + c.b * vr.k + c.c * vr.i));
}

BoundaryData forward_exact(const ModelParams& p) {
  p.validate();
  const int top = p.modes;
  const double k = p.k;
  const double s = std::sqrt(1.0 + p.eta_a);
  const auto t_inner = sf::scaled_bessel_table(top, s * k * p.radius_a);
  const auto t_a = sf::scaled_bessel_table(top, k * p.radius_a);
  const auto t_r = sf::scaled_bessel_table(top, k * p.radius_r);

  BoundaryData phi(static_cast<std::size_t>(top));
  for (int m = 1; m <= top; ++m) {
    const auto i = static_cast<std::size_t>(m);
    // Exterior field w = g_m(., R) + b Psi with Psi = K_m(kr) - kappa I_m(kr)
    // satisfying the homogeneous Robin condition; the interior is a I_m(s k r).
    // Eliminating a from the interface conditions gives b, and
    // R (u_0 - u)(R) = -R b Psi(R).
    const double rho = s * k * t_inner.i_log_deriv[i];
    const double i_ld_a = t_a.i_log_deriv[i];
    const double k_ld_a = t_a.k_log_deriv[i];
    const double den_r = p.beta + k * t_r.i_log_deriv[i];
    const double num_r = p.beta + k * t_r.k_log_deriv[i];
    // t = kappa I_m(ka) / K_m(ka)
    const double t = (num_r / den_r) *
                     std::exp(t_r.log_k[i] - t_r.log_i[i] + t_a.log_i[i] - t_a.log_k[i]);
    const double d = rho * (1.0 - t) - k * k_ld_a + t * k * i_ld_a;
    if (d == 0.0 || !std::isfinite(d)) {
      throw ModelError("transmission problem of mode " + std::to_string(m) + " is degenerate");
    }
    const double scale = std::exp(t_a.log_i[i] - t_a.log_k[i] - 2.0 * t_r.log_i[i]);
    phi.values[i - 1] = -(k * i_ld_a - rho) * scale / (p.radius_r * den_r * den_r * d);
  }
  return phi;
}

RadialForwardModel::RadialForwardModel(const ModelParams& params) : params_(params) {
  params_.validate();
  grid_ = RadialGrid::midpoint(params_.radius_r, params_.grid_n);
  weights_ = grid_.weights();
  const auto n = static_cast<std::size_t>(grid_.n);
  const auto modes = static_cast<std::size_t>(params_.modes);
  const double k = params_.k;

  std::vector<sf::ScaledBesselTable> node_tables(n);
  parallel_for(n, params_.threads, [&](std::size_t j) {
    node_tables[j] = sf::scaled_bessel_table(params_.modes, k * grid_.nodes[j]);
  });
  const auto t_r = sf::scaled_bessel_table(params_.modes, k * params_.radius_r);

  greens_.assign(modes, linalg::DenseMatrix(n, n));
  greens_boundary_ = linalg::DenseMatrix(modes, n);
  k1_ = linalg::DenseMatrix(modes, n);
  parallel_for(modes, params_.threads, [&](std::size_t idx) {
    const int m = static_cast<int>(idx) + 1;
    const auto mi = static_cast<std::size_t>(m);
    const auto bc = boundary_constants(t_r, m, params_);
    auto& g = greens_[idx];
    for (std::size_t i = 0; i < n; ++i) {
      const double log_i_i = node_tables[i].log_i[mi];
      for (std::size_t j = i; j < n; ++j) {
        const double log_i_j = node_tables[j].log_i[mi];
        const double value =
            greens_from_logs(log_i_i, node_tables[j].log_k[mi], log_i_i, log_i_j, bc.kappa);
        g(i, j) = value;
        g(j, i) = value;
      }
      const double trace = std::exp(bc.log_trace_scale + log_i_i);
      greens_boundary_(idx, i) = trace;
      k1_(idx, i) = k * k * params_.radius_r * trace * trace * weights_[i];
    }
  });
}

const linalg::DenseMatrix& RadialForwardModel::greens_interior(int m) const {
  if (m < 1 || m > params_.modes) {
    throw ModelError("mode " + std::to_string(m) + " outside 1.." + std::to_string(params_.modes));
  }
  return greens_[static_cast<std::size_t>(m - 1)];
}

std::span<const double> RadialForwardModel::u0_trace(int m) const {
  if (m < 1 || m > params_.modes) {
    throw ModelError("mode " + std::to_string(m) + " outside 1.." + std::to_string(params_.modes));
  }
  return greens_boundary_.row(static_cast<std::size_t>(m - 1));
}

BoundaryData RadialForwardModel::do_apply_kj(std::span<const MaterialField> fields) const {
  const std::size_t j = fields.size();
  const auto n = field_size();
  const double k2 = params_.k * params_.k;
  const double sign = (j % 2 == 1) ? 1.0 : -1.0;
  const double prefactor = sign * std::pow(k2, static_cast<double>(j)) * params_.radius_r;
  BoundaryData out(data_size());
  parallel_for(data_size(), params_.threads, [&](std::size_t idx) {
    const auto trace = greens_boundary_.row(idx);
    const auto& g = greens_[idx];
    std::vector<double> v(n);
    const auto& last = fields[j - 1].values;
    for (std::size_t l = 0; l < n; ++l) v[l] = trace[l] * last[l] * weights_[l];
    for (std::size_t slot = j - 1; slot-- > 0;) {
      std::vector<double> gv = linalg::multiply(g, v);
      const auto& xi = fields[slot].values;
      for (std::size_t l = 0; l < n; ++l) v[l] = gv[l] * xi[l] * weights_[l];
    }
    double acc = 0.0;
    for (std::size_t l = 0; l < n; ++l) acc += trace[l] * v[l];
    out.values[idx] = prefactor * acc;
  });
  return out;
}

linalg::DenseMatrix RadialForwardModel::do_k2_first_slot_matrix(const MaterialField& second) const {
  const auto n = field_size();
  const double k2 = params_.k * params_.k;
  const double prefactor = -k2 * k2 * params_.radius_r;
  linalg::DenseMatrix out(data_size(), n);
  parallel_for(data_size(), params_.threads, [&](std::size_t idx) {
    const auto trace = greens_boundary_.row(idx);
    std::vector<double> v(n);
    for (std::size_t l = 0; l < n; ++l) v[l] = second.values[l] * trace[l] * weights_[l];
    const std::vector<double> inner = linalg::multiply(greens_[idx], v);
    auto row = out.row(idx);
    for (std::size_t l = 0; l < n; ++l) row[l] = prefactor * trace[l] * weights_[l] * inner[l];
  });
  return out;
}

BoundaryData RadialForwardModel::forward_map(const MaterialField& eta) const {
  check_field(eta);
  const auto n = field_size();
  const double k2 = params_.k * params_.k;
  BoundaryData out(data_size());
  parallel_for(data_size(), params_.threads, [&](std::size_t idx) {
    const auto& g = greens_[idx];
    const auto trace = greens_boundary_.row(idx);
    // (I - T_m) with (T_m u)_i = -k^2 sum_j g_ij eta_j u_j w_j
    linalg::DenseMatrix system(n, n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) system(i, j) = k2 * g(i, j) * eta.values[j] * weights_[j];
      system(i, i) += 1.0;
    }
    std::vector<double> u;
    try {
      u = linalg::solve(system, trace);
    } catch (const linalg::SingularMatrixError& e) {
      throw ModelError("forward_map: integral equation of mode " + std::to_string(idx + 1) +
                       " is singular (pivot " + std::to_string(e.pivot()) + ")");
    }
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) acc += trace[j] * eta.values[j] * u[j] * weights_[j];
    out.values[idx] = k2 * params_.radius_r * acc;
  });
  return out;
}

GreenNorms RadialForwardModel::green_norms() const {
  // Sup over the inclusion support omega = {r <= a}; |omega| = pi a^2.
  const double k2 = params_.k * params_.k;
  std::vector<std::size_t> inside;
  for (std::size_t j = 0; j < grid_.nodes.size(); ++j)
    if (grid_.nodes[j] <= params_.radius_a) inside.push_back(j);
  GreenNorms out;
  for (const auto& g : greens_)
    for (std::size_t i : inside)
      for (std::size_t j : inside) out.mu = std::max(out.mu, std::abs(g(i, j)));
  out.mu *= k2;
  double trace_sup = 0.0;
  for (std::size_t i : inside) {
    double s = 0.0;
    for (std::size_t m = 0; m < greens_boundary_.rows(); ++m)
      s += greens_boundary_(m, i) * greens_boundary_(m, i);
    trace_sup = std::max(trace_sup, std::sqrt(s));
  }
  const double area = std::acos(-1.0) * params_.radius_a * params_.radius_a;
  out.nu = k2 * std::sqrt(area) * trace_sup;
  return out;
}

std::unique_ptr<RadialForwardModel> assemble_model(const ModelParams& params) {
  return std::make_unique<RadialForwardModel>(params);
}

}  // namespace bornfast::radial
