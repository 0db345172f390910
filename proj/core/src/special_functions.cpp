#include "bornfast/special_functions.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <numbers>
#include <string>

namespace bornfast::special {

namespace {

constexpr double kEps = 1e-17;
constexpr int kMaxSeriesTerms = 500;

void check_arguments(int order, double x, const BesselOptions& opts) {
  if (!(x > 0.0) || !std::isfinite(x)) {
    throw BesselError("modified Bessel function requires a finite argument > 0, got " +
                      std::to_string(x));
  }
  if (order < 0) {
    throw BesselError("modified Bessel function order must be >= 0, got " +
                      std::to_string(order));
  }
  if (order > opts.max_order) {
    throw BesselError("Bessel order " + std::to_string(order) + " exceeds max_order " +
                      std::to_string(opts.max_order));
  }
}

void check_sequence_arguments(int max_order, double x) {
  BesselOptions opts;
  opts.max_order = std::max(max_order, 0);
  check_arguments(max_order, x, opts);
}

// Ratios I_k(x) / I_{k-1}(x) for k = 1..max_order (index 0 unused) together
// with ln I_0(x).  The ratios obey r_k = 1 / (2k/x + r_{k+1}), which is the
// minimal-solution direction and therefore stable when run downward from a
// starting index well past both max_order and x.
struct IRatios {
  std::vector<double> ratio;
  double log_i0 = 0.0;
};

IRatios i_ratios(int max_order, double x) {
  const int span = std::max(max_order, static_cast<int>(std::ceil(x)));
  const int start = span + 80 + 2 * static_cast<int>(std::ceil(x));

  std::vector<double> r(static_cast<std::size_t>(start) + 2, 0.0);
  double next = 0.0;
  for (int k = start; k >= 1; --k) {
    next = 1.0 / (2.0 * k / x + next);
    r[static_cast<std::size_t>(k)] = next;
  }

  // e^x = I_0 (1 + 2 sum_k P_k) with P_k = I_k / I_0.
  double partial = 1.0;
  double tail = 0.0;
  for (int k = 1; k <= start; ++k) {
    partial *= r[static_cast<std::size_t>(k)];
    tail += partial;
    if (partial < kEps * tail) break;
  }

  IRatios out;
  out.log_i0 = x - std::log1p(2.0 * tail);
  r.resize(static_cast<std::size_t>(max_order) + 1);
  out.ratio = std::move(r);
  return out;
}

// K_0 and K_1 for 0 < x <= 2 from their ascending series.
void k01_series(double x, double& k0, double& k1) {
  const double q = 0.25 * x * x;
  const double log_half = std::log(0.5 * x);
  double t0 = 1.0;      // q^k / (k!)^2
  double t1 = 0.5 * x;  // (x/2) q^k / (k! (k+1)!)
  double psi1 = -std::numbers::egamma_v<double>;        // psi(k+1)
  double psi2 = 1.0 - std::numbers::egamma_v<double>;   // psi(k+2)
  double i0 = 0.0, i1 = 0.0, s0 = 0.0, s1 = 0.0;
  for (int k = 0; k < kMaxSeriesTerms; ++k) {
    i0 += t0;
    i1 += t1;
    s0 += psi1 * t0;
    s1 += (psi1 + psi2) * t1;
    if (t0 < kEps * i0) break;
    const double kp1 = k + 1.0;
    t0 *= q / (kp1 * kp1);
    t1 *= q / (kp1 * (kp1 + 1.0));
    psi1 += 1.0 / kp1;
    psi2 += 1.0 / (kp1 + 1.0);
  }
  k0 = -log_half * i0 + s0;
  k1 = 1.0 / x + log_half * i1 - 0.5 * s1;
}

// Steed's continued fraction for x > 2.  Returns ln K_0(x) and K_1 / K_0.
void k01_continued_fraction(double x, double& log_k0, double& ratio) {
  double b = 2.0 * (1.0 + x);
  double d = 1.0 / b;
  double delh = d;
  double h = d;
  double q1 = 0.0;
  double q2 = 1.0;
  const double a1 = 0.25;
  double q = a1;
  double c = a1;
  double a = -a1;
  double s = 1.0 + q * delh;
  for (int i = 2; i <= 100000; ++i) {
    a -= 2.0 * (i - 1);
    c = -a * c / i;
    const double qnew = (q1 - b * q2) / a;
    q1 = q2;
    q2 = qnew;
    q += c * qnew;
    b += 2.0;
    d = 1.0 / (b + a * d);
    delh = (b * d - 1.0) * delh;
    h += delh;
    const double dels = q * delh;
    s += dels;
    if (std::abs(dels / s) < 1e-17) break;
  }
  h = a1 * h;
  log_k0 = 0.5 * std::log(std::numbers::pi / (2.0 * x)) - x - std::log(s);
  ratio = (x + 0.5 - h) / x;
}

// ln K_0(x) and K_1(x) / K_0(x).
void k01_log(double x, double& log_k0, double& ratio) {
  if (x <= 2.0) {
    double k0 = 0.0, k1 = 0.0;
    k01_series(x, k0, k1);
    log_k0 = std::log(k0);
    ratio = k1 / k0;
  } else {
    k01_continued_fraction(x, log_k0, ratio);
  }
}

// Ratios K_{k+1} / K_k for k = 0..max_order-1, from s_k = 1/s_{k-1} + 2k/x.
std::vector<double> k_ratios(int max_order, double x, double& log_k0) {
  double s0 = 0.0;
  k01_log(x, log_k0, s0);
  std::vector<double> s(static_cast<std::size_t>(std::max(max_order, 1)), 0.0);
  s[0] = s0;
  for (int k = 1; k < max_order; ++k) {
    s[static_cast<std::size_t>(k)] = 1.0 / s[static_cast<std::size_t>(k - 1)] + 2.0 * k / x;
  }
  return s;
}

const double kLogDblMin = std::log(DBL_MIN);
const double kLogDblMax = std::log(DBL_MAX);

}  // namespace

std::vector<double> log_bessel_i_sequence(int max_order, double x) {
  check_sequence_arguments(max_order, x);
  const IRatios ir = i_ratios(max_order, x);
  std::vector<double> out(static_cast<std::size_t>(max_order) + 1);
  out[0] = ir.log_i0;
  for (int k = 1; k <= max_order; ++k) {
    out[static_cast<std::size_t>(k)] =
        out[static_cast<std::size_t>(k - 1)] + std::log(ir.ratio[static_cast<std::size_t>(k)]);
  }
  return out;
}

std::vector<double> log_bessel_k_sequence(int max_order, double x) {
  check_sequence_arguments(max_order, x);
  double log_k0 = 0.0;
  const std::vector<double> s = k_ratios(max_order, x, log_k0);
  std::vector<double> out(static_cast<std::size_t>(max_order) + 1);
  out[0] = log_k0;
  for (int k = 1; k <= max_order; ++k) {
    out[static_cast<std::size_t>(k)] =
        out[static_cast<std::size_t>(k - 1)] + std::log(s[static_cast<std::size_t>(k - 1)]);
  }
  return out;
}

std::vector<double> bessel_i_sequence(int max_order, double x) {
  check_sequence_arguments(max_order, x);
  const IRatios ir = i_ratios(max_order, x);
  std::vector<double> out(static_cast<std::size_t>(max_order) + 1);
  double log_value = ir.log_i0;
  double value = std::exp(ir.log_i0);
  out[0] = value;
  for (int k = 1; k <= max_order; ++k) {
    const double r = ir.ratio[static_cast<std::size_t>(k)];
    log_value += std::log(r);
    // Once the running product nears the subnormal range, fall back to the
    // log form so precision degrades gracefully instead of flushing early.
    value = (log_value > kLogDblMin + 40.0) ? value * r : std::exp(log_value);
    out[static_cast<std::size_t>(k)] = value;
  }
  return out;
}

std::vector<double> bessel_k_sequence(int max_order, double x) {
  check_sequence_arguments(max_order, x);
  double log_k0 = 0.0;
  double s0 = 0.0;
  k01_log(x, log_k0, s0);
  std::vector<double> out(static_cast<std::size_t>(max_order) + 1);
  double k0 = 0.0, k1 = 0.0;
  if (x <= 2.0) {
    k01_series(x, k0, k1);
  } else {
    k0 = std::exp(log_k0);
    k1 = k0 * s0;
  }
  out[0] = k0;
  if (max_order >= 1) out[1] = k1;
  for (int k = 1; k < max_order; ++k) {
    out[static_cast<std::size_t>(k + 1)] =
        out[static_cast<std::size_t>(k - 1)] + (2.0 * k / x) * out[static_cast<std::size_t>(k)];
  }
  return out;
}

double log_bessel_i(int order, double x) {
  return log_bessel_i_sequence(order, x).back();
}

double log_bessel_k(int order, double x) {
  return log_bessel_k_sequence(order, x).back();
}

BesselEval bessel_i(int order, double x, const BesselOptions& opts) {
  check_arguments(order, x, opts);
  BesselEval out;
  out.value = bessel_i_sequence(order, x).back();
  if (out.value < DBL_MIN) {
    out.underflow = true;
    if (opts.strict) {
      throw BesselRangeError("I_" + std::to_string(order) + "(" + std::to_string(x) +
                                 ") underflows double precision",
                             order);
    }
  }
  return out;
}

BesselEval bessel_k(int order, double x, const BesselOptions& opts) {
  check_arguments(order, x, opts);
  BesselEval out;
  const double log_value = log_bessel_k(order, x);
  if (log_value > kLogDblMax) {
    out.overflow = true;
    out.value = HUGE_VAL;
  } else if (log_value < kLogDblMin) {
    out.underflow = true;
    out.value = std::exp(log_value);
  } else {
    out.value = bessel_k_sequence(order, x).back();
  }
  if (opts.strict && (out.overflow || out.underflow)) {
    throw BesselRangeError("K_" + std::to_string(order) + "(" + std::to_string(x) +
                               ") leaves double range",
                           order);
  }
  return out;
}

BesselPair bessel_pair(int order, double x, const BesselOptions& opts) {
  check_arguments(order, x, opts);
  const std::vector<double> iv = bessel_i_sequence(order + 1, x);
  const std::vector<double> kv = bessel_k_sequence(order + 1, x);
  const auto m = static_cast<std::size_t>(order);
  BesselPair p;
  p.order = order;
  p.argument = x;
  p.i_value = iv[m];
  p.k_value = kv[m];
  // I_{-1} = I_1 and K_{-1} = K_1, so m = 0 reduces to I_0' = I_1, K_0' = -K_1.
  const double i_prev = order == 0 ? iv[1] : iv[m - 1];
  const double k_prev = order == 0 ? kv[1] : kv[m - 1];
  p.i_deriv = 0.5 * (i_prev + iv[m + 1]);
  p.k_deriv = -0.5 * (k_prev + kv[m + 1]);
  p.underflow = p.i_value < DBL_MIN;
  p.overflow = !std::isfinite(p.k_value) || !std::isfinite(p.k_deriv);
  if (opts.strict && (p.underflow || p.overflow)) {
    throw BesselRangeError("Bessel pair of order " + std::to_string(order) +
                               " leaves double range",
                           order);
  }
  return p;
}

ScaledBesselTable scaled_bessel_table(int max_order, double x) {
  check_sequence_arguments(max_order, x);
  const IRatios ir = i_ratios(max_order + 1, x);
  double log_k0 = 0.0;
  const std::vector<double> s = k_ratios(max_order + 1, x, log_k0);

  ScaledBesselTable t;
  t.argument = x;
  const auto n = static_cast<std::size_t>(max_order) + 1;
  t.log_i.resize(n);
  t.log_k.resize(n);
  t.i_log_deriv.resize(n);
  t.k_log_deriv.resize(n);
  t.log_i[0] = ir.log_i0;
  t.log_k[0] = log_k0;
  for (std::size_t k = 1; k < n; ++k) {
    t.log_i[k] = t.log_i[k - 1] + std::log(ir.ratio[k]);
    t.log_k[k] = t.log_k[k - 1] + std::log(s[k - 1]);
  }
  t.i_log_deriv[0] = ir.ratio[1];
  t.k_log_deriv[0] = -s[0];
  for (std::size_t k = 1; k < n; ++k) {
    t.i_log_deriv[k] = 0.5 * (1.0 / ir.ratio[k] + ir.ratio[k + 1]);
    t.k_log_deriv[k] = -0.5 * (1.0 / s[k - 1] + s[k]);
  }
  return t;
}

}  // namespace bornfast::special
