#ifndef BORNFAST_SPECIAL_FUNCTIONS_HPP
#define BORNFAST_SPECIAL_FUNCTIONS_HPP

// Modified Bessel functions I_m(x), K_m(x) of integer order and positive real
// argument, plus their derivatives.
//
// K_0 and K_1 come from their power series (x <= 2) or Steed's continued
// fraction (x > 2); higher orders use the forward recurrence, which is stable
// for K.  I_m uses Miller's backward recurrence on the ratios I_k / I_{k-1},
// normalized through e^x = I_0 + 2 sum_k I_k.  Everything is available in
// log-scaled form so that products such as I_m(x) K_m(y) stay computable when
// the individual factors leave double range.

#include <stdexcept>
#include <string>
#include <vector>

namespace bornfast::special {

class BesselError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Raised only in strict mode, when a result leaves the normal double range.
class BesselRangeError : public std::range_error {
 public:
  BesselRangeError(const std::string& what, int order)
      : std::range_error(what), order_(order) {}
  int order() const noexcept { return order_; }

 private:
  int order_;
};

struct BesselOptions {
  int max_order = 200;
  bool strict = false;
};

struct BesselEval {
  double value = 0.0;
  bool underflow = false;  // result below DBL_MIN (subnormal or zero)
  bool overflow = false;   // result above DBL_MAX (returned as +inf)
};

BesselEval bessel_i(int order, double x, const BesselOptions& opts = {});
BesselEval bessel_k(int order, double x, const BesselOptions& opts = {});

/// I, K and their derivatives at one (order, argument).
struct BesselPair {
  int order = 0;
  double argument = 0.0;
  double i_value = 0.0;
  double k_value = 0.0;
  double i_deriv = 0.0;
  double k_deriv = 0.0;
  bool underflow = false;
  bool overflow = false;

  /// i_value * k_deriv - i_deriv * k_value; analytically -1/argument.
  double wronskian() const { return i_value * k_deriv - i_deriv * k_value; }
};

BesselPair bessel_pair(int order, double x, const BesselOptions& opts = {});

/// I_0(x) .. I_{max_order}(x).  Entries that underflow come back as
/// subnormals or zero; use log_bessel_i_sequence when that matters.
std::vector<double> bessel_i_sequence(int max_order, double x);
std::vector<double> bessel_k_sequence(int max_order, double x);

/// ln I_0(x) .. ln I_{max_order}(x); never under/overflows for x in (0, ~700].
std::vector<double> log_bessel_i_sequence(int max_order, double x);
std::vector<double> log_bessel_k_sequence(int max_order, double x);

double log_bessel_i(int order, double x);
double log_bessel_k(int order, double x);

/// Scaled description of I_m(x), K_m(x) for m = 0..max_order.
///
/// i_log_deriv[m] = I'_m(x) / I_m(x) and k_log_deriv[m] = K'_m(x) / K_m(x),
/// from the recurrence identities I'_m = (I_{m-1} + I_{m+1}) / 2 and
/// K'_m = -(K_{m-1} + K_{m+1}) / 2.
struct ScaledBesselTable {
  double argument = 0.0;
  std::vector<double> log_i;
  std::vector<double> log_k;
  std::vector<double> i_log_deriv;
  std::vector<double> k_log_deriv;
};

ScaledBesselTable scaled_bessel_table(int max_order, double x);

}  // namespace bornfast::special

#endif  // BORNFAST_SPECIAL_FUNCTIONS_HPP
