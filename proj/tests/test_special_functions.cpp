#include <doctest.h>

#include <cmath>

#include "bornfast/special_functions.hpp"
#include "oracles.hpp"

using namespace bornfast::special;

TEST_CASE("I_m matches the power series") {
  for (int m : {0, 1, 3, 7, 15}) {
    for (double x : {0.1, 0.5, 1.0, 2.0, 5.0}) {
      const double ref = oracle::bessel_i_series(m, x, 60);
      CHECK(bessel_i(m, x).value == doctest::Approx(ref).epsilon(1e-12));
    }
  }
  CHECK(bessel_i(3, 2.0).value == doctest::Approx(oracle::bessel_i_series(3, 2.0, 40)).epsilon(1e-12));
}

TEST_CASE("small-argument limits") {
  CHECK(std::abs(bessel_i(0, 1e-12).value - 1.0) <= 1e-12);
  CHECK(bessel_i(1, 1e-12).value == doctest::Approx(5e-13).epsilon(1e-10));
}

TEST_CASE("K_0 matches the integral representation") {
  for (double x : {0.3, 1.0, 2.5, 8.0}) {
    CHECK(bessel_k(0, x).value == doctest::Approx(oracle::bessel_k0_integral(x)).epsilon(1e-10));
  }
}

TEST_CASE("Wronskian over the tested range") {
  for (int m = 0; m <= 120; ++m) {
    for (double x : {0.5, 1.0, 3.0, 10.0}) {
      const auto p = bessel_pair(m, x);
      INFO("m=" << m << " x=" << x);
      CHECK(std::abs(p.wronskian() + 1.0 / x) <= 1e-12 / x);
    }
  }
  CHECK(std::abs(bessel_pair(5, 3.0).wronskian() + 1.0 / 3.0) <= 1e-12);
  CHECK(std::abs(bessel_pair(90, 3.0).wronskian() + 1.0 / 3.0) <= 1e-12 / 3.0);
}

TEST_CASE("pair derivatives follow the recurrence identities") {
  const auto p0 = bessel_pair(0, 1.0);
  CHECK(p0.i_deriv == doctest::Approx(bessel_i(1, 1.0).value).epsilon(1e-14));
  const auto p1 = bessel_pair(1, 2.0);
  const double kd = -(bessel_k(0, 2.0).value + bessel_k(2, 2.0).value) / 2.0;
  CHECK(p1.k_deriv == doctest::Approx(kd).epsilon(1e-14));
}

TEST_CASE("I_m K_m approaches 1/(2m)") {
  const double prod = bessel_k(90, 3.0).value * bessel_i(90, 3.0).value;
  CHECK(prod > 0.0);
  CHECK(std::isfinite(prod));
  CHECK(std::abs(prod * 180.0 - 1.0) <= 0.05);
}

TEST_CASE("three-term recurrence and monotonicity") {
  for (double x : {0.5, 3.0, 10.0}) {
    const auto i = bessel_i_sequence(101, x);
    const auto k = bessel_k_sequence(101, x);
    for (int m = 1; m <= 100; ++m) {
      const double res = i[m - 1] - i[m + 1] - (2.0 * m / x) * i[m];
      CHECK(std::abs(res) <= 1e-10 * i[m - 1]);
    }
    for (int m = 1; m <= 100; ++m) {
      if (i[m] > 0.0) CHECK(i[m] < i[m - 1]);
      if (std::isfinite(k[m])) CHECK(k[m] > k[m - 1]);
    }
  }
}

TEST_CASE("log forms agree with direct values and survive past double range") {
  for (int m : {0, 5, 40, 90}) {
    CHECK(log_bessel_i(m, 3.0) == doctest::Approx(std::log(bessel_i(m, 3.0).value)).epsilon(1e-13));
    CHECK(log_bessel_k(m, 3.0) == doctest::Approx(std::log(bessel_k(m, 3.0).value)).epsilon(1e-13));
  }
  const double li = log_bessel_i(190, 1.0);
  const double lk = log_bessel_k(190, 1.0);
  CHECK(std::isfinite(li));
  CHECK(std::isfinite(lk));
  CHECK(std::exp(li + lk) * 380.0 == doctest::Approx(1.0).epsilon(0.01));
  const auto t = scaled_bessel_table(120, 3.0);
  for (int m = 1; m <= 120; ++m) {
    // I'/I - K'/K = 1 / (x I K)
    const double lhs = t.i_log_deriv[m] - t.k_log_deriv[m];
    CHECK(lhs == doctest::Approx(1.0 / (3.0 * std::exp(t.log_i[m] + t.log_k[m]))).epsilon(1e-12));
  }
}

TEST_CASE("range flags and errors") {
  CHECK_THROWS_AS(bessel_i(0, 0.0), BesselError);
  CHECK_THROWS_AS(bessel_k(2, -1.0), BesselError);
  CHECK_THROWS_AS(bessel_i(201, 1.0), BesselError);
  const auto tiny = bessel_i(190, 1.0);
  CHECK(tiny.underflow);
  const auto huge = bessel_k(190, 1.0);
  CHECK(huge.overflow);
  BesselOptions strict;
  strict.strict = true;
  CHECK_THROWS_AS(bessel_k(190, 1.0, strict), BesselRangeError);
}
