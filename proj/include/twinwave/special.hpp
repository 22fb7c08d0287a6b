#pragma once

#include <cmath>
#include <limits>
#include <numbers>

namespace twinwave {
namespace detail {

// erf(x) for 0 <= x < 3 from the positive-term series
//   erf(x) = 2/sqrt(pi) * exp(-x^2) * sum_n (2x^2)^n x / (1*3*...*(2n+1))
// No alternating signs, so no cancellation over the whole range.
inline double erf_series(double x) {
  const double x2 = x * x;
  double term = x;
  double sum = x;
  for (int n = 1; n < 200; ++n) {
    term *= 2.0 * x2 / (2.0 * n + 1.0);
    sum += term;
    if (term < sum * 1e-17) break;
  }
  return 2.0 / std::sqrt(std::numbers::pi) * std::exp(-x2) * sum;
}

// erfc(x) for x >= 3 by the Laplace continued fraction
//   erfc(x) = exp(-x^2)/sqrt(pi) * 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))
// evaluated with the modified Lentz algorithm.
inline double erfc_continued_fraction(double x) {
  constexpr double tiny = 1e-300;
  double f = x;
  double c = x;
  double d = 0.0;
  for (int n = 1; n < 500; ++n) {
    const double a = 0.5 * n;
    d = x + a * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = x + a / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = c * d;
    f *= delta;
    if (std::fabs(delta - 1.0) < 1e-16) break;
  }
  return std::exp(-x * x) / std::sqrt(std::numbers::pi) / f;
}

}  // namespace detail

/// Error function with absolute error below 1e-10 everywhere (about 1e-15
/// in practice). Series below |x| = 3, continued-fraction complement above.
inline double erf(double x) {
  if (std::isnan(x)) return x;
  const double ax = std::fabs(x);
  double r;
  if (ax < 3.0) {
    r = detail::erf_series(ax);
  } else if (ax > 27.0) {
    r = 1.0;
  } else {
    r = 1.0 - detail::erfc_continued_fraction(ax);
  }
  return x < 0 ? -r : r;
}

/// Complementary error function; accurate in the tail where 1 - erf(x) would
/// lose all digits.
inline double erfc(double x) {
  if (std::isnan(x)) return x;
  if (x < 3.0) return 1.0 - erf(x);
  if (x > 27.3) return 0.0;
  return detail::erfc_continued_fraction(x);
}

}  // namespace twinwave
