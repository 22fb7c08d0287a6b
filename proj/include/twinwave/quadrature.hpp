#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <stdexcept>

namespace twinwave {

// Gauss-Kronrod 7/15 abscissae and weights on [-1, 1] (symmetric half).
namespace detail {
inline constexpr std::array<double, 8> gk15_nodes{
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> gk15_kronrod_weights{
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> gk15_gauss_weights{
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

template <class F>
void gk15(F&& f, double a, double b, double& kronrod, double& error) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  const double fc = f(c);
  double k = fc * gk15_kronrod_weights[7];
  double g = fc * gk15_gauss_weights[3];
  for (int j = 0; j < 7; ++j) {
    const double dx = h * gk15_nodes[j];
    const double s = f(c - dx) + f(c + dx);
    k += gk15_kronrod_weights[j] * s;
    if (j % 2 == 1) g += gk15_gauss_weights[j / 2] * s;
  }
  kronrod = k * h;
  error = std::fabs((k - g) * h);
}

template <class F>
double adaptive_gk15_impl(F& f, double a, double b, double whole, double err,
                          double tol, int depth) {
  if (err <= tol || depth >= 50) return whole;
  const double m = 0.5 * (a + b);
  double left, left_err, right, right_err;
  gk15(f, a, m, left, left_err);
  gk15(f, m, b, right, right_err);
  return adaptive_gk15_impl(f, a, m, left, left_err, 0.5 * tol, depth + 1) +
         adaptive_gk15_impl(f, m, b, right, right_err, 0.5 * tol, depth + 1);
}
}  // namespace detail

/// Adaptive Gauss-Kronrod (7/15) integration of f over [a, b] to an absolute
/// tolerance. Bisects any panel whose Gauss/Kronrod difference exceeds its
/// share of the tolerance.
template <class F>
double integrate_adaptive(F&& f, double a, double b, double abs_tol) {
  if (!(abs_tol > 0)) throw std::invalid_argument("integrate_adaptive: tolerance must be positive");
  if (a == b) return 0.0;
  double whole, err;
  detail::gk15(f, a, b, whole, err);
  return detail::adaptive_gk15_impl(f, a, b, whole, err, abs_tol, 0);
}

}  // namespace twinwave
