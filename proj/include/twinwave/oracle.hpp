#pragma once

// One-dimensional Gaussian detection-volume model: how the modified g2 of a
// pixel of extent 2d depends on the intensity coherence length dA of a
// stationary field with correlation exp(-x^2/dA^2).

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "twinwave/quadrature.hpp"
#include "twinwave/special.hpp"

namespace twinwave::oracle {

struct Gaussian1DModel {
  double coherence_length;  // dA, axis units
  double half_extent;       // d, axis units

  Gaussian1DModel(double dA, double d) : coherence_length(dA), half_extent(d) {
    if (!(dA > 0) || !(d > 0))
      throw std::invalid_argument("Gaussian1DModel: coherence length and pixel half-extent must be positive");
  }
  double normalized() const { return coherence_length / half_extent; }
};

/// Closed form  g2_1D(da) = (sqrt(pi)/2) * da * erf(1/da).
inline double g2_1d_closed(double da) {
  if (!(da > 0)) throw std::invalid_argument("g2_1d_closed: normalized coherence length must be positive");
  return 0.5 * std::sqrt(std::numbers::pi) * da * twinwave::erf(1.0 / da);
}

inline double g2_1d_closed(const Gaussian1DModel& model) { return g2_1d_closed(model.normalized()); }

/// Brute-force double integral
///   int_{-d}^{d} dx int_{-d}^{d} dx' exp(-(x-x')^2/dA^2)  /  (2d)^2
/// by nested adaptive Gauss-Kronrod. The inner integrand is split at its
/// ridge x' = x and truncated at 9 dA, where it is below 1e-35.
/// With half_domain the outer integral runs over [0, d] and is doubled
/// (the outer integrand is even in x).
inline double g2_1d_quadrature(double dA, double d, bool half_domain = false) {
  if (!(dA > 0) || !(d > 0)) throw std::invalid_argument("g2_1d_quadrature: inputs must be positive");
  const double inv = 1.0 / (dA * dA);
  const double reach = 9.0 * dA;
  const double norm = 4.0 * d * d;
  const double inner_tol = 1e-13 * dA;
  auto inner = [&](double x) {
    auto kernel = [&](double xp) {
      const double u = x - xp;
      return std::exp(-u * u * inv);
    };
    const double lo = std::max(-d, x - reach);
    const double hi = std::min(d, x + reach);
    return integrate_adaptive(kernel, lo, x, inner_tol) + integrate_adaptive(kernel, x, hi, inner_tol);
  };
  const double outer_tol = 1e-12 * norm;
  const double num = half_domain ? 2.0 * integrate_adaptive(inner, 0.0, d, outer_tol)
                                 : integrate_adaptive(inner, -d, d, outer_tol);
  return num / norm;
}

struct SensitivityRow {
  double da;
  double g2;
  double slope;      // dg2/d(da)
  double log_slope;  // dg2/d(ln da), the per-decade sensitivity
};

/// g2_1D and its derivatives on an ascending grid. Interior points use
/// central differences over the two neighbours, endpoints one-sided.
inline std::vector<SensitivityRow> sensitivity_table(const std::vector<double>& grid) {
  if (grid.size() < 2) throw std::invalid_argument("sensitivity_table: need at least two grid points");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] > 0)) throw std::invalid_argument("sensitivity_table: grid must be positive");
    if (i > 0 && !(grid[i] > grid[i - 1])) throw std::invalid_argument("sensitivity_table: grid must be ascending");
  }
  std::vector<double> g(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) g[i] = g2_1d_closed(grid[i]);
  std::vector<SensitivityRow> rows(grid.size());
  const std::size_t n = grid.size();
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i == 0 ? 0 : i - 1;
    const std::size_t hi = i + 1 == n ? n - 1 : i + 1;
    const double slope = (g[hi] - g[lo]) / (grid[hi] - grid[lo]);
    const double log_slope = (g[hi] - g[lo]) / (std::log(grid[hi]) - std::log(grid[lo]));
    rows[i] = {grid[i], g[i], slope, log_slope};
  }
  return rows;
}

inline std::vector<double> log_grid(double lo, double hi, std::size_t points) {
  if (!(lo > 0) || !(hi > lo) || points < 2) throw std::invalid_argument("log_grid: need 0 < lo < hi and >= 2 points");
  std::vector<double> out(points);
  const double step = (std::log(hi) - std::log(lo)) / static_cast<double>(points - 1);
  for (std::size_t i = 0; i < points; ++i) out[i] = std::exp(std::log(lo) + step * static_cast<double>(i));
  out.front() = lo;
  out.back() = hi;
  return out;
}

/// Grid point where the per-decade sensitivity dg2/d(ln da) peaks.
inline double max_sensitivity_point(const std::vector<SensitivityRow>& rows) {
  if (rows.empty()) throw std::invalid_argument("max_sensitivity_point: empty table");
  std::size_t best = 0;
  for (std::size_t i = 1; i < rows.size(); ++i)
    if (rows[i].log_slope > rows[best].log_slope) best = i;
  return rows[best].da;
}

}  // namespace twinwave::oracle
