#include <gtest/gtest.h>

#include <cmath>

#include "twinwave/oracle.hpp"
#include "twinwave/quadrature.hpp"
#include "twinwave/special.hpp"

using namespace twinwave;
using namespace twinwave::oracle;

TEST(Erf, MatchesStd) {
  for (double x = -7.0; x <= 7.0; x += 0.013) {
    EXPECT_NEAR(twinwave::erf(x), std::erf(x), 2e-15) << x;
    EXPECT_NEAR(twinwave::erfc(x), std::erfc(x), 2e-15 * std::max(1.0, std::erfc(x))) << x;
  }
  EXPECT_NEAR(twinwave::erfc(10.0) / std::erfc(10.0), 1.0, 1e-13);
}

TEST(Quadrature, KnownIntegrals) {
  EXPECT_NEAR(integrate_adaptive([](double x) { return std::exp(-x * x); }, -8, 8, 1e-14), std::sqrt(M_PI), 1e-13);
  EXPECT_NEAR(integrate_adaptive([](double x) { return std::sin(x); }, 0, M_PI, 1e-14), 2.0, 1e-13);
  EXPECT_NEAR(integrate_adaptive([](double x) { return std::sqrt(x); }, 0, 1, 1e-12), 2.0 / 3.0, 1e-10);
}

TEST(G2Oracle, Limits) {
  EXPECT_NEAR(g2_1d_closed(0.01), 0.008862, 1e-6);
  EXPECT_GE(g2_1d_closed(100.0), 0.99996);
  EXPECT_LT(g2_1d_closed(100.0), 1.0);
  EXPECT_THROW(g2_1d_closed(0.0), std::invalid_argument);
}

TEST(G2Oracle, StrictlyIncreasing) {
  const auto grid = log_grid(0.01, 100.0, 400);
  for (std::size_t i = 1; i < grid.size(); ++i) EXPECT_GT(g2_1d_closed(grid[i]), g2_1d_closed(grid[i - 1]));
}

namespace {

// The square double integral in closed form: with a = dA / (2d),
//   sqrt(pi) a erf(1/a) - a^2 (1 - exp(-1/a^2)).
double square_integral(double da) {
  const double a = 0.5 * da;
  return std::sqrt(M_PI) * a * std::erf(1.0 / a) - a * a * -std::expm1(-1.0 / (a * a));
}

}  // namespace

TEST(G2Oracle, QuadratureMatchesSquareIntegral) {
  for (double da : {0.01, 0.1, 0.5, 1.0, 3.0, 30.0, 100.0}) {
    EXPECT_NEAR(g2_1d_quadrature(da, 1.0), square_integral(da), 1e-8) << da;
    EXPECT_NEAR(g2_1d_quadrature(2.0 * da, 2.0), square_integral(da), 1e-8) << da;
  }
}

TEST(G2Oracle, ClosedFormIsSingleLagIntegral) {
  // (sqrt(pi)/2) da erf(1/da) = (1/2d) int_{-d}^{d} exp(-u^2/dA^2) du.
  for (double da : {0.01, 0.3, 1.0, 10.0}) {
    const double single =
        integrate_adaptive([da](double u) { return std::exp(-u * u / (da * da)); }, -1.0, 1.0, 1e-14) / 2.0;
    EXPECT_NEAR(g2_1d_closed(da), single, 1e-12) << da;
  }
  // Both share the small- and large-da limits but not the interior.
  EXPECT_NEAR(g2_1d_closed(1.0) - g2_1d_quadrature(1.0, 1.0), 0.110164, 1e-6);
}

TEST(G2Oracle, HalfDomainAgreesBySymmetry) {
  for (double da : {0.05, 0.8, 7.0}) EXPECT_NEAR(g2_1d_quadrature(da, 1.0, true), g2_1d_quadrature(da, 1.0), 1e-9);
}

TEST(G2Oracle, ModelNormalization) {
  const Gaussian1DModel m(0.6, 2.0);
  EXPECT_DOUBLE_EQ(m.normalized(), 0.3);
  EXPECT_DOUBLE_EQ(g2_1d_closed(m), g2_1d_closed(0.3));
}

TEST(Sensitivity, PeakBetweenDecades) {
  const auto rows = sensitivity_table(log_grid(0.01, 100.0, 200));
  const double p = max_sensitivity_point(rows);
  EXPECT_GT(p, 0.3);
  EXPECT_LT(p, 1.5);
  for (const auto& r : rows) EXPECT_GT(r.slope, 0.0);
  EXPECT_THROW(sensitivity_table({1.0, 0.5}), std::invalid_argument);
}
