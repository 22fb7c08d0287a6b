#include <gtest/gtest.h>

#include <cmath>

#include "twinwave/stats.hpp"
#include "twinwave/synth.hpp"

using namespace twinwave;

namespace {

DetectorGeometry coarse_geometry() {
  DetectorGeometry g;
  g.wavelength.downsample = 16;  // 31 columns
  g.radial.downsample = 16;      // 15 rows
  return g;
}

CorrelationProfile sampled(double (*f)(double), double step, int half) {
  CorrelationProfile p;
  for (int i = -half; i <= half; ++i) {
    p.lag.push_back(i * step);
    p.value.push_back(f(i * step));
  }
  return p;
}

}  // namespace

TEST(G2Bar, SmallSamples) {
  const std::vector<double> a{1.0, 3.0};
  EXPECT_DOUBLE_EQ(g2bar(a).value, 0.5);  // unbiased variance 2 over mean^2 4
  const std::vector<double> b{2.0, 2.0, 2.0};
  EXPECT_DOUBLE_EQ(g2bar(b).value, 0.0);
  EXPECT_DOUBLE_EQ(g2bar(b).std_error, 0.0);
  const std::vector<double> one{1.0};
  EXPECT_THROW(g2bar(one), std::invalid_argument);
  const std::vector<double> zero{0.0, 0.0};
  EXPECT_THROW(g2bar(zero), analysis_error);
}

TEST(G2Bar, ExponentialIsOneWithCalibratedError) {
  RandomStream r(3, 0, 0);
  std::vector<double> w(50000);
  for (double& x : w) x = r.exponential(1.0);
  const auto e = g2bar(w);
  // Delta-method sd for exponential: sqrt((9 - 1 - 8 + 4) / n) = 2 / sqrt(n).
  const double expected = 2.0 / std::sqrt(static_cast<double>(w.size()));
  EXPECT_NEAR(e.std_error, expected, 0.15 * expected);
  EXPECT_NEAR(e.value, 1.0, 4 * e.std_error);
}

TEST(G2Map, ThermalModesAndGrouping) {
  SyntheticSpec spec;
  spec.geometry = coarse_geometry();
  spec.shots = 4000;
  spec.modes = 2;
  const auto st = synth_thermal(spec, 5);
  const auto single = g2bar_map(st, Strip::signal, {1, GroupAxis::frequency}, Window::whole(st));
  double mean = 0;
  for (double v : single.g2) mean += v;
  mean /= single.size();
  EXPECT_NEAR(mean, 0.5, 0.01);
  // Independent pixels: grouping n divides g2 by n.
  const Window w{0, st.rows(), 0, 28};
  const auto grouped = g2bar_map(st, Strip::signal, {4, GroupAxis::frequency}, w);
  EXPECT_EQ(grouped.cell_cols, 7u);
  double gm = 0;
  for (double v : grouped.g2) gm += v;
  gm /= grouped.size();
  EXPECT_NEAR(gm, 0.125, 0.004);
  EXPECT_THROW(g2bar_map(st, Strip::signal, {3, GroupAxis::frequency}, w), std::invalid_argument);
  const auto radial = g2bar_map(st, Strip::signal, {5, GroupAxis::radial}, Window::whole(st));
  EXPECT_EQ(radial.cell_rows, 3u);
  EXPECT_DOUBLE_EQ(radial.row_center[0], 2.0);
}

TEST(Fwhm, AnalyticShapes) {
  EXPECT_NEAR(fwhm(sampled([](double x) { return std::max(0.0, 1.0 - std::fabs(x) / 4.0); }, 1.0, 10)), 4.0, 1e-12);
  EXPECT_NEAR(fwhm(sampled([](double x) { return std::exp(-x * x / 2.0); }, 0.01, 600)), 2.0 * std::sqrt(2.0 * std::log(2.0)),
              1e-4);
  EXPECT_THROW(fwhm(sampled([](double) { return 1.0; }, 1.0, 5)), analysis_error);
}

TEST(Autocorrelation, GaussianSpeckleWidth) {
  SyntheticSpec spec;
  spec.kind = SynthKind::gaussian_field;
  spec.sigma_nm = 1.0;
  spec.sigma_mrad = 2.0;
  spec.shots = 400;
  const auto st = synth_thermal(spec, 8);
  const double k = 2.0 * std::sqrt(2.0 * std::log(2.0));
  const auto w = fwhm(autocorrelation_profile(st, Strip::signal, CorrelationAxis::frequency, st.rows() / 2, 20, 104, 20));
  EXPECT_NEAR(w, k * spec.sigma_nm, 0.1 * k * spec.sigma_nm);
  const auto r = fwhm(autocorrelation_profile(st, Strip::signal, CorrelationAxis::radial, st.cols() / 2, 10, 52, 15));
  EXPECT_NEAR(r, k * spec.sigma_mrad, 0.1 * k * spec.sigma_mrad);
  EXPECT_THROW(autocorrelation_profile(st, Strip::signal, CorrelationAxis::azimuthal, 0, 0, 10, 2), std::invalid_argument);
}

TEST(CrossCorrelation, MirroredPeakAndShuffledControl) {
  SyntheticSpec spec;
  spec.kind = SynthKind::gaussian_field;
  spec.sigma_nm = 0.5;
  spec.sigma_mrad = 1.0;
  spec.shots = 500;
  const auto st = synth_thermal(spec, 2);
  const std::size_t r = 20, c = 70;
  const auto xc = cross_correlation_peak(st, r, c);
  EXPECT_EQ(xc.idler_row, st.rows() - 1 - r);
  EXPECT_EQ(xc.idler_col, st.cols() - 1 - c);
  EXPECT_NEAR(xc.peak, 1.0, 1e-6);
  EXPECT_GT(xc.contrast, 5.0);
  const auto shuffled = cross_correlation_peak(st, r, c, {.shot_offset = 1});
  EXPECT_LT(shuffled.contrast, 1.5);
}

TEST(Peaks, MovingAverage) {
  const std::vector<double> v{0, 3, 0, 3, 0};
  const auto m = moving_average(v, 3);
  EXPECT_DOUBLE_EQ(m[0], 1.5);
  EXPECT_DOUBLE_EQ(m[1], 1.0);
  EXPECT_DOUBLE_EQ(m[2], 2.0);
  EXPECT_THROW(moving_average(v, 2), std::invalid_argument);
}

TEST(Peaks, LocalMaximaWithProminence) {
  const std::vector<double> two{0, 1, 5, 1, 0, 1, 4, 1, 0};
  EXPECT_EQ(local_maxima(two, 0.02), (std::vector<std::size_t>{2, 6}));
  // A 1% ripple on a plateau is one maximum, located at the plateau middle.
  const std::vector<double> ripple{0, 1, 2, 3, 3.02, 2.99, 3.0, 3.01, 2.99, 3.0, 2, 1, 0};
  EXPECT_EQ(local_maxima(ripple, 0.02), (std::vector<std::size_t>{6}));
  const std::vector<double> flat{1, 1, 1, 1};
  EXPECT_TRUE(local_maxima(flat, 0.02).empty());
  const std::vector<double> edge{5, 4, 3, 2};
  EXPECT_TRUE(local_maxima(edge, 0.02).empty());
}

TEST(Peaks, ProfileMaximaAndTrajectory) {
  RadialProfile p;
  for (int i = 0; i <= 40; ++i) {
    const double x = 0.5 + i * 0.025;
    p.position.push_back(x);
    p.g2.push_back(std::exp(-(x - 0.75) * (x - 0.75) / 0.005) + std::exp(-(x - 1.25) * (x - 1.25) / 0.005));
  }
  const auto m = profile_maxima(p);
  ASSERT_EQ(m.size(), 2u);
  EXPECT_NEAR(m[0], 0.75, 0.03);
  EXPECT_NEAR(m[1], 1.25, 0.03);
  RadialProfile empty = p;
  std::fill(empty.g2.begin(), empty.g2.end(), 1.0);
  EXPECT_THROW(profile_maxima(empty), analysis_error);
  EXPECT_THROW(wave_trajectory({p, p}), std::invalid_argument);
  EXPECT_EQ(wave_trajectory({p, p, p}).size(), 3u);
}
