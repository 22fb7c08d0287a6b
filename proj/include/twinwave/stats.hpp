#pragma once

// Estimators on frame stacks: modified g2 of detection cells, intensity
// auto-/cross-correlation profiles, FWHM widths and the radial positions of
// local-coherence maxima.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "twinwave/ensemble.hpp"

namespace twinwave {

/// Estimator inputs that cannot produce a number (zero mean, flat profile...).
class analysis_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr const char* g2_stderr_method = "delta method on (mean, unbiased variance)";

struct G2Estimate {
  double value = 0;
  double std_error = 0;
  std::size_t samples = 0;
};

/// Modified g2 = <(dW)^2> / <W>^2 with the unbiased (n-1) variance.
///
/// The standard error is the delta-method propagation of the sampling
/// covariance of (mean, variance):
///   n Var(g) ~ (mu4 - s^4)/m^4 - 4 s^2 mu3/m^5 + 4 s^6/m^6
/// with central moments mu3, mu4 and variance s^2 estimated from the sample.
inline G2Estimate g2bar(std::span<const double> w) {
  const std::size_t n = w.size();
  if (n < 2) throw std::invalid_argument("g2bar: need at least two samples");
  double mean = 0.0;
  for (double x : w) mean += x;
  mean /= static_cast<double>(n);
  if (!(mean > 0)) throw analysis_error("g2bar: mean detected intensity is not positive");
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double x : w) {
    const double d = x - mean;
    const double d2 = d * d;
    m2 += d2;
    m3 += d2 * d;
    m4 += d2 * d2;
  }
  const double dn = static_cast<double>(n);
  const double var = m2 / (dn - 1.0);
  m3 /= dn;
  m4 /= dn;
  const double mean2 = mean * mean;
  const double g = var / mean2;
  const double s2 = m2 / dn;
  const double v = (m4 - s2 * s2) / (mean2 * mean2) - 4.0 * s2 * m3 / (mean2 * mean2 * mean) +
                   4.0 * s2 * s2 * s2 / (mean2 * mean2 * mean2);
  return {g, std::sqrt(std::max(0.0, v) / dn), n};
}

enum class GroupAxis { frequency, radial };

inline GroupAxis parse_group_axis(const std::string& s) {
  if (s == "freq" || s == "frequency") return GroupAxis::frequency;
  if (s == "radial") return GroupAxis::radial;
  throw std::invalid_argument("unknown axis '" + s + "' (expected freq or radial)");
}

/// Neighbouring pixels summed into one detection cell along one axis.
struct GroupingSpec {
  std::size_t size = 1;
  GroupAxis axis = GroupAxis::frequency;
};

/// Half-open pixel window [row_begin, row_end) x [col_begin, col_end).
struct Window {
  std::size_t row_begin = 0, row_end = 0;
  std::size_t col_begin = 0, col_end = 0;

  static Window whole(const FrameStack& s) { return {0, s.rows(), 0, s.cols()}; }
  std::size_t rows() const { return row_end - row_begin; }
  std::size_t cols() const { return col_end - col_begin; }
};

struct G2Map {
  Window window;
  GroupingSpec grouping;
  std::size_t shots = 0;
  std::size_t cell_rows = 0, cell_cols = 0;
  std::vector<double> g2;           // NaN where <W> = 0
  std::vector<double> std_error;
  std::vector<double> mode_number;  // 1/g2 where g2 > 0
  std::vector<double> row_center;   // cell centre, pixel units
  std::vector<double> col_center;

  std::size_t size() const { return cell_rows * cell_cols; }
  double at(std::size_t r, std::size_t c) const { return g2[r * cell_cols + c]; }
  double std_error_at(std::size_t r, std::size_t c) const { return std_error[r * cell_cols + c]; }
};

namespace detail {
inline void check_window(const FrameStack& s, const Window& w) {
  if (w.row_end <= w.row_begin || w.col_end <= w.col_begin || w.row_end > s.rows() || w.col_end > s.cols())
    throw std::invalid_argument("window is empty or outside the strip");
}
}  // namespace detail

/// Per cell and shot W = sum of member-pixel intensities (dark level
/// removed); g2bar across shots.
inline G2Map g2bar_map(const FrameStack& stack, Strip strip, const GroupingSpec& grouping, const Window& window) {
  detail::check_window(stack, window);
  if (grouping.size < 1) throw std::invalid_argument("group size must be at least 1");
  const bool along_cols = grouping.axis == GroupAxis::frequency;
  const std::size_t extent = along_cols ? window.cols() : window.rows();
  if (extent % grouping.size != 0)
    throw std::invalid_argument("grouping of " + std::to_string(grouping.size) + " pixels does not tile a window of " +
                                std::to_string(extent));
  if (stack.shots < 2) throw std::invalid_argument("g2bar_map: need at least two shots");

  G2Map map;
  map.window = window;
  map.grouping = grouping;
  map.shots = stack.shots;
  map.cell_rows = along_cols ? window.rows() : window.rows() / grouping.size;
  map.cell_cols = along_cols ? window.cols() / grouping.size : window.cols();
  const std::size_t cells = map.size();
  map.g2.assign(cells, std::numeric_limits<double>::quiet_NaN());
  map.std_error.assign(cells, std::numeric_limits<double>::quiet_NaN());
  map.mode_number.assign(cells, std::numeric_limits<double>::quiet_NaN());
  map.row_center.resize(cells);
  map.col_center.resize(cells);

  const double dark = stack.dark_level();
  const std::size_t cols = stack.cols();
  // W[cell][shot], filled shot by shot for locality in the stack.
  std::vector<double> w(cells * stack.shots, 0.0);
  for (std::size_t shot = 0; shot < stack.shots; ++shot) {
    const auto frame = stack.strip(shot, strip);
    for (std::size_t cr = 0; cr < map.cell_rows; ++cr)
      for (std::size_t cc = 0; cc < map.cell_cols; ++cc) {
        double sum = 0.0;
        for (std::size_t k = 0; k < grouping.size; ++k) {
          const std::size_t r = window.row_begin + (along_cols ? cr : cr * grouping.size + k);
          const std::size_t c = window.col_begin + (along_cols ? cc * grouping.size + k : cc);
          sum += static_cast<double>(frame[r * cols + c]) - dark;
        }
        w[(cr * map.cell_cols + cc) * stack.shots + shot] = sum;
      }
  }
  const double half = 0.5 * static_cast<double>(grouping.size - 1);
  for (std::size_t cr = 0; cr < map.cell_rows; ++cr)
    for (std::size_t cc = 0; cc < map.cell_cols; ++cc) {
      const std::size_t cell = cr * map.cell_cols + cc;
      map.row_center[cell] = static_cast<double>(window.row_begin) +
                             (along_cols ? static_cast<double>(cr) : static_cast<double>(cr * grouping.size) + half);
      map.col_center[cell] = static_cast<double>(window.col_begin) +
                             (along_cols ? static_cast<double>(cc * grouping.size) + half : static_cast<double>(cc));
      std::span<const double> samples(&w[cell * stack.shots], stack.shots);
      const double mean = std::accumulate(samples.begin(), samples.end(), 0.0);
      if (!(mean > 0)) continue;
      const auto est = g2bar(samples);
      map.g2[cell] = est.value;
      map.std_error[cell] = est.std_error;
      if (est.value > 0) map.mode_number[cell] = 1.0 / est.value;
    }
  return map;
}

enum class CorrelationAxis { azimuthal, frequency, radial };

inline const char* to_string(CorrelationAxis a) {
  switch (a) {
    case CorrelationAxis::azimuthal: return "phi";
    case CorrelationAxis::frequency: return "omega";
    case CorrelationAxis::radial: return "k";
  }
  return "?";
}

struct CorrelationProfile {
  CorrelationAxis axis = CorrelationAxis::frequency;
  std::vector<double> lag;    // physical units: nm (omega) or mrad (k)
  std::vector<double> value;  // normalised to 1 at zero lag
};

/// C(d) = <dI(x) dI(x+d)> over shots and over x in [begin, end) along one
/// line of the strip (a row for the frequency axis, a column for the radial
/// axis, selected by `anchor`), divided by C(0). dI is the deviation from
/// the per-pixel shot mean. Lags run from -max_lag to +max_lag pixels.
inline CorrelationProfile autocorrelation_profile(const FrameStack& stack, Strip strip, CorrelationAxis axis,
                                                  std::size_t anchor, std::size_t begin, std::size_t end,
                                                  std::size_t max_lag) {
  if (axis == CorrelationAxis::azimuthal)
    throw std::invalid_argument("autocorrelation_profile: frames are integrated over the azimuthal arc");
  const bool along_cols = axis == CorrelationAxis::frequency;
  const std::size_t line_len = along_cols ? stack.cols() : stack.rows();
  const std::size_t lines = along_cols ? stack.rows() : stack.cols();
  if (anchor >= lines) throw std::invalid_argument("autocorrelation_profile: anchor outside the strip");
  if (end > line_len || end < begin + 2) throw std::invalid_argument("autocorrelation_profile: degenerate window");
  if (stack.shots < 2) throw std::invalid_argument("autocorrelation_profile: need at least two shots");
  const double pitch = along_cols ? stack.geometry.wavelength.pitch() : stack.geometry.radial.pitch();

  auto pixel = [&](std::size_t shot, std::size_t x) -> double {
    return along_cols ? stack.at(shot, strip, anchor, x) : stack.at(shot, strip, x, anchor);
  };
  std::vector<double> mean(line_len, 0.0);
  for (std::size_t shot = 0; shot < stack.shots; ++shot)
    for (std::size_t x = 0; x < line_len; ++x) mean[x] += pixel(shot, x);
  for (double& m : mean) m /= static_cast<double>(stack.shots);

  const auto L = static_cast<long>(max_lag);
  std::vector<double> acc(2 * max_lag + 1, 0.0);
  std::vector<std::size_t> count(2 * max_lag + 1, 0);
  std::vector<double> dev(line_len);
  for (std::size_t shot = 0; shot < stack.shots; ++shot) {
    for (std::size_t x = 0; x < line_len; ++x) dev[x] = pixel(shot, x) - mean[x];
    for (long d = -L; d <= L; ++d) {
      double s = 0.0;
      std::size_t c = 0;
      for (std::size_t x = begin; x < end; ++x) {
        const long y = static_cast<long>(x) + d;
        if (y < 0 || y >= static_cast<long>(line_len)) continue;
        s += dev[x] * dev[static_cast<std::size_t>(y)];
        ++c;
      }
      acc[static_cast<std::size_t>(d + L)] += s;
      count[static_cast<std::size_t>(d + L)] += c;
    }
  }
  const double c0 = acc[max_lag] / static_cast<double>(count[max_lag]);
  if (!(c0 > 0)) throw analysis_error("autocorrelation_profile: zero intensity variance in the window");
  CorrelationProfile p;
  p.axis = axis;
  for (long d = -L; d <= L; ++d) {
    const auto i = static_cast<std::size_t>(d + L);
    p.lag.push_back(static_cast<double>(d) * pitch);
    p.value.push_back(count[i] ? acc[i] / static_cast<double>(count[i]) / c0 : 0.0);
  }
  return p;
}

/// Full width at half maximum: half-maximum crossings on each side of the
/// zero-lag peak, linearly interpolated between samples.
inline double fwhm(const CorrelationProfile& p) {
  if (p.lag.size() != p.value.size() || p.lag.empty()) throw std::invalid_argument("fwhm: malformed profile");
  std::size_t zero = 0;
  for (std::size_t i = 1; i < p.lag.size(); ++i)
    if (std::fabs(p.lag[i]) < std::fabs(p.lag[zero])) zero = i;
  const double half = 0.5 * p.value[zero];
  auto crossing = [&](int dir) {
    for (long i = static_cast<long>(zero) + dir; i >= 0 && i < static_cast<long>(p.lag.size()); i += dir) {
      const auto k = static_cast<std::size_t>(i);
      const auto prev = static_cast<std::size_t>(i - dir);
      if (p.value[k] <= half) {
        const double t = (p.value[prev] - half) / (p.value[prev] - p.value[k]);
        return p.lag[prev] + t * (p.lag[k] - p.lag[prev]);
      }
    }
    throw analysis_error("fwhm: no half-maximum crossing inside the lag range");
  };
  const double right = crossing(+1);
  const double left = crossing(-1);
  return right - left;
}

struct CrossCorrelationPeak {
  std::size_t idler_row = 0, idler_col = 0;
  double peak = 0;        // correlation coefficient at the peak
  double background = 0;  // largest |coefficient| outside the exclusion box
  double contrast = 0;    // peak / background
  std::size_t exclusion_rows = 0, exclusion_cols = 0;  // box half-sizes used
};

struct CrossCorrelationOptions {
  std::size_t min_exclusion = 2;  // smallest box half-size (pixels)
  double hwhm_factor = 3.0;       // box half-size = factor x peak half-width at half maximum, per axis
  std::size_t shot_offset = 0;    // pair signal shot j with idler shot j + offset (mod shots); 0 keeps the pairing
};

/// Pearson correlation between the signal intensity at (row, col) and every
/// idler pixel across shots. Reports the location of the maximum and its
/// contrast against the strongest |correlation| outside a box around the
/// peak; the box scales with the peak's own width so that the correlated
/// grain is never counted as background.
inline CrossCorrelationPeak cross_correlation_peak(const FrameStack& stack, std::size_t row, std::size_t col,
                                                   const CrossCorrelationOptions& opt = {}) {
  if (row >= stack.rows() || col >= stack.cols()) throw std::invalid_argument("cross_correlation_peak: anchor outside strip");
  const std::size_t S = stack.shots;
  if (S < 3) throw std::invalid_argument("cross_correlation_peak: need at least three shots");
  const std::size_t P = stack.strip_size(), R = stack.rows(), C = stack.cols();
  std::vector<double> a(S);
  double amean = 0.0;
  for (std::size_t s = 0; s < S; ++s) {
    a[s] = stack.at(s, Strip::signal, row, col);
    amean += a[s];
  }
  amean /= static_cast<double>(S);
  double avar = 0.0;
  for (double& x : a) {
    x -= amean;
    avar += x * x;
  }
  if (!(avar > 0)) throw analysis_error("cross_correlation_peak: zero intensity variance at the anchor");

  std::vector<double> mean(P, 0.0), cov(P, 0.0), var(P, 0.0);
  for (std::size_t s = 0; s < S; ++s) {
    const auto f = stack.strip((s + opt.shot_offset) % S, Strip::idler);
    for (std::size_t p = 0; p < P; ++p) mean[p] += f[p];
  }
  for (double& m : mean) m /= static_cast<double>(S);
  for (std::size_t s = 0; s < S; ++s) {
    const auto f = stack.strip((s + opt.shot_offset) % S, Strip::idler);
    for (std::size_t p = 0; p < P; ++p) {
      const double d = f[p] - mean[p];
      cov[p] += a[s] * d;
      var[p] += d * d;
    }
  }
  std::vector<double> rho(P, 0.0);
  std::size_t best = 0;
  for (std::size_t p = 0; p < P; ++p) {
    rho[p] = var[p] > 0 ? cov[p] / std::sqrt(avar * var[p]) : 0.0;
    if (rho[p] > rho[best]) best = p;
  }
  CrossCorrelationPeak out;
  out.idler_row = best / C;
  out.idler_col = best % C;
  out.peak = rho[best];

  // Half width at half maximum along each axis through the peak (pixels).
  auto hwhm = [&](bool along_cols) {
    const std::size_t n = along_cols ? C : R, at = along_cols ? out.idler_col : out.idler_row;
    auto value = [&](std::size_t i) { return along_cols ? rho[out.idler_row * C + i] : rho[i * C + out.idler_col]; };
    std::size_t lo = at, hi = at;
    while (lo > 0 && value(lo - 1) >= 0.5 * out.peak) --lo;
    while (hi + 1 < n && value(hi + 1) >= 0.5 * out.peak) ++hi;
    return 0.5 * static_cast<double>(hi - lo + 1);
  };
  out.exclusion_rows = std::max(opt.min_exclusion, static_cast<std::size_t>(std::ceil(opt.hwhm_factor * hwhm(false))));
  out.exclusion_cols = std::max(opt.min_exclusion, static_cast<std::size_t>(std::ceil(opt.hwhm_factor * hwhm(true))));
  for (std::size_t p = 0; p < P; ++p) {
    const std::size_t r = p / C, c = p % C;
    const auto dr = r > out.idler_row ? r - out.idler_row : out.idler_row - r;
    const auto dc = c > out.idler_col ? c - out.idler_col : out.idler_col - c;
    if (dr <= out.exclusion_rows && dc <= out.exclusion_cols) continue;
    out.background = std::max(out.background, std::fabs(rho[p]));
  }
  out.contrast = out.background > 0 ? out.peak / out.background : std::numeric_limits<double>::infinity();
  return out;
}

/// Moving average over `window` samples (odd), truncated at the ends.
inline std::vector<double> moving_average(std::span<const double> v, std::size_t window) {
  if (window % 2 == 0) throw std::invalid_argument("moving_average: window must be odd");
  const auto h = static_cast<long>(window / 2);
  std::vector<double> out(v.size());
  for (long i = 0; i < static_cast<long>(v.size()); ++i) {
    double s = 0.0;
    int n = 0;
    for (long j = std::max(0L, i - h); j <= std::min(static_cast<long>(v.size()) - 1, i + h); ++j) {
      s += v[static_cast<std::size_t>(j)];
      ++n;
    }
    out[static_cast<std::size_t>(i)] = s / n;
  }
  return out;
}

/// Interior local maxima of `v` whose topographic prominence is at least
/// `min_prominence` times the largest value. Each is reported at the centre
/// of the contiguous run within that tolerance of its height, so a flat top
/// with sub-threshold ripple is located at its middle, not at the ripple.
inline std::vector<std::size_t> local_maxima(std::span<const double> v, double min_prominence) {
  std::vector<std::size_t> out;
  if (v.size() < 3) return out;
  const double top = *std::max_element(v.begin(), v.end());
  for (std::size_t i = 1; i + 1 < v.size(); ++i) {
    if (!(v[i] > v[i - 1])) continue;
    std::size_t j = i;
    while (j + 1 < v.size() && v[j + 1] == v[i]) ++j;
    if (j + 1 >= v.size() || !(v[j + 1] < v[i])) {
      i = j;
      continue;
    }
    // Prominence: height above the higher of the two bases.
    double left_min = v[i];
    for (long k = static_cast<long>(i) - 1; k >= 0 && v[static_cast<std::size_t>(k)] <= v[i]; --k)
      left_min = std::min(left_min, v[static_cast<std::size_t>(k)]);
    double right_min = v[i];
    for (std::size_t k = j + 1; k < v.size() && v[k] <= v[i]; ++k) right_min = std::min(right_min, v[k]);
    const double prominence = v[i] - std::max(left_min, right_min);
    const double tol = min_prominence * std::fabs(top);
    if (prominence >= tol) {
      std::size_t lo = i, hi = j;
      while (lo > 0 && v[lo - 1] >= v[i] - tol) --lo;
      while (hi + 1 < v.size() && v[hi + 1] >= v[i] - tol) ++hi;
      out.push_back((lo + hi) / 2);
    }
    i = j;
  }
  return out;
}

/// g2 along the radial axis at one wavelength column, with the normalised
/// radial coordinate k/k0 of each sample.
struct RadialProfile {
  double power = 0;
  std::vector<double> position;  // k / k0
  std::vector<double> g2;
  std::vector<double> std_error;
};

struct MaximaPoint {
  double power = 0;
  std::vector<double> maxima;  // k / k0, ascending
};

inline constexpr std::size_t peak_smoothing = 3;
inline constexpr double peak_min_prominence = 0.02;

/// Local maxima of a single radial profile after 3-sample smoothing; maxima
/// below 2% prominence are dropped.
inline std::vector<double> profile_maxima(const RadialProfile& p) {
  const auto smooth = moving_average(p.g2, peak_smoothing);
  std::vector<double> out;
  for (auto i : local_maxima(smooth, peak_min_prominence)) out.push_back(p.position[i]);
  if (out.empty()) throw analysis_error("no local maximum in the radial g2 profile");
  return out;
}

/// Maxima positions for each power of a sweep, in the order given.
inline std::vector<MaximaPoint> wave_trajectory(const std::vector<RadialProfile>& profiles) {
  if (profiles.size() < 3) throw std::invalid_argument("wave_trajectory: need at least three power points");
  std::vector<MaximaPoint> out;
  for (const auto& p : profiles) {
    if (p.position.size() != p.g2.size() || p.g2.empty())
      throw std::invalid_argument("wave_trajectory: malformed profile");
    out.push_back({p.power, profile_maxima(p)});
  }
  return out;
}

/// Row range [begin, end) around the brightest row of `col` whose mean
/// intensity stays at or above `fraction` of the peak.
inline std::pair<std::size_t, std::size_t> populated_rows(const FrameStack& stack, Strip strip, std::size_t col,
                                                          double fraction) {
  std::vector<double> mean(stack.rows(), 0.0);
  for (std::size_t s = 0; s < stack.shots; ++s)
    for (std::size_t r = 0; r < stack.rows(); ++r) mean[r] += stack.at(s, strip, r, col);
  const auto peak = static_cast<std::size_t>(std::max_element(mean.begin(), mean.end()) - mean.begin());
  const double cut = fraction * mean[peak];
  std::size_t b = peak, e = peak + 1;
  while (b > 0 && mean[b - 1] >= cut) --b;
  while (e < stack.rows() && mean[e] >= cut) ++e;
  return {b, e};
}

/// Radial g2 profile (single pixels) at wavelength column `col`, limited to
/// rows [row_begin, row_end).
inline RadialProfile radial_profile(const FrameStack& stack, Strip strip, std::size_t col, std::size_t row_begin,
                                    std::size_t row_end, double power) {
  const auto map = g2bar_map(stack, strip, {1, GroupAxis::radial}, {row_begin, row_end, col, col + 1});
  RadialProfile p;
  p.power = power;
  const double k0 = stack.geometry.cone_center_mrad();
  for (std::size_t r = 0; r < map.cell_rows; ++r) {
    p.position.push_back(stack.geometry.radial.center(row_begin + r) / k0);
    p.g2.push_back(map.at(r, 0));
    p.std_error.push_back(map.std_error_at(r, 0));
  }
  return p;
}

}  // namespace twinwave
