#pragma once

// Power sweep: locate the coherence threshold, then simulate and analyse a
// list of pump powers. Writes coherence-vs-power and maxima-trajectory CSVs,
// per-power maps/profiles/heatmaps and a manifest.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "twinwave/config.hpp"
#include "twinwave/ensemble.hpp"
#include "twinwave/io.hpp"
#include "twinwave/stats.hpp"

namespace twinwave {

struct SweepOptions {
  std::vector<double> powers_mW;  // empty: calibrate, then span [lo, hi] x P_th
  std::size_t points = 10;
  double lo = 0.2;
  double hi = 2.0;
  std::size_t calibration_shots = 500;
  double populated_fraction = 1e-8;  // radial-profile window: mean intensity >= this x peak
  bool keep_frames = false;
};

struct CalibrationResult {
  std::vector<double> power_mW;
  std::vector<double> g2_center;
  std::vector<double> std_error;
  double threshold_mW = 0;
  bool at_edge = false;  // maximum on the scan boundary: threshold is a bound only
};

/// Nested cells centred on one pixel: g2bar for 1, 4 and 8 pixels summed
/// along one axis.
struct GroupingCheck {
  GroupAxis axis = GroupAxis::frequency;
  std::vector<std::size_t> sizes;
  std::vector<double> g2;
  std::vector<double> std_error;
};

struct SweepPoint {
  double power_mW = 0;
  double power_rel = 0;  // power / P_th
  double gain_parameter = 0;
  double leading_gain = 0;
  G2Estimate center;
  double ac_fwhm_omega_nm = NAN;
  double ac_fwhm_k_mrad = NAN;
  std::size_t profile_begin = 0, profile_end = 0;
  RadialProfile profile;
  std::vector<double> maxima;  // k / k0
  std::vector<GroupingCheck> grouping;
  CrossCorrelationPeak xc;
  double seconds = 0;
};

struct SweepResult {
  CalibrationResult calibration;
  std::vector<SweepPoint> points;
};

namespace detail {

inline std::size_t center_row(const FrameStack& s) { return s.rows() / 2; }
inline std::size_t center_col(const FrameStack& s) { return s.cols() / 2; }

inline G2Estimate center_g2(const FrameStack& s) {
  const auto map =
      g2bar_map(s, Strip::signal, {1, GroupAxis::radial}, {center_row(s), center_row(s) + 1, center_col(s), center_col(s) + 1});
  return {map.g2[0], map.std_error[0], s.shots};
}

inline RunConfig at_power(RunConfig cfg, double power_mW, std::size_t shots) {
  cfg.model.pump.power_mW = power_mW;
  cfg.shots = shots;
  return cfg;
}

// Vertex of the parabola through three equally spaced samples, as an offset
// in units of the spacing (clamped to [-1, 1]).
inline double parabola_offset(double ym, double y0, double yp) {
  const double den = ym - 2.0 * y0 + yp;
  if (!(den < 0)) return 0.0;
  return std::clamp(0.5 * (ym - yp) / den, -1.0, 1.0);
}

}  // namespace detail

/// P_th: pump power of maximal central-pixel g2bar. Coarse scan over
/// P x 2^(k/2), k = -3..3, then a finer scan (steps of 2^(1/8)) around the
/// best coarse point, refined by a parabola in log P.
inline CalibrationResult calibrate_threshold(const RunConfig& cfg, std::size_t shots) {
  CalibrationResult cal;
  auto measure = [&](double p) {
    const auto g = detail::center_g2(run_ensemble(detail::at_power(cfg, p, shots)));
    cal.power_mW.push_back(p);
    cal.g2_center.push_back(g.value);
    cal.std_error.push_back(g.std_error);
    return g.value;
  };
  const double p0 = cfg.model.pump.power_mW;
  std::vector<double> coarse;
  for (int k = -3; k <= 3; ++k) coarse.push_back(measure(p0 * std::pow(2.0, 0.5 * k)));
  const auto best = static_cast<int>(std::max_element(coarse.begin(), coarse.end()) - coarse.begin());
  const double pc = p0 * std::pow(2.0, 0.5 * (best - 3));
  cal.at_edge = best == 0 || best == 6;

  std::vector<double> fine_p, fine_g;
  for (int k = -3; k <= 3; ++k) {
    const double p = pc * std::pow(2.0, 0.125 * k);
    fine_p.push_back(p);
    fine_g.push_back(k == 0 ? coarse[static_cast<std::size_t>(best)] : measure(p));
  }
  const auto fb = static_cast<std::size_t>(std::max_element(fine_g.begin(), fine_g.end()) - fine_g.begin());
  double offset = 0.0;
  if (fb > 0 && fb + 1 < fine_g.size()) offset = detail::parabola_offset(fine_g[fb - 1], fine_g[fb], fine_g[fb + 1]);
  cal.threshold_mW = fine_p[fb] * std::pow(2.0, 0.125 * offset);
  // Sort the scan by power for output.
  std::vector<std::size_t> order(cal.power_mW.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return cal.power_mW[a] < cal.power_mW[b]; });
  CalibrationResult sorted = cal;
  for (std::size_t i = 0; i < order.size(); ++i) {
    sorted.power_mW[i] = cal.power_mW[order[i]];
    sorted.g2_center[i] = cal.g2_center[order[i]];
    sorted.std_error[i] = cal.std_error[order[i]];
  }
  return sorted;
}

/// Linearly spaced powers lo*P_th .. hi*P_th.
inline std::vector<double> sweep_powers(double threshold_mW, std::size_t points, double lo, double hi) {
  if (points < 1) throw std::invalid_argument("sweep needs at least one power point");
  std::vector<double> p;
  for (std::size_t i = 0; i < points; ++i) {
    const double f = points == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
    p.push_back(f * threshold_mW);
  }
  return p;
}

/// Analysis of one simulated power point (everything except timing).
inline SweepPoint analyze_point(const FrameStack& stack, double power_mW, double threshold_mW, double populated_fraction) {
  SweepPoint pt;
  pt.power_mW = power_mW;
  pt.power_rel = threshold_mW > 0 ? power_mW / threshold_mW : NAN;
  pt.gain_parameter = stack.metadata.value("gain_parameter", NAN);
  pt.leading_gain = stack.metadata.value("leading_triplet_gain", NAN);
  pt.center = detail::center_g2(stack);
  const std::size_t cr = detail::center_row(stack), cc = detail::center_col(stack);

  auto [b, e] = populated_rows(stack, Strip::signal, cc, populated_fraction);
  pt.profile_begin = b;
  pt.profile_end = e;
  pt.profile = radial_profile(stack, Strip::signal, cc, b, e, power_mW);
  try {
    pt.maxima = profile_maxima(pt.profile);
  } catch (const analysis_error&) {
    pt.maxima.clear();
  }

  // AC widths at the beam centre over the central half of the populated
  // extent along each axis.
  {
    const std::size_t len = e - b;
    const std::size_t rb = b + len / 4, re = std::max(rb + 2, e - len / 4);
    try {
      pt.ac_fwhm_k_mrad = fwhm(autocorrelation_profile(stack, Strip::signal, CorrelationAxis::radial, cc, rb, re, len / 2));
    } catch (const analysis_error&) {
    }
    auto [cb, ce] = std::pair<std::size_t, std::size_t>{0, stack.cols()};
    {
      std::vector<double> mean(stack.cols(), 0.0);
      for (std::size_t s = 0; s < stack.shots; ++s)
        for (std::size_t c = 0; c < stack.cols(); ++c) mean[c] += stack.at(s, Strip::signal, cr, c);
      const double peak = *std::max_element(mean.begin(), mean.end());
      while (cb < cc && mean[cb] < populated_fraction * peak) ++cb;
      while (ce > cc + 1 && mean[ce - 1] < populated_fraction * peak) --ce;
    }
    const std::size_t clen = ce - cb;
    const std::size_t wb = cb + clen / 4, we = std::max(wb + 2, ce - clen / 4);
    try {
      pt.ac_fwhm_omega_nm =
          fwhm(autocorrelation_profile(stack, Strip::signal, CorrelationAxis::frequency, cr, wb, we, clen / 2));
    } catch (const analysis_error&) {
    }
  }

  for (auto axis : {GroupAxis::frequency, GroupAxis::radial}) {
    GroupingCheck g;
    g.axis = axis;
    for (std::size_t size : {1u, 4u, 8u}) {
      Window w{cr, cr + 1, cc, cc + 1};
      if (axis == GroupAxis::frequency) {
        w.col_begin = cc - size / 2;
        w.col_end = w.col_begin + size;
      } else {
        w.row_begin = cr - size / 2;
        w.row_end = w.row_begin + size;
      }
      const auto map = g2bar_map(stack, Strip::signal, {size, axis}, w);
      g.sizes.push_back(size);
      g.g2.push_back(map.g2[0]);
      g.std_error.push_back(map.std_error[0]);
    }
    pt.grouping.push_back(g);
  }
  try {
    pt.xc = cross_correlation_peak(stack, cr, cc);
  } catch (const analysis_error&) {
  }
  return pt;
}

namespace detail {

inline void write_point_outputs(const fs::path& dir, const FrameStack& stack, const SweepPoint& pt) {
  ensure_dir(dir);
  const auto map = g2bar_map(stack, Strip::signal, {1, GroupAxis::frequency}, Window::whole(stack));
  write_g2_map_csv(dir / "g2_map.csv", map, stack.geometry);
  const nlohmann::json info = {{"power_mW", pt.power_mW}, {"rows", "radial_mrad"}, {"cols", "wavelength_nm"}};
  emit_heatmap(dir / "g2_map.pgm", map, info);
  emit_heatmap(dir / "mode_number.pgm", map.mode_number, map.cell_cols, map.cell_rows, info);

  CsvWriter prof({"row", "radial_mrad", "k_over_k0", "g2bar", "stderr"});
  for (std::size_t i = 0; i < pt.profile.g2.size(); ++i)
    prof.row({static_cast<double>(pt.profile_begin + i), stack.geometry.radial.center(pt.profile_begin + i),
              pt.profile.position[i], pt.profile.g2[i], pt.profile.std_error[i]});
  prof.save(dir / "radial_profile.csv");

  CsvWriter grp({"axis", "group_pixels", "g2bar", "stderr"});
  for (const auto& g : pt.grouping)
    for (std::size_t i = 0; i < g.sizes.size(); ++i)
      grp.row({g.axis == GroupAxis::frequency ? 0.0 : 1.0, static_cast<double>(g.sizes[i]), g.g2[i], g.std_error[i]});
  // axis column: 0 = frequency, 1 = radial
  grp.save(dir / "grouping.csv");
}

inline void write_summary(const fs::path& dir, const SweepResult& r) {
  CsvWriter cal({"power_mW", "g2bar_center", "stderr"});
  for (std::size_t i = 0; i < r.calibration.power_mW.size(); ++i)
    cal.row({r.calibration.power_mW[i], r.calibration.g2_center[i], r.calibration.std_error[i]});
  cal.save(dir / "calibration.csv");

  CsvWriter curves({"power_mW", "power_over_threshold", "gain_parameter", "leading_triplet_gain", "g2bar_center",
                    "stderr", "M_center", "ac_fwhm_omega_nm", "ac_fwhm_k_mrad", "xc_contrast"});
  CsvWriter traj({"power_mW", "power_over_threshold", "maxima_count", "maximum_index", "k_over_k0"});
  for (const auto& p : r.points) {
    curves.row({p.power_mW, p.power_rel, p.gain_parameter, p.leading_gain, p.center.value, p.center.std_error,
                p.center.value > 0 ? 1.0 / p.center.value : NAN, p.ac_fwhm_omega_nm, p.ac_fwhm_k_mrad, p.xc.contrast});
    for (std::size_t i = 0; i < p.maxima.size(); ++i)
      traj.row({p.power_mW, p.power_rel, static_cast<double>(p.maxima.size()), static_cast<double>(i), p.maxima[i]});
  }
  curves.save(dir / "coherence_vs_power.csv");
  traj.save(dir / "trajectory.csv");
}

}  // namespace detail

using SweepCallback = std::function<void(const SweepPoint&, const FrameStack&)>;

/// Calibrates (unless powers are given), simulates and analyses every power
/// with the master seed of `cfg`, writing into `out`. On failure the partial
/// outputs stay on disk and the manifest is marked incomplete.
inline SweepResult run_sweep(const RunConfig& cfg, const SweepOptions& opt, const fs::path& out,
                             const SweepCallback& on_point = {}) {
  detail::ensure_dir(out);
  RunManifest manifest;
  manifest.command = "sweep";
  manifest.config = to_json(cfg);
  manifest.seed = cfg.seed;
  SweepResult result;
  try {
    detail::write_text(out / "config.effective.toml", config_to_toml(cfg));
    std::vector<double> powers = opt.powers_mW;
    if (powers.empty()) {
      result.calibration = calibrate_threshold(cfg, opt.calibration_shots);
      powers = sweep_powers(result.calibration.threshold_mW, opt.points, opt.lo, opt.hi);
    }
    const double pth = result.calibration.threshold_mW;
    std::size_t idx = 0;
    for (double p : powers) {
      const auto t0 = std::chrono::steady_clock::now();
      const auto stack = run_ensemble(detail::at_power(cfg, p, cfg.shots));
      auto pt = analyze_point(stack, p, pth, opt.populated_fraction);
      pt.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      char name[16];
      std::snprintf(name, sizeof name, "p%02zu", idx++);
      detail::write_point_outputs(out / name, stack, pt);
      if (opt.keep_frames) write_frames(out / name / "frames", stack);
      if (on_point) on_point(pt, stack);
      result.points.push_back(std::move(pt));
      detail::write_summary(out, result);
    }
    detail::write_summary(out, result);
    // Radial g2 profile per power as one heatmap; NaN outside each point's window.
    std::vector<double> heat;
    std::size_t width = 0;
    for (const auto& p : result.points) width = std::max(width, p.profile_end);
    if (!result.points.empty() && width > 0) {
      for (const auto& p : result.points)
        for (std::size_t r = 0; r < width; ++r)
          heat.push_back(r >= p.profile_begin && r < p.profile_end ? p.profile.g2[r - p.profile_begin] : NAN);
      emit_heatmap(out / "radial_profiles.pgm", heat, width, result.points.size(),
                   {{"rows", "sweep point"}, {"cols", "radial pixel"}});
    }
  } catch (const std::exception& e) {
    manifest.complete = false;
    manifest.failure = e.what();
    manifest.write(out);
    throw;
  }
  manifest.write(out);
  return result;
}

}  // namespace twinwave
