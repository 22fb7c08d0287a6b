#pragma once

// Synthetic frame stacks with known statistics, for validating the
// estimators: M-mode thermal cells, Gaussian-kernel speckle and white noise.
// The idler strip is always the coordinate-mirrored signal strip.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "twinwave/ensemble.hpp"
#include "twinwave/rng.hpp"

namespace twinwave {

enum class SynthKind { thermal, gaussian_field, white_noise };

inline std::string to_string(SynthKind k) {
  switch (k) {
    case SynthKind::thermal: return "thermal";
    case SynthKind::gaussian_field: return "gaussian";
    case SynthKind::white_noise: return "white";
  }
  return "?";
}

inline SynthKind parse_synth_kind(const std::string& s) {
  if (s == "thermal") return SynthKind::thermal;
  if (s == "gaussian") return SynthKind::gaussian_field;
  if (s == "white") return SynthKind::white_noise;
  throw std::invalid_argument("unknown synthetic kind '" + s + "' (expected thermal, gaussian or white)");
}

struct SyntheticSpec {
  SynthKind kind = SynthKind::thermal;
  int modes = 1;             // thermal: equally populated modes per pixel
  double sigma_nm = 0.5;     // gaussian: intensity-correlation sigma along wavelength
  double sigma_mrad = 1.0;   // gaussian: intensity-correlation sigma along radial
  std::size_t shots = 1000;
  DetectorGeometry geometry;

  void validate() const {
    geometry.validate();
    if (modes < 1) throw std::invalid_argument("synthetic modes must be at least 1");
    if (!(sigma_nm > 0) || !(sigma_mrad > 0)) throw std::invalid_argument("synthetic kernel sigma must be positive");
    if (shots < 2) throw std::invalid_argument("synthetic stack needs at least 2 shots");
  }
};

namespace detail {

// Normalised kernel exp(-x^2 / (2 s^2)), truncated at 5 s. Filtering complex
// white noise with it gives a field correlation exp(-d^2 / (4 s^2)) and hence
// an intensity correlation |.|^2 = exp(-d^2 / (2 s^2)): a Gaussian of sigma s.
inline std::vector<double> gaussian_kernel(double sigma_px) {
  const auto half = static_cast<long>(std::ceil(5.0 * sigma_px));
  std::vector<double> k(static_cast<std::size_t>(2 * half + 1));
  double norm = 0.0;
  for (long i = -half; i <= half; ++i) {
    const double v = std::exp(-0.5 * (i / sigma_px) * (i / sigma_px));
    k[static_cast<std::size_t>(i + half)] = v;
    norm += v * v;
  }
  for (double& v : k) v /= std::sqrt(norm);  // unit-variance output field
  return k;
}

// One shot of |kernel * white noise|^2 over rows x cols, generated on a
// margin-padded grid so the field is stationary up to the strip edges.
inline void gaussian_field_shot(RandomStream& rng, std::size_t rows, std::size_t cols, const std::vector<double>& kr,
                                const std::vector<double>& kc, std::span<float> out) {
  const std::size_t hr = kr.size() / 2, hc = kc.size() / 2;
  const std::size_t R = rows + 2 * hr, C = cols + 2 * hc;
  std::vector<double> re(R * C), im(R * C);
  for (std::size_t i = 0; i < R * C; ++i) {
    const auto [a, b] = rng.normal_pair();
    re[i] = a * std::sqrt(0.5);
    im[i] = b * std::sqrt(0.5);
  }
  // Columns first (over padded rows), then rows.
  std::vector<double> tr(R * cols), ti(R * cols);
  for (std::size_t r = 0; r < R; ++r)
    for (std::size_t c = 0; c < cols; ++c) {
      double sr = 0.0, si = 0.0;
      for (std::size_t j = 0; j < kc.size(); ++j) {
        sr += kc[j] * re[r * C + c + j];
        si += kc[j] * im[r * C + c + j];
      }
      tr[r * cols + c] = sr;
      ti[r * cols + c] = si;
    }
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) {
      double sr = 0.0, si = 0.0;
      for (std::size_t j = 0; j < kr.size(); ++j) {
        sr += kr[j] * tr[(r + j) * cols + c];
        si += kr[j] * ti[(r + j) * cols + c];
      }
      out[r * cols + c] = static_cast<float>(sr * sr + si * si);
    }
}

}  // namespace detail

/// Stack with known statistics. thermal: each pixel is a sum of M iid
/// exponentials of mean 1/M (g2bar = 1/M); gaussian: squared modulus of
/// kernel-filtered complex white noise (intensity AC FWHM = 2 sqrt(2 ln 2)
/// sigma); white: iid uniform [0, 2) intensities.
inline FrameStack synth_thermal(const SyntheticSpec& spec, std::uint64_t seed) {
  spec.validate();
  FrameStack stack;
  stack.geometry = spec.geometry;
  stack.allocate(spec.shots);
  const std::size_t rows = stack.rows(), cols = stack.cols();
  const auto kr = detail::gaussian_kernel(spec.sigma_mrad / spec.geometry.radial.pitch());
  const auto kc = detail::gaussian_kernel(spec.sigma_nm / spec.geometry.wavelength.pitch());
  const double mean = 1.0 / spec.modes;

  for (std::size_t shot = 0; shot < spec.shots; ++shot) {
    RandomStream rng(seed, shot, 0);
    auto sig = stack.strip(shot, Strip::signal);
    switch (spec.kind) {
      case SynthKind::thermal:
        for (auto& v : sig) {
          double w = 0.0;
          for (int m = 0; m < spec.modes; ++m) w += rng.exponential(mean);
          v = static_cast<float>(w);
        }
        break;
      case SynthKind::white_noise:
        for (auto& v : sig) v = static_cast<float>(2.0 * rng.uniform());
        break;
      case SynthKind::gaussian_field:
        detail::gaussian_field_shot(rng, rows, cols, kr, kc, sig);
        break;
    }
    auto idl = stack.strip(shot, Strip::idler);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c) idl[(rows - 1 - r) * cols + (cols - 1 - c)] = sig[r * cols + c];
  }
  stack.metadata = {{"synthetic",
                     {{"kind", to_string(spec.kind)},
                      {"modes", spec.modes},
                      {"sigma_nm", spec.sigma_nm},
                      {"sigma_mrad", spec.sigma_mrad}}},
                    {"seed", seed},
                    {"shots", spec.shots},
                    {"rng_algorithm", rng_algorithm},
                    {"geometry", to_json(spec.geometry)},
                    {"layout", "float32 little-endian, shot-major, [signal strip, idler strip], row-major rows=radial cols=wavelength"},
                    {"strip_offsets", {{"signal", 0}, {"idler", rows * cols}}},
                    {"idler", "coordinate-mirrored copy of the signal strip"}};
  return stack;
}

}  // namespace twinwave
