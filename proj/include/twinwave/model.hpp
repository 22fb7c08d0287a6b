#pragma once

// Mode indexing, coupling constants, pump parameterization, detector
// geometry and the harmonic-oscillator mode profiles the far field is built
// from. Everything here is an immutable value once constructed.

#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace twinwave {

struct ModeIndex {
  int m = 0;  // azimuthal order, signed
  int l = 0;  // radial order
  int q = 0;  // spectral order

  friend bool operator==(const ModeIndex&, const ModeIndex&) = default;
};

/// Truncation of the triplet set: m in [-m_max, m_max], l in [0, l_max],
/// q in [0, q_max].
struct ModeBounds {
  int m_max = 6;
  int l_max = 11;
  int q_max = 11;

  void validate() const {
    if (m_max < 0) throw std::invalid_argument("modes.m_max must be non-negative");
    if (l_max < 0) throw std::invalid_argument("modes.l_max must be non-negative");
    if (q_max < 0) throw std::invalid_argument("modes.q_max must be non-negative");
  }
  bool contains(const ModeIndex& idx) const {
    return idx.l >= 0 && idx.q >= 0 && std::abs(idx.m) <= m_max && idx.l <= l_max && idx.q <= q_max;
  }
  std::size_t m_count() const { return static_cast<std::size_t>(2 * m_max + 1); }
  std::size_t l_count() const { return static_cast<std::size_t>(l_max + 1); }
  std::size_t q_count() const { return static_cast<std::size_t>(q_max + 1); }
  std::size_t size() const { return m_count() * l_count() * q_count(); }

  // Flat layout: q slowest, then l, then m fastest.
  std::size_t flat(const ModeIndex& idx) const {
    if (!contains(idx)) throw std::out_of_range("mode index outside configured bounds");
    return (static_cast<std::size_t>(idx.q) * l_count() + static_cast<std::size_t>(idx.l)) * m_count() +
           static_cast<std::size_t>(idx.m + m_max);
  }
  ModeIndex unflat(std::size_t i) const {
    if (i >= size()) throw std::out_of_range("flat mode index outside configured bounds");
    const auto mc = m_count();
    const auto lc = l_count();
    return {static_cast<int>(i % mc) - m_max, static_cast<int>((i / mc) % lc), static_cast<int>(i / (mc * lc))};
  }
};

/// Separable geometric coupling K(m,l,q) = K0 * km^|m| * kl^l * kq^q.
struct CouplingSchedule {
  double k0 = 3.6e-6; // gain per mm per sqrt(photon) of the (0,0,0) triplet
  double kappa_m = 0.96;
  double kappa_l = 0.95;
  double kappa_q = 0.95;

  void validate() const {
    if (!(k0 >= 0) || !std::isfinite(k0)) throw std::invalid_argument("coupling.k0 must be finite and non-negative");
    if (!(kappa_m > 0 && kappa_m < 1)) throw std::invalid_argument("coupling.kappa_m must lie in (0, 1)");
    if (!(kappa_l > 0 && kappa_l < 1)) throw std::invalid_argument("coupling.kappa_l must lie in (0, 1)");
    if (!(kappa_q > 0 && kappa_q < 1)) throw std::invalid_argument("coupling.kappa_q must lie in (0, 1)");
  }
};

inline double coupling(const ModeIndex& idx, const CouplingSchedule& sched, const ModeBounds& bounds) {
  if (!bounds.contains(idx)) throw std::out_of_range("coupling: mode index outside configured bounds");
  return sched.k0 * std::pow(sched.kappa_m, std::abs(idx.m)) * std::pow(sched.kappa_l, idx.l) *
         std::pow(sched.kappa_q, idx.q);
}

struct PumpConfig {
  double power_mW = 70.0;
  double photons_per_mW = 3.5e12;  // per pulse; 70 mW -> 2.45e14 photons
  double crystal_length_mm = 5.0;

  void validate() const {
    if (!(power_mW > 0) || !std::isfinite(power_mW)) throw std::invalid_argument("pump.power_mW must be positive");
    if (!(photons_per_mW > 0)) throw std::invalid_argument("pump.photons_per_mW must be positive");
    if (!(crystal_length_mm > 0)) throw std::invalid_argument("pump.crystal_length_mm must be positive");
  }
};

inline double photons_per_pulse(const PumpConfig& pump) {
  if (!(pump.power_mW > 0)) throw std::invalid_argument("photons_per_pulse: pump power must be positive");
  return pump.power_mW * pump.photons_per_mW;
}

/// G = K0 * L * sqrt(N_p). Evaluated as K0 * (L * sqrt(N_p)) so that
/// (L, P) and (L/2, 4P) give bit-identical results.
inline double gain_parameter(const PumpConfig& pump, const CouplingSchedule& sched) {
  pump.validate();
  return sched.k0 * (pump.crystal_length_mm * std::sqrt(photons_per_pulse(pump)));
}

/// Pump share w(m,l,q) = K^2 / sum K^2 over the truncated set, flat order.
inline std::vector<double> pump_weights(const CouplingSchedule& sched, const ModeBounds& bounds) {
  std::vector<double> w(bounds.size());
  // Ratios relative to K0 keep the weights defined when K0 = 0.
  CouplingSchedule unit = sched;
  unit.k0 = 1.0;
  double total = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double k = coupling(bounds.unflat(i), unit, bounds);
    w[i] = k * k;
    total += w[i];
  }
  for (double& x : w) x /= total;
  return w;
}

/// Gain K*a_p*L of the strongest (0,0,0) triplet: the quantity that sets
/// where the leading triplet sits between spontaneous emission and depletion.
inline double leading_triplet_gain(const PumpConfig& pump, const CouplingSchedule& sched, const ModeBounds& bounds) {
  const auto w = pump_weights(sched, bounds);
  return gain_parameter(pump, sched) * std::sqrt(w[bounds.flat({0, 0, 0})]);
}

/// Pixel axis: `count` pixels of width `pitch` centred symmetrically about
/// the axis midpoint. `pitch` is the physical pitch times the downsampling
/// factor.
struct Axis {
  double min = 0;
  double max = 0;
  double physical_pitch = 0;
  int downsample = 1;

  double pitch() const { return physical_pitch * downsample; }
  double midpoint() const { return 0.5 * (min + max); }
  std::size_t count() const {
    // Guard against 41.4 / 0.083 style quotients landing just below an integer.
    return static_cast<std::size_t>(std::floor((max - min) / pitch() + 1e-9));
  }
  double center(std::size_t i) const {
    return midpoint() + (static_cast<double>(i) - 0.5 * (static_cast<double>(count()) - 1.0)) * pitch();
  }
  std::vector<double> centers() const {
    std::vector<double> c(count());
    for (std::size_t i = 0; i < c.size(); ++i) c[i] = center(i);
    return c;
  }
  void validate(const char* name, const char* unit) const {
    const std::string key = std::string("detector.") + name;
    const std::string u = std::string("_") + unit;
    if (!(max > min)) throw std::invalid_argument(key + "_max" + u + " must exceed " + key + "_min" + u);
    if (!(physical_pitch > 0)) throw std::invalid_argument(key + "_pitch" + u + " must be positive");
    if (downsample < 1) throw std::invalid_argument(key + "_downsample must be at least 1");
    if (count() < 2) throw std::invalid_argument(key + " axis has fewer than 2 pixels");
  }
};

/// Far-field detector: wavelength (columns) by radial wave vector (rows) per
/// strip; the upper strip holds the signal, the lower one the idler.
struct DetectorGeometry {
  Axis wavelength{677.3, 718.7, 0.083, 4};  // nm
  Axis radial{0.0, 40.0, 0.16, 4};          // mrad
  double degenerate_nm = 698.0;
  double arc_half_width = std::numbers::pi;  // rad; pi covers the whole ring
  int arc_samples = 32;

  std::size_t cols() const { return wavelength.count(); }
  std::size_t rows() const { return radial.count(); }
  std::size_t strip_pixels() const { return rows() * cols(); }
  double cone_center_mrad() const { return radial.midpoint(); }
  double pixel_area() const { return wavelength.pitch() * radial.pitch(); }

  void validate() const {
    wavelength.validate("wavelength", "nm");
    radial.validate("radial", "mrad");
    if (!(degenerate_nm > wavelength.min && degenerate_nm < wavelength.max))
      throw std::invalid_argument("detector.degenerate_nm must lie inside the wavelength range");
    if (!(arc_half_width > 0 && arc_half_width <= std::numbers::pi))
      throw std::invalid_argument("detector.arc_half_width_rad must lie in (0, pi]");
    if (arc_samples < 1) throw std::invalid_argument("detector.arc_samples must be at least 1");
  }

  /// Azimuth of each arc sample. The full ring uses a periodic grid so that
  /// e^{im phi} stay orthogonal; partial arcs include both end points.
  std::vector<double> arc_angles() const {
    std::vector<double> phi(static_cast<std::size_t>(arc_samples));
    const bool ring = arc_half_width >= std::numbers::pi;
    for (int s = 0; s < arc_samples; ++s) {
      if (arc_samples == 1) {
        phi[0] = 0.0;
      } else if (ring) {
        phi[static_cast<std::size_t>(s)] = -std::numbers::pi + 2.0 * std::numbers::pi * s / arc_samples;
      } else {
        phi[static_cast<std::size_t>(s)] = -arc_half_width + 2.0 * arc_half_width * s / (arc_samples - 1);
      }
    }
    return phi;
  }
};

/// Normalized harmonic-oscillator eigenfunction of order n sampled at
/// `coords`, centred at 0 with order-0 width `width` (axis units):
///   psi_n(x/width) / sqrt(width),  int psi^2 dx = 1.
inline std::vector<double> mode_profile(int order, std::span<const double> coords, double width) {
  if (!(width > 0)) throw std::invalid_argument("mode_profile: width must be positive");
  if (order < 0) throw std::invalid_argument("mode_profile: order must be non-negative");
  std::vector<double> out(coords.size());
  const double norm0 = 1.0 / std::sqrt(std::sqrt(std::numbers::pi) * width);
  for (std::size_t i = 0; i < coords.size(); ++i) {
    const double x = coords[i] / width;
    double prev = 0.0;
    double cur = norm0 * std::exp(-0.5 * x * x);
    for (int n = 0; n < order; ++n) {
      const double next = std::sqrt(2.0 / (n + 1.0)) * x * cur - std::sqrt(n / (n + 1.0)) * prev;
      prev = cur;
      cur = next;
    }
    out[i] = cur;
  }
  return out;
}

/// Widths of the order-0 mode on each detector axis (axis units).
struct ModeProfileBasis {
  double width_nm = 2.5;
  double width_mrad = 2.5;

  void validate() const {
    if (!(width_nm > 0)) throw std::invalid_argument("modes.width_nm must be positive");
    if (!(width_mrad > 0)) throw std::invalid_argument("modes.width_mrad must be positive");
  }

  /// Rows: orders 0..max_order; columns: wavelength pixels, centred on the
  /// degenerate wavelength.
  std::vector<std::vector<double>> spectral(const DetectorGeometry& geo, int max_order) const {
    auto c = geo.wavelength.centers();
    for (double& x : c) x -= geo.degenerate_nm;
    std::vector<std::vector<double>> out;
    for (int n = 0; n <= max_order; ++n) out.push_back(mode_profile(n, c, width_nm));
    return out;
  }
  /// Rows: orders 0..max_order; columns: radial pixels, centred on the cone.
  std::vector<std::vector<double>> radial(const DetectorGeometry& geo, int max_order) const {
    auto c = geo.radial.centers();
    for (double& x : c) x -= geo.cone_center_mrad();
    std::vector<std::vector<double>> out;
    for (int n = 0; n <= max_order; ++n) out.push_back(mode_profile(n, c, width_mrad));
    return out;
  }
};

/// Everything that defines the physics of a run.
struct ModelConfig {
  PumpConfig pump;
  CouplingSchedule coupling;
  ModeBounds modes;
  DetectorGeometry detector;
  ModeProfileBasis basis;

  void validate() const {
    pump.validate();
    coupling.validate();
    modes.validate();
    detector.validate();
    basis.validate();
  }
};

}  // namespace twinwave
