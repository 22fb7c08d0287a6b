#pragma once

// Monte Carlo over shots: vacuum-seed every triplet, propagate it through the
// crystal and paint the far-field signal and idler strips.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "twinwave/dynamics.hpp"
#include "twinwave/model.hpp"
#include "twinwave/rng.hpp"
#include "twinwave/run_config.hpp"
#include "twinwave/serialize.hpp"

namespace twinwave {

enum class Strip { signal = 0, idler = 1 };

/// Shot-resolved intensity frames. Layout: shot-major; within a shot the
/// signal strip then the idler strip; each strip row-major with rows along
/// the radial axis and columns along wavelength.
struct FrameStack {
  DetectorGeometry geometry;
  std::size_t shots = 0;
  std::vector<float> data;
  nlohmann::json metadata;

  std::size_t rows() const { return geometry.rows(); }
  std::size_t cols() const { return geometry.cols(); }
  std::size_t strip_size() const { return geometry.strip_pixels(); }
  std::size_t shot_size() const { return 2 * strip_size(); }

  void allocate(std::size_t n_shots) {
    shots = n_shots;
    data.assign(shots * shot_size(), 0.0f);
  }
  std::size_t offset(std::size_t shot, Strip s) const {
    return shot * shot_size() + static_cast<std::size_t>(s) * strip_size();
  }
  std::span<const float> strip(std::size_t shot, Strip s) const { return {data.data() + offset(shot, s), strip_size()}; }
  std::span<float> strip(std::size_t shot, Strip s) { return {data.data() + offset(shot, s), strip_size()}; }
  float at(std::size_t shot, Strip s, std::size_t row, std::size_t col) const {
    return data[offset(shot, s) + row * cols() + col];
  }
  /// Dark level to subtract before estimating statistics (0 for noise-free frames).
  double dark_level() const { return metadata.value("/noise/dark_level"_json_pointer, 0.0); }
};

/// Output amplitudes of one shot, flat mode order.
struct ShotOutput {
  std::vector<cplx> signal;
  std::vector<cplx> idler;
};

inline std::vector<double> partition_weights(const CouplingSchedule& sched, const ModeBounds& bounds, PumpPartition p) {
  if (p == PumpPartition::uniform) return std::vector<double>(bounds.size(), 1.0 / static_cast<double>(bounds.size()));
  return pump_weights(sched, bounds);
}

/// Vacuum-seeded initial state: signal and idler circular complex Gaussians
/// with E|a|^2 = 1/2; pump amplitude sqrt(N_p * weight), real positive.
inline TripletState seed_triplet(RandomStream& stream, double pump_photons, double weight) {
  constexpr double sd = 0.5;  // per quadrature: variance 1/4
  const auto [sr, si] = stream.normal_pair();
  const auto [ir, ii] = stream.normal_pair();
  return {{std::sqrt(pump_photons * weight), 0.0}, {sd * sr, sd * si}, {sd * ir, sd * ii}};
}

/// Immutable per-run tables shared by all shots.
class Simulator {
 public:
  explicit Simulator(RunConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    const auto& m = cfg_.model;
    const auto& b = m.modes;
    n_modes_ = b.size();
    weights_ = partition_weights(m.coupling, b, cfg_.partition);
    coupling_.resize(n_modes_);
    for (std::size_t i = 0; i < n_modes_; ++i) coupling_[i] = coupling(b.unflat(i), m.coupling, b);
    pump_photons_ = photons_per_pulse(m.pump);
    length_ = m.pump.crystal_length_mm;

    rows_ = m.detector.rows();
    cols_ = m.detector.cols();
    radial_ = m.basis.radial(m.detector, b.l_max);
    spectral_ = m.basis.spectral(m.detector, b.q_max);
    const auto phi = m.detector.arc_angles();
    arc_ = phi.size();
    phase_re_.assign(b.m_count() * arc_, 0.0);
    phase_im_.assign(b.m_count() * arc_, 0.0);
    for (std::size_t mi = 0; mi < b.m_count(); ++mi) {
      const int order = static_cast<int>(mi) - b.m_max;
      for (std::size_t s = 0; s < arc_; ++s) {
        phase_re_[mi * arc_ + s] = std::cos(order * phi[s]);
        phase_im_[mi * arc_ + s] = std::sin(order * phi[s]);
      }
    }
  }

  const RunConfig& config() const { return cfg_; }
  std::size_t mode_count() const { return n_modes_; }
  const std::vector<double>& weights() const { return weights_; }
  const std::vector<double>& couplings() const { return coupling_; }
  double pump_photons() const { return pump_photons_; }

  TripletState seed(std::size_t shot, std::size_t mode) const {
    RandomStream stream(cfg_.seed, shot, mode);
    return seed_triplet(stream, pump_photons_, weights_[mode]);
  }

  /// Seeds and propagates every triplet of one shot over [0, L].
  ShotOutput simulate_shot(std::size_t shot) const {
    if (shot >= cfg_.shots) throw std::out_of_range("simulate_shot: shot index beyond configured shot count");
    std::vector<TripletState> states(n_modes_);
    std::vector<std::size_t> steps(n_modes_);
    for (std::size_t i = 0; i < n_modes_; ++i) {
      states[i] = seed(shot, i);
      steps[i] = required_steps(states[i], coupling_[i], length_, cfg_.z_steps);
    }
    propagate_many(states, coupling_, length_, steps);
    ShotOutput out;
    out.signal.resize(n_modes_);
    out.idler.resize(n_modes_);
    for (std::size_t i = 0; i < n_modes_; ++i) {
      out.signal[i] = states[i].signal;
      out.idler[i] = states[i].idler;
    }
    return out;
  }

  /// Intensity of the field sum_{mlq} a_mlq u_l(k) v_q(w) e^{i m phi},
  /// summed over the arc samples and scaled by the pixel area.
  /// Row-major rows x cols into `strip`.
  void paint(std::span<const cplx> amps, std::span<float> strip, bool mirrored) const {
    const auto& b = cfg_.model.modes;
    if (amps.size() != n_modes_) throw std::invalid_argument("synthesize: amplitudes do not cover the configured modes");
    if (strip.size() != rows_ * cols_) throw std::invalid_argument("synthesize: strip size does not match geometry");
    const std::size_t M = b.m_count(), Lc = b.l_count(), Q = b.q_count(), A = arc_;

    // Azimuthal sum: B[q][l][s]
    std::vector<double> br(Q * Lc * A, 0.0), bi(Q * Lc * A, 0.0);
    for (std::size_t ql = 0; ql < Q * Lc; ++ql) {
      double* pr = &br[ql * A];
      double* pi = &bi[ql * A];
      for (std::size_t mi = 0; mi < M; ++mi) {
        const cplx a = amps[ql * M + mi];
        const double* cr = &phase_re_[mi * A];
        const double* ci = &phase_im_[mi * A];
        for (std::size_t s = 0; s < A; ++s) {
          pr[s] += a.real() * cr[s] - a.imag() * ci[s];
          pi[s] += a.real() * ci[s] + a.imag() * cr[s];
        }
      }
    }
    // Radial sum: C[r][q][s]
    std::vector<double> cr(rows_ * Q * A, 0.0), ci(rows_ * Q * A, 0.0);
    for (std::size_t r = 0; r < rows_; ++r)
      for (std::size_t q = 0; q < Q; ++q) {
        double* outr = &cr[(r * Q + q) * A];
        double* outi = &ci[(r * Q + q) * A];
        for (std::size_t l = 0; l < Lc; ++l) {
          const double u = radial_[l][r];
          const double* inr = &br[(q * Lc + l) * A];
          const double* ini = &bi[(q * Lc + l) * A];
          for (std::size_t s = 0; s < A; ++s) {
            outr[s] += u * inr[s];
            outi[s] += u * ini[s];
          }
        }
      }
    // Spectral sum and arc-integrated intensity.
    const double area = cfg_.model.detector.pixel_area();
    std::vector<double> fr(A), fi(A);
    for (std::size_t r = 0; r < rows_; ++r)
      for (std::size_t c = 0; c < cols_; ++c) {
        std::fill(fr.begin(), fr.end(), 0.0);
        std::fill(fi.begin(), fi.end(), 0.0);
        for (std::size_t q = 0; q < Q; ++q) {
          const double v = spectral_[q][c];
          const double* inr = &cr[(r * Q + q) * A];
          const double* ini = &ci[(r * Q + q) * A];
          for (std::size_t s = 0; s < A; ++s) {
            fr[s] += v * inr[s];
            fi[s] += v * ini[s];
          }
        }
        double sum = 0.0;
        for (std::size_t s = 0; s < A; ++s) sum += fr[s] * fr[s] + fi[s] * fi[s];
        const std::size_t rr = mirrored ? rows_ - 1 - r : r;
        const std::size_t cc = mirrored ? cols_ - 1 - c : c;
        strip[rr * cols_ + cc] = static_cast<float>(sum * area);
      }
  }

  /// Signal strip from the signal amplitudes; idler strip from the idler
  /// amplitudes placed at mirrored wavelength and radial coordinates.
  void synthesize(const ShotOutput& out, std::span<float> signal_strip, std::span<float> idler_strip) const {
    paint(out.signal, signal_strip, false);
    paint(out.idler, idler_strip, true);
  }

  void apply_noise(std::size_t shot, std::span<float> strip, Strip which) const {
    const auto& n = cfg_.noise;
    if (!n.enabled()) return;
    // Mode ids past the triplet range keep the noise stream disjoint from seeds.
    RandomStream stream(cfg_.seed, shot, (1ULL << 62) + static_cast<std::uint64_t>(which));
    for (std::size_t i = 0; i < strip.size(); i += 2) {
      const auto [g0, g1] = stream.normal_pair();
      strip[i] = static_cast<float>(std::max(0.0, n.gain * strip[i] + n.dark_level + n.read_noise * g0));
      if (i + 1 < strip.size())
        strip[i + 1] = static_cast<float>(std::max(0.0, n.gain * strip[i + 1] + n.dark_level + n.read_noise * g1));
    }
  }

  /// Everything for one shot, written into the stack's pre-allocated slot.
  void render_shot(std::size_t shot, FrameStack& stack) const {
    const auto out = simulate_shot(shot);
    auto s = stack.strip(shot, Strip::signal);
    auto i = stack.strip(shot, Strip::idler);
    synthesize(out, s, i);
    apply_noise(shot, s, Strip::signal);
    apply_noise(shot, i, Strip::idler);
    for (float v : s)
      if (!(v >= 0) || !std::isfinite(v)) throw numeric_error("non-finite or negative signal intensity");
    for (float v : i)
      if (!(v >= 0) || !std::isfinite(v)) throw numeric_error("non-finite or negative idler intensity");
  }

  nlohmann::json metadata() const {
    return {{"config", to_json(cfg_)},
            {"geometry", to_json(cfg_.model.detector)},
            {"seed", cfg_.seed},
            {"shots", cfg_.shots},
            {"rng_algorithm", rng_algorithm},
            {"integrator", "rk4 fixed step, K*max|a|*dz <= 1e-2"},
            {"downsample", {{"wavelength", cfg_.model.detector.wavelength.downsample},
                            {"radial", cfg_.model.detector.radial.downsample}}},
            {"layout", "float32 little-endian, shot-major, [signal strip, idler strip], row-major rows=radial cols=wavelength"},
            {"strip_offsets", {{"signal", 0}, {"idler", rows_ * cols_}}},
            {"pump_partition", to_string(cfg_.partition)},
            {"pump_photons", pump_photons_},
            {"gain_parameter", gain_parameter(cfg_.model.pump, cfg_.model.coupling)},
            {"leading_triplet_gain", gain_parameter(cfg_.model.pump, cfg_.model.coupling) *
                                         std::sqrt(weights_[cfg_.model.modes.flat({0, 0, 0})])},
            {"noise", {{"gain", cfg_.noise.gain}, {"dark_level", cfg_.noise.dark_level}, {"read_noise", cfg_.noise.read_noise}}}};
  }

 private:
  RunConfig cfg_;
  std::size_t n_modes_ = 0;
  std::vector<double> weights_;
  std::vector<double> coupling_;
  double pump_photons_ = 0;
  double length_ = 0;
  std::size_t rows_ = 0, cols_ = 0, arc_ = 0;
  std::vector<std::vector<double>> radial_, spectral_;
  std::vector<double> phase_re_, phase_im_;
};

inline std::size_t resolve_workers(std::size_t requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

/// Runs fn(shot) for every shot on `workers` threads. Shots are claimed from
/// a shared counter; the first failure stops the run and is rethrown with
/// its shot index.
template <class Fn>
void for_each_shot(std::size_t shots, std::size_t workers, Fn&& fn) {
  workers = std::max<std::size_t>(1, std::min(workers, shots));
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::size_t error_shot = 0;
  std::mutex mu;
  auto body = [&] {
    for (;;) {
      if (failed.load()) return;
      const std::size_t shot = next.fetch_add(1);
      if (shot >= shots) return;
      try {
        fn(shot);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!error || shot < error_shot) {
          error = std::current_exception();
          error_shot = shot;
        }
        failed.store(true);
        return;
      }
    }
  };
  if (workers == 1) {
    body();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(body);
  }
  if (error) {
    try {
      std::rethrow_exception(error);
    } catch (const std::exception& e) {
      throw numeric_error("shot " + std::to_string(error_shot) + ": " + e.what());
    }
  }
}

/// All shots of a run. Output bits depend on the configuration only, never
/// on the worker count.
inline FrameStack run_ensemble(const RunConfig& cfg) {
  const Simulator sim(cfg);
  FrameStack stack;
  stack.geometry = cfg.model.detector;
  stack.allocate(cfg.shots);
  stack.metadata = sim.metadata();
  for_each_shot(cfg.shots, resolve_workers(cfg.workers), [&](std::size_t shot) { sim.render_shot(shot, stack); });
  return stack;
}

}  // namespace twinwave
