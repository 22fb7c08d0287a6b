#pragma once

// Classical three-wave mixing of one pump/signal/idler mode triplet:
//   da_s/dz = K a_p conj(a_i),  da_i/dz = K a_p conj(a_s),  da_p/dz = -K a_s a_i
// integrated with fixed-step classical RK4.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace twinwave {

using cplx = std::complex<double>;

/// Non-finite amplitudes or a violated step-size bound during integration.
class numeric_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TripletState {
  cplx pump;
  cplx signal;
  cplx idler;

  double pump_photons() const { return std::norm(pump); }
  double signal_photons() const { return std::norm(signal); }
  double idler_photons() const { return std::norm(idler); }
  bool finite() const {
    return std::isfinite(pump.real()) && std::isfinite(pump.imag()) && std::isfinite(signal.real()) &&
           std::isfinite(signal.imag()) && std::isfinite(idler.real()) && std::isfinite(idler.imag());
  }
};

/// Manley-Rowe constants (N_p + N_s, N_p + N_i, N_s - N_i).
struct ManleyRowe {
  double pump_signal;
  double pump_idler;
  double signal_idler;
};

inline ManleyRowe manley_rowe(const TripletState& s) {
  return {s.pump_photons() + s.signal_photons(), s.pump_photons() + s.idler_photons(),
          s.signal_photons() - s.idler_photons()};
}

/// Upper bound on every amplitude modulus along the exact trajectory.
inline double amplitude_bound(const TripletState& s) {
  const auto mr = manley_rowe(s);
  return std::sqrt(std::max(mr.pump_signal, mr.pump_idler));
}

inline TripletState derivative(const TripletState& s, double K) {
  return {-K * s.signal * s.idler, K * s.pump * std::conj(s.idler), K * s.pump * std::conj(s.signal)};
}

struct TrajectorySample {
  double z;
  TripletState state;
};

using Trajectory = std::vector<TrajectorySample>;

/// Largest K * max|a| * dz the integrator accepts.
inline constexpr double max_step_phase = 1e-2;

/// Number of equal steps over [0, z_end] that keeps K*max|a|*dz within
/// max_step_phase, and at least `min_steps`.
inline std::size_t required_steps(const TripletState& s, double K, double z_end, std::size_t min_steps) {
  const double need = std::ceil(K * amplitude_bound(s) * z_end / max_step_phase * (1.0 + 1e-12));
  if (!std::isfinite(need)) throw numeric_error("required_steps: non-finite step estimate");
  return std::max<std::size_t>(min_steps, static_cast<std::size_t>(need));
}

namespace detail {

// Structure-of-arrays RK4 over `Lanes` independent triplets. Scalar and
// batched integration share this kernel, so both give identical bits.
template <std::size_t Lanes>
struct TripletLanes {
  std::array<double, Lanes> pr{}, pi{}, sr{}, si{}, ir{}, ii{};
};

// One stage of RK4 for all lanes: k = f(arg), acc += w*k (acc = k when
// w == 0), next = x + a*k. Deplete = false freezes the pump.
template <bool Deplete, std::size_t Lanes>
inline void rk4_stage(const TripletLanes<Lanes>& x, const TripletLanes<Lanes>& arg, const std::array<double, Lanes>& K,
                      const std::array<double, Lanes>& a, double w, TripletLanes<Lanes>& acc,
                      TripletLanes<Lanes>& next) {
  for (std::size_t j = 0; j < Lanes; ++j) {
    const double kpr = Deplete ? -K[j] * (arg.sr[j] * arg.ir[j] - arg.si[j] * arg.ii[j]) : 0.0;
    const double kpi = Deplete ? -K[j] * (arg.sr[j] * arg.ii[j] + arg.si[j] * arg.ir[j]) : 0.0;
    const double ksr = K[j] * (arg.pr[j] * arg.ir[j] + arg.pi[j] * arg.ii[j]);
    const double ksi = K[j] * (arg.pi[j] * arg.ir[j] - arg.pr[j] * arg.ii[j]);
    const double kir = K[j] * (arg.pr[j] * arg.sr[j] + arg.pi[j] * arg.si[j]);
    const double kii = K[j] * (arg.pi[j] * arg.sr[j] - arg.pr[j] * arg.si[j]);
    if (w == 0.0) {
      acc.pr[j] = kpr; acc.pi[j] = kpi; acc.sr[j] = ksr; acc.si[j] = ksi; acc.ir[j] = kir; acc.ii[j] = kii;
    } else {
      acc.pr[j] = acc.pr[j] + w * kpr; acc.pi[j] = acc.pi[j] + w * kpi;
      acc.sr[j] = acc.sr[j] + w * ksr; acc.si[j] = acc.si[j] + w * ksi;
      acc.ir[j] = acc.ir[j] + w * kir; acc.ii[j] = acc.ii[j] + w * kii;
    }
    next.pr[j] = x.pr[j] + a[j] * kpr; next.pi[j] = x.pi[j] + a[j] * kpi;
    next.sr[j] = x.sr[j] + a[j] * ksr; next.si[j] = x.si[j] + a[j] * ksi;
    next.ir[j] = x.ir[j] + a[j] * kir; next.ii[j] = x.ii[j] + a[j] * kii;
  }
}

template <std::size_t Lanes, bool Deplete = true>
inline void rk4_step(TripletLanes<Lanes>& x, const std::array<double, Lanes>& K, const std::array<double, Lanes>& h) {
  TripletLanes<Lanes> acc, t1, t2, t3;
  std::array<double, Lanes> half{}, sixth{};
  for (std::size_t j = 0; j < Lanes; ++j) {
    half[j] = 0.5 * h[j];
    sixth[j] = h[j] / 6.0;
  }
  rk4_stage<Deplete>(x, x, K, half, 0.0, acc, t1);   // k1
  rk4_stage<Deplete>(x, t1, K, half, 2.0, acc, t2);  // k2
  rk4_stage<Deplete>(x, t2, K, h, 2.0, acc, t3);     // k3
  // k4 and the update: x += h/6 * (k1 + 2 k2 + 2 k3 + k4)
  rk4_stage<Deplete>(x, t3, K, sixth, 1.0, acc, t1);
  for (std::size_t j = 0; j < Lanes; ++j) {
    x.pr[j] = x.pr[j] + sixth[j] * acc.pr[j];
    x.pi[j] = x.pi[j] + sixth[j] * acc.pi[j];
    x.sr[j] = x.sr[j] + sixth[j] * acc.sr[j];
    x.si[j] = x.si[j] + sixth[j] * acc.si[j];
    x.ir[j] = x.ir[j] + sixth[j] * acc.ir[j];
    x.ii[j] = x.ii[j] + sixth[j] * acc.ii[j];
  }
}

template <std::size_t Lanes>
inline void load(TripletLanes<Lanes>& x, std::size_t j, const TripletState& s) {
  x.pr[j] = s.pump.real();
  x.pi[j] = s.pump.imag();
  x.sr[j] = s.signal.real();
  x.si[j] = s.signal.imag();
  x.ir[j] = s.idler.real();
  x.ii[j] = s.idler.imag();
}

template <std::size_t Lanes>
inline TripletState store(const TripletLanes<Lanes>& x, std::size_t j) {
  return {{x.pr[j], x.pi[j]}, {x.sr[j], x.si[j]}, {x.ir[j], x.ii[j]}};
}

inline void check_step(const TripletState& s0, double K, double dz) {
  if (!s0.finite()) throw numeric_error("integrate: non-finite initial state");
  if (K * amplitude_bound(s0) * dz > max_step_phase * (1.0 + 1e-9))
    throw numeric_error("integrate: step too large (K*max|a|*dz = " + std::to_string(K * amplitude_bound(s0) * dz) +
                        " > 1e-2)");
}

}  // namespace detail

/// RK4 from z = 0 to z_end in n = ceil(z_end/dz) equal steps of z_end/n,
/// returning every step. Throws numeric_error when K*max|a|*dz > 1e-2
/// (max|a| from the Manley-Rowe bound) or when the state stops being finite.
/// deplete_pump = false holds a_p fixed (linearized reference dynamics).
inline Trajectory integrate(const TripletState& state0, double K, double z_end, double dz, bool deplete_pump = true) {
  if (!(z_end > 0)) throw std::invalid_argument("integrate: z_end must be positive");
  if (!(dz > 0)) throw std::invalid_argument("integrate: dz must be positive");
  if (!(K >= 0)) throw std::invalid_argument("integrate: coupling must be non-negative");
  const auto n = static_cast<std::size_t>(std::ceil(z_end / dz * (1.0 - 1e-12)));
  const double h = z_end / static_cast<double>(n);
  detail::check_step(state0, K, h);

  detail::TripletLanes<1> x;
  detail::load(x, 0, state0);
  const std::array<double, 1> Ks{K}, hs{h};
  Trajectory out;
  out.reserve(n + 1);
  out.push_back({0.0, state0});
  for (std::size_t step = 1; step <= n; ++step) {
    if (deplete_pump)
      detail::rk4_step<1, true>(x, Ks, hs);
    else
      detail::rk4_step<1, false>(x, Ks, hs);
    const auto s = detail::store(x, 0);
    if (!s.finite()) throw numeric_error("integrate: non-finite state at z = " + std::to_string(step * h));
    out.push_back({step == n ? z_end : static_cast<double>(step) * h, s});
  }
  return out;
}

/// Final state only; same arithmetic as integrate() with n steps.
inline TripletState propagate(const TripletState& state0, double K, double z_end, std::size_t n) {
  if (n == 0) throw std::invalid_argument("propagate: need at least one step");
  const double h = z_end / static_cast<double>(n);
  detail::check_step(state0, K, h);
  detail::TripletLanes<1> x;
  detail::load(x, 0, state0);
  const std::array<double, 1> Ks{K}, hs{h};
  for (std::size_t step = 0; step < n; ++step) detail::rk4_step(x, Ks, hs);
  auto s = detail::store(x, 0);
  if (!s.finite()) throw numeric_error("propagate: non-finite final state");
  return s;
}

/// Propagates many triplets to z_end, eight at a time. Triplet t takes
/// steps[t] equal steps; lanes of a batch advance together, so every lane
/// runs the batch maximum and uses its own step length z_end/n.
inline void propagate_many(std::vector<TripletState>& states, const std::vector<double>& K, double z_end,
                           const std::vector<std::size_t>& steps) {
  constexpr std::size_t B = 8;
  if (K.size() != states.size() || steps.size() != states.size())
    throw std::invalid_argument("propagate_many: size mismatch");
  for (std::size_t base = 0; base < states.size(); base += B) {
    const std::size_t lanes = std::min(B, states.size() - base);
    std::size_t n = 1;
    for (std::size_t j = 0; j < lanes; ++j) n = std::max(n, steps[base + j]);
    detail::TripletLanes<B> x;
    std::array<double, B> Ks{}, hs{};
    for (std::size_t j = 0; j < lanes; ++j) {
      detail::load(x, j, states[base + j]);
      Ks[j] = K[base + j];
      hs[j] = z_end / static_cast<double>(n);
      detail::check_step(states[base + j], Ks[j], hs[j]);
    }
    for (std::size_t step = 0; step < n; ++step) detail::rk4_step(x, Ks, hs);
    for (std::size_t j = 0; j < lanes; ++j) {
      states[base + j] = detail::store(x, j);
      if (!states[base + j].finite()) throw numeric_error("propagate_many: non-finite final state");
    }
  }
}

/// sinh^2(K * a_p * z): mean signal photon number above the vacuum offset
/// for a vacuum-seeded triplet under a frozen pump.
inline double linearized_gain_mean(double K, double pump_amp, double z) {
  if (!(z >= 0)) throw std::invalid_argument("linearized_gain_mean: z must be non-negative");
  const double s = std::sinh(K * pump_amp * z);
  return s * s;
}

/// Frozen-pump (undepleted) evolution, exact: used as a reference only.
inline TripletState frozen_pump_solution(const TripletState& s0, double K, double z) {
  const double r = std::abs(s0.pump);
  const cplx phase = r > 0 ? s0.pump / r : cplx{1.0, 0.0};
  const double g = K * r * z;
  const double c = std::cosh(g), sh = std::sinh(g);
  return {s0.pump, s0.signal * c + phase * std::conj(s0.idler) * sh, s0.idler * c + phase * std::conj(s0.signal) * sh};
}

}  // namespace twinwave
