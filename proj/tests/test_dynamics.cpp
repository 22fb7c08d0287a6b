#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "twinwave/dynamics.hpp"

using namespace twinwave;

namespace {

TripletState random_triplet(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> mag(0.1, 3.0), ph(-3.14159, 3.14159);
  auto c = [&] { return std::polar(mag(rng), ph(rng)); };
  return {c(), c(), c()};
}

double max_mr_drift(const Trajectory& t) {
  const auto m0 = manley_rowe(t.front().state);
  double d = 0.0;
  for (const auto& s : t) {
    const auto m = manley_rowe(s.state);
    d = std::max({d, std::fabs(m.pump_signal - m0.pump_signal) / m0.pump_signal,
                  std::fabs(m.pump_idler - m0.pump_idler) / m0.pump_idler,
                  std::fabs(m.signal_idler - m0.signal_idler) / std::max(m0.pump_signal, m0.pump_idler)});
  }
  return d;
}

}  // namespace

TEST(Triplet, ZeroCouplingIsIdentity) {
  const TripletState s{{2.0, 1.0}, {0.3, -0.2}, {0.1, 0.4}};
  const auto t = integrate(s, 0.0, 1.0, 0.01);
  EXPECT_EQ(t.back().state.pump, s.pump);
  EXPECT_EQ(t.back().state.signal, s.signal);
  EXPECT_EQ(t.back().state.idler, s.idler);
}

TEST(Triplet, ManleyRoweConserved) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 20; ++i) {
    const auto s = random_triplet(rng);
    const double K = 0.5;
    const double dz = 1e-2 / (K * amplitude_bound(s));
    const auto t = integrate(s, K, 2.0, dz);
    EXPECT_LT(max_mr_drift(t) / 2.0, 1e-9);
  }
}

TEST(Triplet, FourthOrderConvergence) {
  const TripletState s{{1.5, 0.0}, {0.4, 0.1}, {0.2, -0.3}};
  const double K = 0.5, L = 1.0;
  const auto ref = propagate(s, K, L, 6400);
  double prev = 0.0;
  for (std::size_t n : {100u, 200u, 400u}) {
    const auto x = propagate(s, K, L, n);
    const double err = std::abs(x.signal - ref.signal) + std::abs(x.idler - ref.idler) + std::abs(x.pump - ref.pump);
    if (prev > 0) {
      EXPECT_NEAR(std::log2(prev / err), 4.0, 0.3);
    }
    prev = err;
  }
}

TEST(Triplet, StepBoundEnforced) {
  const TripletState s{{10.0, 0.0}, {0.5, 0.0}, {0.5, 0.0}};
  EXPECT_THROW(integrate(s, 1.0, 1.0, 0.01), numeric_error);
  EXPECT_NO_THROW(integrate(s, 1.0, 0.01, 0.0009));
  EXPECT_THROW(integrate(s, -1.0, 1.0, 1e-4), std::invalid_argument);
}

TEST(Triplet, NonFiniteInputRejected) {
  const TripletState s{{NAN, 0.0}, {0.5, 0.0}, {0.5, 0.0}};
  EXPECT_THROW(integrate(s, 1.0, 1.0, 1e-3), numeric_error);
}

TEST(Triplet, PumpDepletesAndRevives) {
  const TripletState s{{1000.0, 0.0}, {1.0, 0.0}, {1.0, 0.0}};
  const double K = 1.0, L = 0.02;
  const auto t = integrate(s, K, L, 1e-2 / (K * amplitude_bound(s)));
  double lo = 1.0;
  std::size_t at = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double f = t[i].state.pump_photons() / s.pump_photons();
    if (f < lo) lo = f, at = i;
  }
  EXPECT_LT(lo, 0.1);
  double after = 0.0;
  for (std::size_t i = at; i < t.size(); ++i) after = std::max(after, t[i].state.pump_photons() / s.pump_photons());
  EXPECT_GT(after, 0.5);
}

TEST(Triplet, PhaseCovariance) {
  // a_p -> a_p e^{i(a+b)}, a_s -> a_s e^{ia}, a_i -> a_i e^{ib} commutes with the flow.
  const TripletState s{{1.2, 0.3}, {0.4, 0.1}, {0.2, -0.3}};
  const cplx ea = std::polar(1.0, 0.7), eb = std::polar(1.0, -1.9);
  const TripletState r{s.pump * ea * eb, s.signal * ea, s.idler * eb};
  const auto x = propagate(s, 0.8, 1.5, 2000);
  const auto y = propagate(r, 0.8, 1.5, 2000);
  EXPECT_NEAR(std::abs(y.pump - x.pump * ea * eb), 0.0, 1e-12);
  EXPECT_NEAR(std::abs(y.signal - x.signal * ea), 0.0, 1e-12);
  EXPECT_NEAR(std::abs(y.idler - x.idler * eb), 0.0, 1e-12);
}

TEST(Triplet, SignalIdlerExchange) {
  const TripletState s{{1.2, 0.3}, {0.4, 0.1}, {0.2, -0.3}};
  const auto x = propagate(s, 0.8, 1.5, 1000);
  const auto y = propagate({s.pump, s.idler, s.signal}, 0.8, 1.5, 1000);
  EXPECT_NEAR(std::abs(x.signal - y.idler), 0.0, 1e-13);
  EXPECT_NEAR(std::abs(x.idler - y.signal), 0.0, 1e-13);
}

TEST(Triplet, ScaledSeedSymmetry) {
  // (a, K, z) -> (c a, K / c, z) leaves the trajectory scaled by c.
  const TripletState s{{1.2, 0.3}, {0.4, 0.1}, {0.2, -0.3}};
  const double c = 4.0;
  const auto x = propagate(s, 0.8, 1.5, 4000);
  const auto y = propagate({c * s.pump, c * s.signal, c * s.idler}, 0.8 / c, 1.5, 4000);
  EXPECT_NEAR(std::abs(y.signal - c * x.signal), 0.0, 1e-11);
  EXPECT_NEAR(std::abs(y.pump - c * x.pump), 0.0, 1e-11);
}

TEST(FrozenPump, MatchesClosedForm) {
  const TripletState s{{3.0, 0.0}, {0.4, 0.1}, {0.2, -0.3}};
  const auto t = integrate(s, 0.5, 1.0, 1e-4, false);
  const auto e = frozen_pump_solution(s, 0.5, 1.0);
  EXPECT_EQ(t.back().state.pump, s.pump);
  EXPECT_NEAR(std::abs(t.back().state.signal - e.signal), 0.0, 1e-10);
  EXPECT_NEAR(std::abs(t.back().state.idler - e.idler), 0.0, 1e-10);
}

TEST(FrozenPump, VacuumMeanIsSinhSquared) {
  // <|a_s|^2> - 1/2 for vacuum seeds with E|a|^2 = 1/2.
  const double K = 0.5, r = 2.0, z = 1.5;
  const auto unit_s = frozen_pump_solution({{r, 0.0}, {1.0, 0.0}, {0.0, 0.0}}, K, z);
  const auto unit_i = frozen_pump_solution({{r, 0.0}, {0.0, 0.0}, {1.0, 0.0}}, K, z);
  const double mean = 0.5 * (std::norm(unit_s.signal) + std::norm(unit_i.signal)) - 0.5;
  EXPECT_NEAR(mean, linearized_gain_mean(K, r, z), 1e-12);
}

TEST(Propagation, BatchedMatchesScalar) {
  std::mt19937_64 rng(3);
  std::vector<TripletState> states;
  std::vector<double> K;
  std::vector<std::size_t> steps;
  for (int i = 0; i < 11; ++i) {
    states.push_back(random_triplet(rng));
    K.push_back(0.1 + 0.05 * i);
    steps.push_back(required_steps(states.back(), K.back(), 1.0, 400));
  }
  auto batch = states;
  propagate_many(batch, K, 1.0, steps);
  // Lanes in a batch share the batch-maximum step count.
  for (std::size_t base = 0; base < states.size(); base += 8) {
    std::size_t n = 1;
    for (std::size_t j = base; j < std::min(base + 8, states.size()); ++j) n = std::max(n, steps[j]);
    for (std::size_t j = base; j < std::min(base + 8, states.size()); ++j) {
      const auto x = propagate(states[j], K[j], 1.0, n);
      EXPECT_EQ(x.signal, batch[j].signal);
      EXPECT_EQ(x.pump, batch[j].pump);
    }
  }
}
