#include <gtest/gtest.h>

#include <cmath>
#include <cstring>

#include "twinwave/ensemble.hpp"

using namespace twinwave;

namespace {

RunConfig small_config() {
  RunConfig c;
  c.model.modes = {2, 3, 3};
  c.shots = 24;
  c.seed = 11;
  c.workers = 1;
  return c;
}

}  // namespace

TEST(Seeding, VacuumHalfQuantum) {
  const int n = 100000;
  double ss = 0, si = 0, cross = 0;
  for (int k = 0; k < n; ++k) {
    RandomStream r(5, static_cast<std::uint64_t>(k), 0);
    const auto s = seed_triplet(r, 100.0, 0.25);
    EXPECT_EQ(s.pump, cplx(5.0, 0.0));
    ss += s.signal_photons();
    si += s.idler_photons();
    cross += (s.signal * s.idler).real();
  }
  // |a|^2 is exponential with mean 1/2: sd 1/2.
  const double se = 0.5 / std::sqrt(n);
  EXPECT_NEAR(ss / n, 0.5, 4 * se);
  EXPECT_NEAR(si / n, 0.5, 4 * se);
  EXPECT_NEAR(cross / n, 0.0, 4 * se);
}

TEST(Seeding, PumpSharesSumToPumpPhotons) {
  const Simulator sim(small_config());
  double total = 0;
  for (std::size_t i = 0; i < sim.mode_count(); ++i) total += sim.seed(0, i).pump_photons();
  EXPECT_NEAR(total / sim.pump_photons(), 1.0, 1e-12);
}

TEST(Seeding, UniformPartition) {
  auto cfg = small_config();
  cfg.partition = PumpPartition::uniform;
  const Simulator sim(cfg);
  for (double w : sim.weights()) EXPECT_DOUBLE_EQ(w, 1.0 / static_cast<double>(sim.mode_count()));
}

TEST(Ensemble, ZeroCouplingLeavesSeeds) {
  auto cfg = small_config();
  cfg.model.coupling.k0 = 0.0;
  const Simulator sim(cfg);
  const auto out = sim.simulate_shot(3);
  for (std::size_t i = 0; i < sim.mode_count(); ++i) {
    const auto s = sim.seed(3, i);
    EXPECT_EQ(out.signal[i], s.signal);
    EXPECT_EQ(out.idler[i], s.idler);
  }
}

TEST(Ensemble, WorkerCountDoesNotChangeBits) {
  auto cfg = small_config();
  const auto a = run_ensemble(cfg);
  cfg.workers = 4;
  const auto b = run_ensemble(cfg);
  ASSERT_EQ(a.data.size(), b.data.size());
  EXPECT_EQ(0, std::memcmp(a.data.data(), b.data.data(), a.data.size() * sizeof(float)));
}

TEST(Ensemble, SeedChangesOutput) {
  auto cfg = small_config();
  cfg.shots = 2;
  const auto a = run_ensemble(cfg);
  cfg.seed = 12;
  const auto b = run_ensemble(cfg);
  EXPECT_NE(0, std::memcmp(a.data.data(), b.data.data(), a.data.size() * sizeof(float)));
}

TEST(Ensemble, IdlerIsPaintedMirrored) {
  const Simulator sim(small_config());
  auto out = sim.simulate_shot(0);
  out.idler = out.signal;
  const auto& g = sim.config().model.detector;
  std::vector<float> s(g.strip_pixels()), i(g.strip_pixels());
  sim.synthesize(out, s, i);
  const std::size_t R = g.rows(), C = g.cols();
  for (std::size_t r = 0; r < R; ++r)
    for (std::size_t c = 0; c < C; ++c) ASSERT_EQ(s[r * C + c], i[(R - 1 - r) * C + (C - 1 - c)]);
}

TEST(Ensemble, IntensitiesFiniteAndNonNegative) {
  const auto st = run_ensemble(small_config());
  for (float v : st.data) {
    ASSERT_TRUE(std::isfinite(v));
    ASSERT_GE(v, 0.0f);
  }
  EXPECT_EQ(st.metadata.at("seed").get<std::uint64_t>(), 11u);
}

TEST(Ensemble, ShotIndexChecked) {
  const Simulator sim(small_config());
  EXPECT_THROW(sim.simulate_shot(24), std::out_of_range);
}
