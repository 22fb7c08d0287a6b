#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "twinwave/rng.hpp"

using namespace twinwave;

// Known-answer vectors for Philox4x32-10.
TEST(Philox, KnownAnswerZero) {
  const Philox4x32 g(0);
  const auto b = g.bijection({0, 0, 0, 0});
  EXPECT_EQ(b, (Philox4x32::Block{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u}));
  EXPECT_EQ(g.block(0), b);
}

TEST(Philox, KnownAnswerOnes) {
  const Philox4x32 g(~0ULL);
  EXPECT_EQ(g.bijection({~0u, ~0u, ~0u, ~0u}),
            (Philox4x32::Block{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu}));
}

TEST(Philox, KnownAnswerPi) {
  const Philox4x32 g(0x299f31d0a4093822ULL);
  EXPECT_EQ(g.bijection({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}),
            (Philox4x32::Block{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u}));
}

TEST(RandomStream, DeterministicPerSubstream) {
  RandomStream a(42, 3, 17), b(42, 3, 17), c(42, 3, 18), d(42, 4, 17);
  for (int i = 0; i < 100; ++i) {
    const double x = a.uniform();
    EXPECT_EQ(x, b.uniform());
    EXPECT_NE(x, c.uniform());
    EXPECT_NE(x, d.uniform());
  }
}

TEST(RandomStream, SubstreamKeysDistinct) {
  std::set<std::uint64_t> keys;
  for (std::uint64_t s = 0; s < 4; ++s)
    for (std::uint64_t shot = 0; shot < 50; ++shot)
      for (std::uint64_t m = 0; m < 50; ++m) keys.insert(substream_key(s, shot, m));
  EXPECT_EQ(keys.size(), 4u * 50u * 50u);
}

TEST(RandomStream, Moments) {
  RandomStream r(9, 0, 0);
  const int n = 200000;
  double su = 0, sn = 0, sn2 = 0, se = 0;
  for (int i = 0; i < n; ++i) {
    const double u = r.uniform();
    ASSERT_GT(u, 0.0);
    ASSERT_LT(u, 1.0);
    su += u;
    const auto [g0, g1] = r.normal_pair();
    sn += g0 + g1;
    sn2 += g0 * g0 + g1 * g1;
    se += r.exponential(2.0);
  }
  EXPECT_NEAR(su / n, 0.5, 5 * std::sqrt(1.0 / 12 / n));
  EXPECT_NEAR(sn / (2 * n), 0.0, 5 / std::sqrt(2.0 * n));
  EXPECT_NEAR(sn2 / (2 * n), 1.0, 5 * std::sqrt(2.0 / (2 * n)));
  EXPECT_NEAR(se / n, 2.0, 5 * 2.0 / std::sqrt(n));
}
