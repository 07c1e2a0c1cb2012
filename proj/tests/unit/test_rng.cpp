#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "cjsis/numeric.hpp"
#include "cjsis/rng.hpp"

using namespace cjsis;

// Known-answer vectors published with the Random123 reference implementation.
TEST(Philox, KnownAnswerZero) {
  const auto out = philox4x32({0, 0, 0, 0}, {0, 0});
  EXPECT_EQ(out, (std::array<std::uint32_t, 4>{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u}));
}

TEST(Philox, KnownAnswerOnes) {
  const auto out = philox4x32({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu});
  EXPECT_EQ(out, (std::array<std::uint32_t, 4>{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu}));
}

TEST(Philox, KnownAnswerPi) {
  const auto out = philox4x32({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u});
  EXPECT_EQ(out, (std::array<std::uint32_t, 4>{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u}));
}

TEST(Stream, SamePathSameOutput) {
  Stream a(7, {1, 2, 3});
  Stream b(7, {1, 2, 3});
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a(), b());
}

TEST(Stream, DifferentPathsDiffer) {
  std::set<std::uint64_t> first;
  for (std::uint64_t m = 0; m < 200; ++m) {
    Stream s(7, {5, m});
    first.insert(s());
  }
  Stream x(7, {5, 1, 0});
  Stream y(7, {5, 0, 1});
  Stream z(8, {5, 1, 0});
  EXPECT_EQ(first.size(), 200u);
  EXPECT_NE(x(), y());
  EXPECT_NE(Stream(7, {5, 1, 0})(), z());
}

TEST(Stream, PathLengthMatters) {
  EXPECT_NE(Stream(1, {3})(), Stream(1, {3, 0})());
}

TEST(Stream, UniformOpenInterval) {
  Stream s(1, {0});
  double lo = 1.0;
  double hi = 0.0;
  double sum = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = s.uniform();
    lo = std::min(lo, u);
    hi = std::max(hi, u);
    sum += u;
  }
  EXPECT_GT(lo, 0.0);
  EXPECT_LT(hi, 1.0);
  EXPECT_NEAR(sum / n, 0.5, 4.0 * std::sqrt(1.0 / 12.0 / n));
}

TEST(Stream, NormalMoments) {
  Stream s(2, {0});
  const int n = 200000;
  double m1 = 0.0;
  double m2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = s.normal();
    m1 += z;
    m2 += z * z;
  }
  m1 /= n;
  m2 /= n;
  EXPECT_NEAR(m1, 0.0, 4.0 / std::sqrt(n));
  EXPECT_NEAR(m2, 1.0, 4.0 * std::sqrt(2.0 / n));
}

TEST(Stream, BelowIsUniform) {
  Stream s(3, {0});
  std::vector<int> counts(7, 0);
  const int n = 70000;
  for (int i = 0; i < n; ++i) {
    const auto k = s.below(7);
    ASSERT_LT(k, 7u);
    ++counts[k];
  }
  const double expected = n / 7.0;
  const double se = std::sqrt(n * (1.0 / 7.0) * (6.0 / 7.0));
  for (const int c : counts) EXPECT_NEAR(c, expected, 4.0 * se);
}

TEST(Stream, BelowOneIsZero) {
  Stream s(3, {1});
  for (int i = 0; i < 10; ++i) EXPECT_EQ(s.below(1), 0u);
}

TEST(Stream, WorksWithStdShuffle) {
  std::vector<int> v{1, 2, 3, 4, 5, 6, 7, 8};
  Stream s(4, {0});
  std::shuffle(v.begin(), v.end(), s);
  std::sort(v.begin(), v.end());
  EXPECT_EQ(v, (std::vector<int>{1, 2, 3, 4, 5, 6, 7, 8}));
}
