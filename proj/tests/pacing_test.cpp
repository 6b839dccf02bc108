// Copyright 2026 The liftbid Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <random>

#include "liftbid/pacing.hpp"

namespace liftbid::pacing {
namespace {

TEST(NextAlpha, OnTargetKeepsAlpha) {
  const PacingConfig c;
  EXPECT_DOUBLE_EQ(PacingState::next_alpha(0.4, 100.0, 100.0, c), 0.4);
}

TEST(NextAlpha, FourTimesOverspendHalvesAlpha) {
  const PacingConfig c;
  EXPECT_DOUBLE_EQ(PacingState::next_alpha(0.8, 100.0, 400.0, c), 0.4);
  EXPECT_DOUBLE_EQ(PacingState::next_alpha(0.015, 100.0, 400.0, c), c.alpha_min);
}

TEST(NextAlpha, ZeroSpendBoostsAndCaps) {
  const PacingConfig c;
  EXPECT_DOUBLE_EQ(PacingState::next_alpha(0.4, 100.0, 0.0, c), 0.5);
  EXPECT_DOUBLE_EQ(PacingState::next_alpha(0.9, 100.0, 0.0, c), c.alpha_max);
}

TEST(NextAlpha, DirectionFollowsSpendAndStaysClamped) {
  const PacingConfig c;
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> alpha(c.alpha_min, c.alpha_max);
  std::uniform_real_distribution<double> rate(0.0, 1'000.0);
  for (int i = 0; i < 100'000; ++i) {
    const double a = alpha(rng), target = rate(rng) + 1.0, actual = rate(rng);
    const double next = PacingState::next_alpha(a, target, actual, c);
    EXPECT_GE(next, c.alpha_min);
    EXPECT_LE(next, c.alpha_max);
    if (actual > target) {
      EXPECT_LE(next, a);
    }
    if (actual < target) {
      EXPECT_GE(next, a);
    }
  }
}

TEST(PacingState, TracksSpendAndTrajectory) {
  PacingState s(PacingConfig{}, Money::micros(24'000), 24);
  EXPECT_DOUBLE_EQ(s.alpha(), 0.5);
  s.record_spend(Money::micros(1'000));
  EXPECT_TRUE(s.can_afford(Money::micros(23'000)));
  EXPECT_FALSE(s.can_afford(Money::micros(23'001)));
  EXPECT_DOUBLE_EQ(s.update_alpha(1), 0.5);
  s.record_spend(Money::micros(4'000));
  EXPECT_DOUBLE_EQ(s.update_alpha(2), 0.25);
  EXPECT_DOUBLE_EQ(s.update_alpha(3), 0.3125);
  EXPECT_EQ(s.spend(), Money::micros(5'000));
  EXPECT_EQ(s.remaining(), Money::micros(19'000));
  ASSERT_EQ(s.trajectory().size(), 3u);
  EXPECT_EQ(s.trajectory()[1].hour, 2);
  EXPECT_EQ(s.trajectory()[1].window_spend, Money::micros(4'000));
  EXPECT_EQ(s.trajectory()[2].window_spend, Money{});
  EXPECT_DOUBLE_EQ(s.trajectory()[2].alpha, 0.3125);
}

TEST(PacingState, InitialAlphaIsClamped) {
  PacingConfig c;
  c.initial_alpha = 5.0;
  EXPECT_DOUBLE_EQ(PacingState(c, Money::micros(10), 1).alpha(), 1.0);
}

TEST(PacingConfig, RejectsInvalidSettings) {
  PacingConfig c;
  c.alpha_min = 0.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = PacingConfig{};
  c.alpha_max = 1.2;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = PacingConfig{};
  c.cadence_hours = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  EXPECT_THROW(PacingState(PacingConfig{}, Money::micros(-1), 24), std::invalid_argument);
  EXPECT_THROW(PacingState(PacingConfig{}, Money::micros(1), 0), std::invalid_argument);
}

// Spend per window is proportional to alpha in a stationary toy market; the
// controller settles on the rate that digests the budget.
TEST(PacingState, ClosedLoopOnProportionalMarket) {
  PacingState s(PacingConfig{}, Money::micros(168'000), 168);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> noise(1.0, 0.1);
  for (int h = 1; h <= 168; ++h) {
    const Money bid = Money::from_double_micros(3'000.0 * s.alpha() * std::max(0.0, noise(rng)));
    if (s.can_afford(bid)) s.record_spend(bid);
    s.update_alpha(h);
    EXPECT_GE(s.alpha(), 0.01);
    EXPECT_LE(s.alpha(), 1.0);
  }
  EXPECT_LE(s.spend(), s.budget());
  EXPECT_GT(s.spend().as_double(), 0.9 * s.budget().as_double());
}

}  // namespace
}  // namespace liftbid::pacing
