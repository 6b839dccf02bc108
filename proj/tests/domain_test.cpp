// Copyright 2026 The liftbid Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cstdint>
#include <limits>
#include <set>

#include "liftbid/domain.hpp"

namespace liftbid {
namespace {

TEST(ExposureBin, MapsEdgeExamples) {
  EXPECT_EQ(exposure_bin(0).index, 0);
  EXPECT_EQ(exposure_bin(7).index, 5);
  EXPECT_EQ(exposure_bin(20).index, 7);
  EXPECT_EQ(exposure_bin(10'000).index, 7);
}

TEST(ExposureBin, EdgesMatchEightClasses) {
  const std::int64_t lower[] = {0, 1, 2, 3, 4, 5, 10, 20};
  const std::int64_t upper[] = {0, 1, 2, 3, 4, 9, 19};
  ASSERT_EQ(kNumBins, 8);
  for (int b = 0; b < kNumBins; ++b) {
    const auto bin = bin_at(b);
    EXPECT_EQ(bin.index, b);
    EXPECT_EQ(bin.lower, lower[b]);
    if (b < 7) {
      ASSERT_TRUE(bin.upper.has_value());
      EXPECT_EQ(*bin.upper, upper[b]);
    } else {
      EXPECT_FALSE(bin.upper.has_value());
    }
  }
}

TEST(ExposureBin, EveryCountUpToThirtyLandsInExactlyOneBin) {
  for (std::int64_t c = 0; c <= 30; ++c) {
    int hits = 0;
    for (int b = 0; b < kNumBins; ++b) hits += bin_at(b).contains(c) ? 1 : 0;
    EXPECT_EQ(hits, 1) << "count " << c;
    EXPECT_TRUE(exposure_bin(c).contains(c));
  }
}

TEST(ExposureBin, MappingIsMonotoneAndContainsCount) {
  int previous = 0;
  for (std::int64_t c = 0; c <= 5'000; ++c) {
    const auto bin = exposure_bin(c);
    EXPECT_LE(bin.lower, c);
    if (bin.upper) {
      EXPECT_LE(c, *bin.upper);
    }
    EXPECT_GE(bin.index, previous);
    previous = bin.index;
  }
  EXPECT_EQ(exposure_bin(std::numeric_limits<std::int64_t>::max()).index, 7);
}

TEST(ExposureBin, RejectsNegativeCounts) { EXPECT_THROW(exposure_bin(-1), std::invalid_argument); }

TEST(ExposureBin, GapIsDistanceBetweenLowerEdges) {
  EXPECT_EQ(bin_gap(0, 1), 1);
  EXPECT_EQ(bin_gap(5, 6), 5);
  EXPECT_EQ(bin_gap(6, 7), 10);
}

TEST(ExposureBin, LabelsReadLikeTheClasses) {
  EXPECT_EQ(bin_label(0), "0");
  EXPECT_EQ(bin_label(5), "5-9");
  EXPECT_EQ(bin_label(6), "10-19");
  EXPECT_EQ(bin_label(7), "20+");
}

TEST(Money, IsExactFixedPoint) {
  const Money a = Money::micros(1'500'000);
  const Money b = Money::micros(250);
  EXPECT_EQ((a + b).micros(), 1'500'250);
  EXPECT_EQ((a - b).micros(), 1'499'750);
  EXPECT_EQ((b * 4).micros(), 1'000);
  EXPECT_EQ(Money::from_double_micros(499.5).micros(), 500);
  EXPECT_EQ(Money::from_double_micros(0.49).micros(), 0);
  EXPECT_LT(b, a);
}

TEST(Arms, NamesRoundTrip) {
  std::set<std::string_view> names;
  for (Arm a : kAllArms) {
    EXPECT_EQ(arm_from_name(arm_name(a)), a);
    names.insert(arm_name(a));
  }
  EXPECT_EQ(names.size(), 5u);
  EXPECT_THROW(arm_from_name("treatment"), std::invalid_argument);
}

TEST(Mechanism, NamesRoundTrip) {
  EXPECT_EQ(mechanism_from_name("first_price"), Mechanism::kFirstPrice);
  EXPECT_EQ(mechanism_from_name("second_price"), Mechanism::kSecondPrice);
  EXPECT_THROW(mechanism_from_name("vickrey"), std::invalid_argument);
}

TEST(Features, ArrayRoundTrip) {
  const Features f{3, 4.5, 12, 0.02};
  EXPECT_EQ(Features::from_array(f.as_array()), f);
}

}  // namespace
}  // namespace liftbid
