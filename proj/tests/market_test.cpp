// Copyright 2026 The liftbid Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "liftbid/bidding.hpp"
#include "liftbid/harness/simulation.hpp"
#include "liftbid/market.hpp"

namespace liftbid::market {
namespace {

MarketConfig sized(std::size_t n) {
  MarketConfig c;
  c.population_size = n;
  return c;
}

std::array<int, kNumArms> arm_counts(const Population& pop) {
  std::array<int, kNumArms> counts{};
  for (const auto& u : pop.users()) ++counts[static_cast<std::size_t>(u.arm)];
  return counts;
}

TEST(GeneratePopulation, FiveUsersSpreadOverArms) {
  const auto pop = generate_population(sized(5), 1);
  ASSERT_EQ(pop.size(), 5u);
  for (int c : arm_counts(pop)) {
    EXPECT_GE(c, 0);
    EXPECT_LE(c, 2);
  }
}

TEST(GeneratePopulation, LargeSplitIsBalanced) {
  const auto pop = generate_population(sized(50'000), 7);
  for (int c : arm_counts(pop)) EXPECT_LE(std::abs(c - 10'000), 1);
}

TEST(GeneratePopulation, IsDeterministicPerSeed) {
  const auto a = generate_population(sized(2'000), 3);
  const auto b = generate_population(sized(2'000), 3);
  const auto c = generate_population(sized(2'000), 4);
  bool any_diff = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].features, b[i].features);
    EXPECT_EQ(a[i].arm, b[i].arm);
    EXPECT_EQ(GroundTruth::params(a, i).organic, GroundTruth::params(b, i).organic);
    EXPECT_EQ(GroundTruth::params(a, i).wear_in, GroundTruth::params(b, i).wear_in);
    EXPECT_EQ(GroundTruth::params(a, i).wear_out, GroundTruth::params(b, i).wear_out);
    EXPECT_EQ(GroundTruth::auction_rate(a, i), GroundTruth::auction_rate(b, i));
    any_diff = any_diff || !(a[i].features == c[i].features);
  }
  EXPECT_TRUE(any_diff);
}

TEST(GeneratePopulation, FeaturesAreInDomain) {
  const auto pop = generate_population(sized(10'000), 5);
  for (std::size_t i = 0; i < pop.size(); ++i) {
    const auto& f = pop[i].features;
    EXPECT_GE(f.visit_frequency, 0);
    EXPECT_GE(f.distance_km, 0);
    EXPECT_GE(f.prior_impressions, 0);
    EXPECT_GT(f.logged_pcvr, 0);
    EXPECT_LT(f.logged_pcvr, 1);
    EXPECT_EQ(pop[i].user_id, i);
  }
}

TEST(GeneratePopulation, RejectsEmptyPopulation) {
  EXPECT_THROW(generate_population(sized(0), 1), std::invalid_argument);
}

TEST(MarketConfig, ValidatesRanges) {
  auto c = sized(10);
  c.second_price_fraction = 1.5;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = sized(10);
  c.competitor_log_sigma = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = sized(10);
  c.confounding = -0.1;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  EXPECT_NO_THROW(sized(10).validate());
}

TEST(TrueVisitProb, FlatWithoutWearTerms) {
  const OutcomeParams p{-1.3, 0.0, 0.0};
  for (int s = 0; s <= 40; ++s) EXPECT_EQ(true_visit_prob(p, s), true_visit_prob(p, 0));
}

TEST(TrueVisitProb, IncreasingWithPureWearIn) {
  const OutcomeParams p{-2.0, 0.7, 0.0};
  for (int s = 0; s < 200; ++s) EXPECT_LT(true_visit_prob(p, s), true_visit_prob(p, s + 1));
}

TEST(TrueVisitProb, MatchesClosedForm) {
  const OutcomeParams p{-2.0, 1.0, 0.05};
  const double p0 = 1.0 / (1.0 + std::exp(2.0));
  const double p3 = 1.0 / (1.0 + std::exp(-(-2.0 + std::log(4.0) - 0.15)));
  EXPECT_NEAR(true_visit_prob(p, 0), p0, 1e-15);
  EXPECT_NEAR(true_visit_prob(p, 3), p3, 1e-15);
  EXPECT_NEAR(true_visit_prob(p, 3) - true_visit_prob(p, 0), p3 - p0, 1e-15);
  EXPECT_THROW(true_visit_prob(p, -1), std::invalid_argument);
}

TEST(TrueVisitProb, WearOutEventuallyDominates) {
  const OutcomeParams p{-2.0, 1.0, 0.2};
  EXPECT_GT(true_visit_prob(p, 3), true_visit_prob(p, 0));
  EXPECT_LT(true_visit_prob(p, 60), true_visit_prob(p, 3));
}

TEST(GroundTruthLift, IsDaysTimesProbabilityStep) {
  const auto pop = generate_population(sized(50), 2);
  for (std::size_t i = 0; i < pop.size(); ++i) {
    EXPECT_EQ(GroundTruth::lift(pop, i, 0, 7), 0.0);
    for (int s = 1; s < 25; ++s)
      EXPECT_DOUBLE_EQ(GroundTruth::lift(pop, i, s, 7),
                       7 * (GroundTruth::visit_prob(pop, i, s) - GroundTruth::visit_prob(pop, i, s - 1)));
  }
}

TEST(ResolveAuction, SecondPriceWinPaysCompetitor) {
  const auto out = resolve_auction(Money::micros(5), Money::micros(3), Mechanism::kSecondPrice);
  EXPECT_TRUE(out.won);
  EXPECT_EQ(out.price_paid, Money::micros(3));
  ASSERT_TRUE(out.clearing_price.has_value());
  EXPECT_EQ(*out.clearing_price, Money::micros(3));
}

TEST(ResolveAuction, FirstPriceWinPaysOwnBid) {
  const auto out = resolve_auction(Money::micros(5), Money::micros(3), Mechanism::kFirstPrice);
  EXPECT_TRUE(out.won);
  EXPECT_EQ(out.price_paid, Money::micros(5));
  EXPECT_FALSE(out.clearing_price.has_value());
}

TEST(ResolveAuction, TiesAndLossesPayNothing) {
  for (auto m : {Mechanism::kFirstPrice, Mechanism::kSecondPrice}) {
    const auto tie = resolve_auction(Money::micros(4), Money::micros(4), m);
    EXPECT_FALSE(tie.won);
    EXPECT_EQ(tie.price_paid, Money{});
    EXPECT_FALSE(tie.clearing_price.has_value());
    const auto loss = resolve_auction(Money::micros(2), Money::micros(4), m);
    EXPECT_FALSE(loss.won);
    EXPECT_EQ(loss.price_paid, Money{});
  }
  EXPECT_THROW(resolve_auction(Money::micros(-1), Money::micros(4), Mechanism::kFirstPrice),
               std::invalid_argument);
}

TEST(RunAuction, ZeroBidNeverWins) {
  MarketConfig c = sized(1);
  Rng rng(9);
  for (int i = 0; i < 10'000; ++i) EXPECT_FALSE(run_auction(Money{}, c, rng).won);
}

TEST(RunAuction, MechanismFollowsSecondPriceFraction) {
  MarketConfig c = sized(1);
  c.second_price_fraction = 0.25;
  Rng rng(10);
  int second = 0;
  const int n = 100'000;
  for (int i = 0; i < n; ++i)
    second += run_auction(Money::micros(1'000), c, rng).mechanism == Mechanism::kSecondPrice ? 1 : 0;
  EXPECT_NEAR(second / double(n), 0.25, 0.005);
}

TEST(RealizeClick, DegenerateAndEmpiricalRates) {
  Rng rng(21);
  for (int i = 0; i < 1'000; ++i) {
    EXPECT_FALSE(realize_click(0.0, rng));
    EXPECT_TRUE(realize_click(1.0, rng));
  }
  int clicks = 0;
  for (int i = 0; i < 100'000; ++i) clicks += realize_click(0.3, rng) ? 1 : 0;
  EXPECT_NEAR(clicks / 100'000.0, 0.3, 0.005);
  EXPECT_THROW(realize_click(-0.1, rng), std::invalid_argument);
  EXPECT_THROW(realize_click(1.1, rng), std::invalid_argument);
}

TEST(RealizeClick, IsDeterministicPerStream) {
  Rng a(5), b(5);
  for (int i = 0; i < 1'000; ++i) EXPECT_EQ(realize_click(0.4, a), realize_click(0.4, b));
}

TEST(RealizeVisits, DegenerateProbabilities) {
  Rng rng(3);
  const OutcomeParams never{-60.0, 0.0, 0.0};
  const OutcomeParams always{60.0, 0.0, 0.0};
  for (int s : {0, 3, 25}) {
    EXPECT_EQ(realize_visits(never, s, 7, rng), 0);
    EXPECT_EQ(realize_visits(always, s, 7, rng), 7);
  }
  EXPECT_THROW(realize_visits(never, -1, 7, rng), std::invalid_argument);
}

TEST(RealizeVisits, CountsStayWithinCampaignDays) {
  const auto pop = generate_population(sized(2'000), 8);
  Rng rng(4);
  for (std::size_t i = 0; i < pop.size(); ++i) {
    const auto label = realize_visits(pop, i, static_cast<std::int64_t>(i % 30), 7, rng);
    EXPECT_EQ(label.user_id, pop[i].user_id);
    EXPECT_EQ(label.final_exposure, static_cast<std::int64_t>(i % 30));
    EXPECT_GE(label.visits, 0);
    EXPECT_LE(label.visits, 7);
  }
}

TEST(RealizeVisits, ControlArmMatchesAnalyticExpectation) {
  const auto pop = generate_population(sized(250'000), 12);
  const auto members = pop.arm_members(Arm::kControl);
  ASSERT_EQ(members.size(), 50'000u);
  const auto control = bidding::BidderVariant::control();
  harness::VariantPolicy policy(pop, members, control);
  std::int64_t requests_seen = 0;
  const auto run = harness::run_campaign(pop, members, sized(250'000), 7, policy, std::nullopt, 12,
                                         "ab/control", [&](const ImpressionLog&) { ++requests_seen; });
  EXPECT_EQ(requests_seen, 0);

  double analytic = 0, observed = 0, observed_sq = 0;
  for (std::size_t k = 0; k < members.size(); ++k) {
    analytic += 7 * GroundTruth::visit_prob(pop, members[k], 0);
    EXPECT_EQ(run.labels[k].final_exposure, 0);
    observed += run.labels[k].visits;
    observed_sq += double(run.labels[k].visits) * run.labels[k].visits;
  }
  const double n = static_cast<double>(members.size());
  const double mean = observed / n;
  const double se = std::sqrt((observed_sq / n - mean * mean) / n);
  EXPECT_NEAR(mean, analytic / n, 4 * se);
}

// Runs a fixed-alpha logging campaign over a small population.
std::vector<ImpressionLog> small_campaign_logs(std::uint64_t seed) {
  MarketConfig c = sized(3'000);
  c.second_price_fraction = 0.3;
  const auto pop = generate_population(c, seed);
  std::vector<std::size_t> members(pop.size());
  std::iota(members.begin(), members.end(), std::size_t{0});
  harness::LoggingPolicy policy(pop, members, Money::micros(100'000), 0.6, 0.01);
  std::vector<ImpressionLog> logs;
  harness::run_campaign(pop, members, c, 7, policy, std::nullopt, seed, "logging",
                        [&](const ImpressionLog& l) { logs.push_back(l); });
  return logs;
}

TEST(Campaign, LogStreamIsDeterministic) {
  const auto a = small_campaign_logs(31);
  const auto b = small_campaign_logs(31);
  ASSERT_FALSE(a.empty());
  EXPECT_EQ(a, b);
  EXPECT_NE(a, small_campaign_logs(32));
}

TEST(Campaign, EveryWonSecondPriceAuctionPaysTheClearingPrice) {
  const auto logs = small_campaign_logs(33);
  std::int64_t second_price_wins = 0;
  for (const auto& l : logs) {
    EXPECT_EQ(l.bin_before, exposure_bin_index(l.exposure_count_before));
    if (!l.won) {
      EXPECT_EQ(l.price_paid, Money{});
      EXPECT_FALSE(l.clearing_price.has_value());
      EXPECT_FALSE(l.clicked);
      continue;
    }
    EXPECT_LE(l.price_paid, l.bid);
    if (l.mechanism == Mechanism::kSecondPrice) {
      ++second_price_wins;
      ASSERT_TRUE(l.clearing_price.has_value());
      EXPECT_EQ(l.price_paid, *l.clearing_price);
      EXPECT_LT(*l.clearing_price, l.bid);
    } else {
      EXPECT_FALSE(l.clearing_price.has_value());
      EXPECT_EQ(l.price_paid, l.bid);
    }
  }
  EXPECT_GT(second_price_wins, 100);
}

TEST(Campaign, ExposureCountsAdvanceOnlyOnWins) {
  const auto logs = small_campaign_logs(34);
  std::unordered_map<UserId, std::int64_t> wins;
  for (const auto& l : logs) {
    EXPECT_EQ(l.exposure_count_before, wins[l.user_id]);
    if (l.won) ++wins[l.user_id];
  }
}

}  // namespace
}  // namespace liftbid::market
