// Copyright 2026 The liftbid Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "liftbid/bidding.hpp"
#include "liftbid/domain.hpp"
#include "liftbid/market.hpp"
#include "liftbid/pacing.hpp"
#include "liftbid/random.hpp"

namespace liftbid::harness {

inline constexpr int kHoursPerDay = 24;

struct CampaignResult {
  std::vector<VisitLabel> labels;  // one per member, in member order
  std::optional<pacing::PacingState> pacing;
  std::int64_t requests = 0;
};

// Policy requirements:
//   bool bids() const;
//   std::optional<bidding::BidDecision> decide(std::size_t member_pos, std::int64_t count,
//                                              int slot, double alpha);
// Sink: void(const ImpressionLog&), called for every request of a bidding
// policy in event order.
//
// Requests arrive per user per day as Poisson(rate) with uniform hour and
// slot. Within an hour requests are processed in member order; alpha changes
// only at cadence boundaries. A request whose bid could overrun the budget is
// skipped (logged with bid 0).
template <class Policy, class Sink>
CampaignResult run_campaign(const market::Population& pop, std::span<const std::size_t> members,
                            const market::MarketConfig& market, int days, Policy& policy,
                            std::optional<pacing::PacingState> pacing_state, std::uint64_t seed,
                            std::string_view stream, Sink&& sink) {
  using market::GroundTruth;
  const std::string name(stream);
  Rng request_rng = make_rng(seed, name + "/requests");
  Rng auction_rng = make_rng(seed, name + "/auctions");
  Rng visit_rng = make_rng(seed, name + "/visits");

  const int num_slots = pop.num_slots();
  std::vector<double> slot_shift(static_cast<std::size_t>(num_slots));
  for (int s = 0; s < num_slots; ++s)
    slot_shift[static_cast<std::size_t>(s)] =
        market::slot_log_shift(market, GroundTruth::slot_ctr(pop, s));

  CampaignResult result;
  bidding::ImpressionStore store;

  struct Request {
    std::uint32_t member_pos;
    int slot;
  };
  std::array<std::vector<Request>, kHoursPerDay> by_hour;
  std::uniform_int_distribution<int> hour_dist(0, kHoursPerDay - 1);
  std::uniform_int_distribution<int> slot_dist(0, num_slots - 1);
  std::uint64_t auction_id = 0;
  const int cadence = pacing_state ? pacing_state->config().cadence_hours : 1;

  for (int day = 0; day < days; ++day) {
    if (policy.bids()) {
      for (auto& bucket : by_hour) bucket.clear();
      for (std::size_t pos = 0; pos < members.size(); ++pos) {
        std::poisson_distribution<int> arrivals(GroundTruth::auction_rate(pop, members[pos]));
        const int k = arrivals(request_rng);
        for (int r = 0; r < k; ++r) {
          const int hour = hour_dist(request_rng);
          const int slot = slot_dist(request_rng);
          by_hour[static_cast<std::size_t>(hour)].push_back({static_cast<std::uint32_t>(pos), slot});
        }
      }
    }

    for (int hour = 0; hour < kHoursPerDay; ++hour) {
      if (policy.bids()) {
        for (const Request& req : by_hour[static_cast<std::size_t>(hour)]) {
          const std::size_t index = members[req.member_pos];
          const UserProfile& user = pop[index];
          const std::int64_t count = store.count(user.user_id);
          const double alpha = pacing_state ? pacing_state->alpha() : 1.0;
          const auto decision = policy.decide(req.member_pos, count, req.slot, alpha);

          const Money competing = market::draw_competing_bid(
              market, GroundTruth::competitor_shift(pop, index) + slot_shift[static_cast<std::size_t>(req.slot)],
              auction_rng);
          const Mechanism mechanism = market::draw_mechanism(market, auction_rng);

          Money bid = decision ? decision->bid : Money{};
          if (pacing_state && !pacing_state->can_afford(bid)) bid = Money{};
          const auto outcome = market::resolve_auction(bid, competing, mechanism);

          ImpressionLog log;
          log.user_id = user.user_id;
          log.day = day;
          log.hour = hour;
          log.auction_id = auction_id++;
          log.slot_id = req.slot;
          log.features = user.features;
          log.exposure_count_before = count;
          log.bin_before = exposure_bin_index(count);
          if (decision) {
            log.phi = decision->phi;
            log.raw_score = decision->raw_score;
          }
          log.bid = bid;
          log.won = outcome.won;
          log.price_paid = outcome.price_paid;
          log.clearing_price = outcome.clearing_price;
          log.mechanism = mechanism;
          if (outcome.won) {
            store.record_win(user.user_id);
            if (pacing_state) pacing_state->record_spend(outcome.price_paid);
            log.clicked = market::realize_click(GroundTruth::slot_ctr(pop, req.slot), auction_rng);
          }
          ++result.requests;
          sink(static_cast<const ImpressionLog&>(log));
        }
      }
      const int clock = day * kHoursPerDay + hour + 1;
      if (pacing_state && clock % cadence == 0) pacing_state->update_alpha(clock);
    }
  }

  result.labels.reserve(members.size());
  for (std::size_t pos = 0; pos < members.size(); ++pos) {
    const std::size_t index = members[pos];
    result.labels.push_back(
        market::realize_visits(pop, index, store.count(pop[index].user_id), std::max(days, 0), visit_rng));
  }
  result.pacing = std::move(pacing_state);
  return result;
}

// Fixed-alpha performance-based policy driven by the production pCVR
// recorded in the user features; produces the biased training logs. The
// score is pCVR^sharpness normalized to mean 1, so sharpness 1 is the plain
// performance bidder and sharpness 0 bids the same on everyone.
class LoggingPolicy {
 public:
  LoggingPolicy(const market::Population& pop, std::span<const std::size_t> members, Money cpc,
                double alpha, double pctr, double sharpness = 1.0)
      : pop_(pop), members_(members), cpc_(cpc), alpha_(alpha), pctr_(pctr), sharpness_(sharpness) {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("logging alpha must be in (0,1]");
    if (!(sharpness >= 0.0)) throw std::invalid_argument("logging sharpness must be non-negative");
    double sum = 0;
    for (std::size_t idx : members) sum += score(pop[idx].features);
    mean_score_ = members.empty() ? 1.0 : sum / static_cast<double>(members.size());
  }

  bool bids() const { return true; }

  std::optional<bidding::BidDecision> decide(std::size_t pos, std::int64_t, int, double) const {
    const auto& f = pop_[members_[pos]].features;
    bidding::BidDecision d;
    d.raw_score = f.logged_pcvr;
    d.phi = score(f) / mean_score_;
    const double cpc = cpc_.as_double();
    d.bid = Money::from_double_micros(std::clamp(d.phi * cpc * pctr_ * alpha_, 0.0, cpc));
    return d;
  }

 private:
  double score(const Features& f) const { return std::pow(f.logged_pcvr, sharpness_); }

  const market::Population& pop_;
  std::span<const std::size_t> members_;
  Money cpc_;
  double alpha_;
  double pctr_;
  double sharpness_;
  double mean_score_ = 1.0;
};

// One experiment arm's bidder with per-user scores cached up front.
class VariantPolicy {
 public:
  VariantPolicy(const market::Population& pop, std::span<const std::size_t> members,
                const bidding::BidderVariant& variant)
      : variant_(variant) {
    if (!variant.bids()) return;
    scores_.reserve(members.size());
    for (std::size_t idx : members) scores_.push_back(bidding::prepare_scores(variant, pop[idx].features));
  }

  bool bids() const { return variant_.bids(); }

  std::optional<bidding::BidDecision> decide(std::size_t pos, std::int64_t count, int slot,
                                             double alpha) const {
    if (!variant_.bids()) return std::nullopt;
    return bidding::bid_from_scores(variant_, scores_[pos], count,
                                    variant_.bundle().pctr.predict(slot), alpha);
  }

 private:
  const bidding::BidderVariant& variant_;
  std::vector<bidding::UserScores> scores_;
};

}  // namespace liftbid::harness
