// Copyright 2026 The liftbid Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "liftbid/domain.hpp"
#include "liftbid/random.hpp"

namespace liftbid::market {

// Coefficients of the ground-truth daily visit model
//   p(s) = sigmoid(organic + wear_in * log(1 + s) - wear_out * s).
struct OutcomeCoefficients {
  // organic = intercept + frequency * log1p(freq) - distance * log1p(dist) + N(0, noise)
  double organic_intercept = -3.4;
  double organic_frequency = 0.6;
  double organic_distance = 0.3;
  double organic_noise = 0.3;
  // wear_in = floor + scale * exp(-frequency_decay * freq - distance_decay * dist) * LogNormal(0, noise)
  double wearin_floor = 0.05;
  double wearin_scale = 2.0;
  double wearin_frequency_decay = 0.35;
  double wearin_distance_decay = 0.08;
  double wearin_noise = 0.25;
  // wear_out = median * LogNormal(0, noise)
  double wearout_median = 0.04;
  double wearout_noise = 0.3;
};

struct MarketConfig {
  std::size_t population_size = 50'000;
  int days = 7;

  // Per-user daily request rate is LogNormal around `auctions_per_day`.
  double auctions_per_day = 4.0;
  double auction_rate_dispersion = 0.6;

  double frequency_mean = 1.5;
  double frequency_dispersion = 0.8;
  double distance_median_km = 5.0;
  double distance_dispersion = 0.8;
  double prior_win_rate = 0.15;
  double logged_pcvr_noise = 0.3;

  // Highest competing bid (micros) ~ LogNormal(mu + shift_i + log(ctr/ctr_mean), sigma).
  double competitor_log_mu = 7.0;
  double competitor_log_sigma = 0.7;
  // Strength of every link between observed features and exposure. Competing
  // performance bidders shift their log bid by confounding * sigma * z_i,
  // where z_i is the standardized feature-driven part of the user's organic
  // visit rate; the logging policy sharpens its pCVR targeting and
  // prior-period impressions follow the user's request rate to the same
  // power. At 0 exposure is independent of the features.
  double confounding = 1.0;
  double second_price_fraction = 0.1;

  int num_slots = 200;
  double slot_ctr_mean = 0.01;
  double slot_ctr_concentration = 200.0;

  OutcomeCoefficients outcome;
  std::uint64_t seed = 1;

  void validate() const {
    auto require = [](bool ok, const char* what) {
      if (!ok) throw std::invalid_argument(std::string("invalid market config: ") + what);
    };
    require(population_size > 0, "population_size must be positive");
    require(days >= 0, "days must be non-negative");
    require(auctions_per_day >= 0, "auctions_per_day must be non-negative");
    require(auction_rate_dispersion > 0, "auction_rate_dispersion must be positive");
    require(frequency_mean >= 0, "frequency_mean must be non-negative");
    require(frequency_dispersion > 0, "frequency_dispersion must be positive");
    require(distance_median_km > 0, "distance_median_km must be positive");
    require(distance_dispersion > 0, "distance_dispersion must be positive");
    require(prior_win_rate >= 0 && prior_win_rate <= 1, "prior_win_rate must be in [0,1]");
    require(logged_pcvr_noise > 0, "logged_pcvr_noise must be positive");
    require(competitor_log_sigma > 0, "competitor_log_sigma must be positive");
    require(confounding >= 0, "confounding must be non-negative");
    require(second_price_fraction >= 0 && second_price_fraction <= 1,
            "second_price_fraction must be in [0,1]");
    require(num_slots > 0, "num_slots must be positive");
    require(slot_ctr_mean > 0 && slot_ctr_mean < 1, "slot_ctr_mean must be in (0,1)");
    require(slot_ctr_concentration > 0, "slot_ctr_concentration must be positive");
    require(outcome.organic_noise > 0 && outcome.wearin_noise > 0 && outcome.wearout_noise > 0,
            "outcome noise scales must be positive");
    require(outcome.wearout_median >= 0 && outcome.wearin_scale >= 0,
            "outcome magnitudes must be non-negative");
  }
};

struct OutcomeParams {
  double organic = 0;   // base log-odds of a daily visit
  double wear_in = 0;   // coefficient on log(1 + s)
  double wear_out = 0;  // per-impression decay
};

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Ground-truth daily visit probability after `exposures` impressions.
inline double true_visit_prob(const OutcomeParams& params, std::int64_t exposures) {
  if (exposures < 0) throw std::invalid_argument("exposure count must be non-negative");
  const double s = static_cast<double>(exposures);
  const double p = sigmoid(params.organic + params.wear_in * std::log1p(s) - params.wear_out * s);
  return std::clamp(p, 0.0, 1.0);
}

class Population;

// Simulator-side access to the hidden response model. Nothing under
// liftbid::bidding or liftbid::learning takes a Population.
class GroundTruth {
 public:
  static const OutcomeParams& params(const Population& pop, std::size_t index);
  static double auction_rate(const Population& pop, std::size_t index);
  static double competitor_shift(const Population& pop, std::size_t index);
  static double slot_ctr(const Population& pop, int slot);

  static double visit_prob(const Population& pop, std::size_t index, std::int64_t s) {
    return true_visit_prob(params(pop, index), s);
  }
  // Expected campaign visits gained by the s-th impression.
  static double lift(const Population& pop, std::size_t index, std::int64_t s, int days) {
    if (s <= 0) return 0.0;
    const auto& p = params(pop, index);
    return days * (true_visit_prob(p, s) - true_visit_prob(p, s - 1));
  }
};

class Population {
 public:
  const std::vector<UserProfile>& users() const { return users_; }
  std::size_t size() const { return users_.size(); }
  const UserProfile& operator[](std::size_t i) const { return users_[i]; }
  int num_slots() const { return static_cast<int>(slot_ctr_.size()); }

  std::vector<std::size_t> arm_members(Arm arm) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < users_.size(); ++i)
      if (users_[i].arm == arm) out.push_back(i);
    return out;
  }

 private:
  friend class GroundTruth;
  friend Population generate_population(const MarketConfig&, std::uint64_t);

  std::vector<UserProfile> users_;
  std::vector<OutcomeParams> truth_;
  std::vector<double> auction_rate_;
  std::vector<double> competitor_shift_;
  std::vector<double> slot_ctr_;
};

inline const OutcomeParams& GroundTruth::params(const Population& pop, std::size_t i) {
  return pop.truth_.at(i);
}
inline double GroundTruth::auction_rate(const Population& pop, std::size_t i) {
  return pop.auction_rate_.at(i);
}
inline double GroundTruth::competitor_shift(const Population& pop, std::size_t i) {
  return pop.competitor_shift_.at(i);
}
inline double GroundTruth::slot_ctr(const Population& pop, int slot) {
  return pop.slot_ctr_.at(static_cast<std::size_t>(slot));
}

inline Population generate_population(const MarketConfig& config, std::uint64_t seed) {
  config.validate();
  const std::size_t n = config.population_size;
  const auto& oc = config.outcome;
  Rng rng = make_rng(seed, "population");
  std::normal_distribution<double> normal(0.0, 1.0);

  Population pop;
  pop.users_.resize(n);
  pop.truth_.resize(n);
  pop.auction_rate_.resize(n);
  pop.competitor_shift_.resize(n);

  std::vector<double> organic_driver(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto& u = pop.users_[i];
    u.user_id = i;
    auto& f = u.features;

    const double sf = config.frequency_dispersion;
    std::poisson_distribution<int> visits(config.frequency_mean *
                                          std::exp(sf * normal(rng) - 0.5 * sf * sf));
    f.visit_frequency = visits(rng);
    f.distance_km =
        config.distance_median_km * std::exp(config.distance_dispersion * normal(rng));

    const double sr = config.auction_rate_dispersion;
    pop.auction_rate_[i] = config.auctions_per_day * std::exp(sr * normal(rng) - 0.5 * sr * sr);

    auto& t = pop.truth_[i];
    t.organic = oc.organic_intercept + oc.organic_frequency * std::log1p(f.visit_frequency) -
                oc.organic_distance * std::log1p(f.distance_km) + oc.organic_noise * normal(rng);
    organic_driver[i] = oc.organic_frequency * std::log1p(f.visit_frequency) -
                        oc.organic_distance * std::log1p(f.distance_km);
    const double wearin_driver = std::exp(-oc.wearin_frequency_decay * f.visit_frequency -
                                          oc.wearin_distance_decay * f.distance_km);
    t.wear_in = oc.wearin_floor +
                oc.wearin_scale * wearin_driver * std::exp(oc.wearin_noise * normal(rng));
    t.wear_out = oc.wearout_median * std::exp(oc.wearout_noise * normal(rng));

    f.logged_pcvr = sigmoid(t.organic + config.logged_pcvr_noise * normal(rng));
  }

  // Competing performance bidders bid harder on users whose features promise
  // organic visits.
  const double mean = std::accumulate(organic_driver.begin(), organic_driver.end(), 0.0) / n;
  double var = 0;
  for (double w : organic_driver) var += (w - mean) * (w - mean);
  const double sd = n > 1 ? std::sqrt(var / (n - 1)) : 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double z = sd > 0 ? (organic_driver[i] - mean) / sd : 0.0;
    pop.competitor_shift_[i] = config.confounding * config.competitor_log_sigma * z;
  }

  // Impressions in the prior period reflect how easily the user's slots are won.
  for (std::size_t i = 0; i < n; ++i) {
    const double activity =
        config.auctions_per_day > 0
            ? std::pow(pop.auction_rate_[i] / config.auctions_per_day, config.confounding)
            : 0.0;
    std::poisson_distribution<int> prior(config.auctions_per_day * activity * config.days *
                                         config.prior_win_rate *
                                         std::exp(-pop.competitor_shift_[i]));
    pop.users_[i].features.prior_impressions = prior(rng);
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  for (std::size_t k = 0; k < n; ++k) pop.users_[order[k]].arm = kAllArms[k % kNumArms];

  const double a = config.slot_ctr_mean * config.slot_ctr_concentration;
  const double b = (1.0 - config.slot_ctr_mean) * config.slot_ctr_concentration;
  std::gamma_distribution<double> ga(a, 1.0), gb(b, 1.0);
  pop.slot_ctr_.resize(static_cast<std::size_t>(config.num_slots));
  for (auto& ctr : pop.slot_ctr_) {
    const double x = ga(rng), y = gb(rng);
    ctr = x / (x + y);
  }
  return pop;
}

// ---------------------------------------------------------------------------
// Auctions
// ---------------------------------------------------------------------------

struct AuctionOutcome {
  bool won = false;
  Mechanism mechanism = Mechanism::kFirstPrice;
  Money price_paid;
  std::optional<Money> clearing_price;
  Money highest_competing_bid;
};

// Ties lose.
inline AuctionOutcome resolve_auction(Money own_bid, Money highest_competing, Mechanism mechanism) {
  if (own_bid < Money{}) throw std::invalid_argument("bid must be non-negative");
  AuctionOutcome out;
  out.mechanism = mechanism;
  out.highest_competing_bid = highest_competing;
  out.won = own_bid > highest_competing;
  if (!out.won) return out;
  if (mechanism == Mechanism::kSecondPrice) {
    out.price_paid = highest_competing;
    out.clearing_price = highest_competing;
  } else {
    out.price_paid = own_bid;
  }
  return out;
}

// Independent of the own bid, so the stream position never depends on it.
inline Money draw_competing_bid(const MarketConfig& config, double log_shift, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  const double z = normal(rng);
  const double v = std::exp(config.competitor_log_mu + log_shift + config.competitor_log_sigma * z);
  return Money::micros(std::max<std::int64_t>(1, std::llround(v)));
}

inline Mechanism draw_mechanism(const MarketConfig& config, Rng& rng) {
  return bernoulli(rng, config.second_price_fraction) ? Mechanism::kSecondPrice
                                                      : Mechanism::kFirstPrice;
}

inline double slot_log_shift(const MarketConfig& config, double slot_ctr) {
  return std::log(slot_ctr / config.slot_ctr_mean);
}

inline AuctionOutcome run_auction(Money own_bid, const MarketConfig& config, Rng& rng,
                                  double log_shift = 0.0) {
  const Money competing = draw_competing_bid(config, log_shift, rng);
  const Mechanism mechanism = draw_mechanism(config, rng);
  return resolve_auction(own_bid, competing, mechanism);
}

inline bool realize_click(double true_slot_ctr, Rng& rng) {
  if (!(true_slot_ctr >= 0.0 && true_slot_ctr <= 1.0))
    throw std::invalid_argument("click probability must be in [0,1]");
  return bernoulli(rng, true_slot_ctr);
}

// User-level attribution: the campaign outcome is the potential outcome of
// the user's final exposure state, one Bernoulli draw per campaign day, so
// E[visits] = days * p(s_final).
inline int realize_visits(const OutcomeParams& params, std::int64_t final_exposure, int days, Rng& rng) {
  if (final_exposure < 0) throw std::invalid_argument("exposure count must be non-negative");
  if (days < 0) throw std::invalid_argument("campaign days must be non-negative");
  const double p = true_visit_prob(params, final_exposure);
  int visits = 0;
  for (int d = 0; d < days; ++d) visits += bernoulli(rng, p) ? 1 : 0;
  return visits;
}

inline VisitLabel realize_visits(const Population& pop, std::size_t index, std::int64_t final_exposure,
                                 int days, Rng& rng) {
  VisitLabel label;
  label.user_id = pop[index].user_id;
  label.final_exposure = final_exposure;
  label.visits = realize_visits(GroundTruth::params(pop, index), final_exposure, days, rng);
  return label;
}

}  // namespace liftbid::market
