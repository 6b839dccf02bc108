// Copyright 2026 The liftbid Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <future>
#include <memory>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "liftbid/bidding.hpp"
#include "liftbid/domain.hpp"
#include "liftbid/harness/metrics.hpp"
#include "liftbid/harness/simulation.hpp"
#include "liftbid/learning/bundle.hpp"
#include "liftbid/market.hpp"
#include "liftbid/pacing.hpp"
#include "liftbid/pctr.hpp"
#include "liftbid/random.hpp"

namespace liftbid::harness {

// Historical campaign that produces the biased training logs.
struct LoggingConfig {
  // Users in the historical campaign; drawn from the same distribution as
  // the experiment population but independently of it.
  std::size_t population = 50'000;
  int days = 7;
  double alpha = 0.3;  // fixed multiplier of the performance-based logger
  double pctr = 0.01;  // slot CTR assumed before any pCTR history exists
};

struct AbConfig {
  int days = 7;
  Money cpc = Money::micros(100'000);
  // Baseline budget per arm user per day; arm budgets scale it by their ratio.
  Money budget_per_user_day = Money::micros(300);
  std::array<double, kNumArms> budget_ratios = {1.0, 0.1, 0.1, 0.1, 0.0};
  bool parallel_arms = false;

  double budget_ratio(Arm arm) const { return budget_ratios[static_cast<std::size_t>(arm)]; }
};

struct ExperimentPlan {
  market::MarketConfig market;
  learning::LearnerConfig learner;
  pacing::PacingConfig pacing;
  LoggingConfig logging;
  AbConfig ab;
  std::uint64_t seed = 1;

  void validate() const {
    market.validate();
    pacing.validate();
    if (logging.population == 0) throw std::invalid_argument("logging population must be positive");
    if (logging.days < 0 || ab.days < 0) throw std::invalid_argument("campaign days must be non-negative");
    if (!(logging.alpha > 0 && logging.alpha <= 1)) throw std::invalid_argument("logging alpha must be in (0,1]");
    if (!(logging.pctr > 0 && logging.pctr < 1)) throw std::invalid_argument("logging pctr must be in (0,1)");
    if (ab.cpc < Money{}) throw std::invalid_argument("CPC must be non-negative");
    if (ab.budget_per_user_day < Money{}) throw std::invalid_argument("budget must be non-negative");
    for (double r : ab.budget_ratios)
      if (!(r >= 0)) throw std::invalid_argument("budget ratios must be non-negative");
  }
};

// The two populations of a run share the market distribution but come from
// separate substreams.
inline market::Population logging_population(const ExperimentPlan& plan, std::uint64_t seed) {
  auto config = plan.market;
  config.population_size = plan.logging.population;
  return market::generate_population(config, substream_seed(seed, "logging-population"));
}

inline market::Population experiment_population(const ExperimentPlan& plan, std::uint64_t seed) {
  return market::generate_population(plan.market, substream_seed(seed, "ab-population"));
}

struct LoggingResult {
  std::vector<UserProfile> users;
  std::vector<VisitLabel> labels;
  bidding::PctrModel pctr;
  std::int64_t requests = 0;
};

// Runs the performance-based logger over the whole historical population.
// Every request is passed to `sink`; the pCTR history is fitted on the fly.
template <class Sink>
LoggingResult run_logging_campaign(const ExperimentPlan& plan, std::uint64_t seed, Sink&& sink) {
  plan.validate();
  const auto pop = logging_population(plan, seed);
  std::vector<std::size_t> members(pop.size());
  std::iota(members.begin(), members.end(), std::size_t{0});
  LoggingPolicy policy(pop, members, plan.ab.cpc, plan.logging.alpha, plan.logging.pctr,
                       plan.market.confounding);

  LoggingResult out;
  auto campaign = run_campaign(pop, members, plan.market, plan.logging.days, policy, std::nullopt, seed,
                               "logging", [&](const ImpressionLog& log) {
                                 out.pctr.observe(log);
                                 sink(log);
                               });
  out.users = pop.users();
  out.labels = std::move(campaign.labels);
  out.requests = campaign.requests;
  return out;
}

inline LoggingResult run_logging_campaign(const ExperimentPlan& plan, std::uint64_t seed) {
  return run_logging_campaign(plan, seed, [](const ImpressionLog&) {});
}

// Joins labels to user features on user_id. Users without a label are an
// error; row order follows the labels.
inline learning::TrainingData build_training_data(std::span<const UserProfile> users,
                                                  std::span<const VisitLabel> labels) {
  std::unordered_map<UserId, const Features*> by_id;
  by_id.reserve(users.size());
  for (const auto& u : users) by_id.emplace(u.user_id, &u.features);
  learning::TrainingData data;
  data.features.reserve(labels.size());
  for (const auto& l : labels) {
    const auto it = by_id.find(l.user_id);
    if (it == by_id.end()) throw std::invalid_argument("label for unknown user " + std::to_string(l.user_id));
    data.features.push_back(*it->second);
    data.final_exposure.push_back(l.final_exposure);
    data.visits.push_back(l.visits);
  }
  return data;
}

using BundleSet = std::array<std::shared_ptr<const learning::ModelBundle>, kNumArms>;

inline BundleSet train_all_bundles(const learning::TrainingData& data, const bidding::PctrModel& pctr,
                                   const learning::LearnerConfig& learner, std::uint64_t seed) {
  BundleSet out;
  for (Arm arm : kAllArms) {
    if (arm == Arm::kControl) continue;
    out[static_cast<std::size_t>(arm)] = std::make_shared<const learning::ModelBundle>(
        learning::train_bundle(data, pctr, bidding::required_bundle_mode(arm), learner, seed));
  }
  return out;
}

inline bidding::BidderVariant make_variant(Arm arm, const BundleSet& bundles, Money cpc) {
  if (arm == Arm::kControl) return bidding::BidderVariant::control();
  return bidding::BidderVariant(arm, bundles[static_cast<std::size_t>(arm)], cpc);
}

struct ArmResult {
  Arm arm = Arm::kControl;
  double budget_share = 0;
  Money budget;
  Money spend;
  std::vector<VisitLabel> labels;
  std::vector<pacing::PacingPoint> pacing;
  std::int64_t requests = 0;
};

inline Money arm_budget(const AbConfig& ab, Arm arm, std::size_t users) {
  const double micros = ab.budget_ratio(arm) * ab.budget_per_user_day.as_double() *
                        static_cast<double>(users) * static_cast<double>(ab.days);
  return Money::from_double_micros(micros);
}

// Runs one arm of the experiment. Requests go to `sink`.
template <class Sink>
ArmResult run_arm(const ExperimentPlan& plan, const market::Population& pop, Arm arm,
                  const BundleSet& bundles, std::uint64_t seed, Sink&& sink) {
  const auto members = pop.arm_members(arm);
  const auto variant = make_variant(arm, bundles, plan.ab.cpc);
  VariantPolicy policy(pop, members, variant);
  ArmResult out;
  out.arm = arm;
  out.budget_share = plan.ab.budget_ratio(arm);
  out.budget = arm_budget(plan.ab, arm, members.size());
  std::optional<pacing::PacingState> state;
  if (variant.bids() && plan.ab.days > 0)
    state.emplace(plan.pacing, out.budget, plan.ab.days * kHoursPerDay);
  auto campaign = run_campaign(pop, members, plan.market, plan.ab.days, policy, std::move(state), seed,
                               "ab/" + std::string(arm_name(arm)), sink);
  out.labels = std::move(campaign.labels);
  out.requests = campaign.requests;
  if (campaign.pacing) {
    out.spend = campaign.pacing->spend();
    out.pacing = campaign.pacing->trajectory();
  }
  return out;
}

// Runs every arm and folds its requests into per-arm accumulators. The
// optional sink factory returns a per-arm log consumer (for raw log files).
// Arms are independent tasks; results do not depend on scheduling.
struct AbResult {
  std::vector<ArmResult> arms;
  MetricsReport report;
};

template <class SinkFactory>
AbResult run_ab_experiment(const ExperimentPlan& plan, const market::Population& pop, const BundleSet& bundles,
                           std::uint64_t seed, SinkFactory&& make_sink) {
  plan.validate();
  for (Arm arm : kAllArms)
    if (arm != Arm::kControl && !bundles[static_cast<std::size_t>(arm)])
      throw std::invalid_argument(std::string(arm_name(arm)) + " arm has no bundle");

  std::vector<ArmAccumulator> acc;
  for (Arm arm : kAllArms) acc.emplace_back(arm, plan.ab.cpc, plan.ab.budget_ratio(arm));

  auto task = [&](std::size_t k) {
    const Arm arm = kAllArms[k];
    auto sink = make_sink(arm);
    return run_arm(plan, pop, arm, bundles, seed, [&](const ImpressionLog& log) {
      acc[k].add(log);
      sink(log);
    });
  };

  AbResult out;
  if (plan.ab.parallel_arms) {
    std::vector<std::future<ArmResult>> futures;
    for (std::size_t k = 0; k < kNumArms; ++k) futures.push_back(std::async(std::launch::async, task, k));
    for (auto& f : futures) out.arms.push_back(f.get());
  } else {
    for (std::size_t k = 0; k < kNumArms; ++k) out.arms.push_back(task(k));
  }

  std::vector<std::vector<VisitLabel>> labels;
  std::vector<std::vector<pacing::PacingPoint>> traj;
  std::vector<Arm> arms;
  for (const auto& a : out.arms) {
    labels.push_back(a.labels);
    traj.push_back(a.pacing);
    arms.push_back(a.arm);
  }
  out.report = assemble_report(plan.ab.cpc, acc, labels, traj, arms);
  return out;
}

inline AbResult run_ab_experiment(const ExperimentPlan& plan, const market::Population& pop,
                                  const BundleSet& bundles, std::uint64_t seed) {
  return run_ab_experiment(plan, pop, bundles, seed, [](Arm) { return [](const ImpressionLog&) {}; });
}

// Logging campaign, training and the five-arm experiment in one call.
struct PipelineResult {
  LoggingResult logging;
  BundleSet bundles;
  AbResult ab;
};

inline PipelineResult run_pipeline(const ExperimentPlan& plan, std::uint64_t seed) {
  PipelineResult out;
  out.logging = run_logging_campaign(plan, seed);
  const auto data = build_training_data(out.logging.users, out.logging.labels);
  out.bundles = train_all_bundles(data, out.logging.pctr, plan.learner, seed);
  const auto pop = experiment_population(plan, seed);
  out.ab = run_ab_experiment(plan, pop, out.bundles, seed);
  return out;
}

}  // namespace liftbid::harness
