// Copyright 2026 The liftbid Authors
// SPDX-License-Identifier: Apache-2.0

// Small end-to-end worlds shared by the unit tests.

#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <random>
#include <string>

#include <unistd.h>

#include "liftbid/liftbid.hpp"

namespace liftbid::testing {

// A plan that trains in well under a second: 12k logged users, 5k
// experiment users, short boosting.
inline harness::ExperimentPlan small_plan(std::uint64_t seed = 11) {
  harness::ExperimentPlan plan;
  plan.seed = seed;
  plan.market.population_size = 5'000;
  plan.logging.population = 12'000;
  plan.learner.rounds = 40;
  return plan;
}

struct TrainedWorld {
  harness::ExperimentPlan plan;
  harness::LoggingResult logging;
  learning::TrainingData data;
  harness::BundleSet bundles;
};

inline TrainedWorld train_world(const harness::ExperimentPlan& plan, std::uint64_t seed) {
  TrainedWorld w;
  w.plan = plan;
  w.logging = harness::run_logging_campaign(plan, seed);
  w.data = harness::build_training_data(w.logging.users, w.logging.labels);
  w.bundles = harness::train_all_bundles(w.data, w.logging.pctr, plan.learner, seed);
  return w;
}

// Trained once per test binary.
inline const TrainedWorld& shared_world() {
  static const TrainedWorld world = train_world(small_plan(), 11);
  return world;
}

// Fresh scratch directory under the system temp dir, private to this process.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir =
      std::filesystem::temp_directory_path() / ("liftbid_test_" + name + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace liftbid::testing
