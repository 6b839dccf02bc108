// Copyright 2026 The liftbid Authors
// SPDX-License-Identifier: Apache-2.0

// Umbrella header for the simulator, learners, bidder and harness. The YAML
// config loader lives in liftbid/config.hpp and needs yaml-cpp.

#pragma once

#include "liftbid/bidding.hpp"
#include "liftbid/domain.hpp"
#include "liftbid/harness/experiment.hpp"
#include "liftbid/harness/io.hpp"
#include "liftbid/harness/metrics.hpp"
#include "liftbid/harness/simulation.hpp"
#include "liftbid/learning/bundle.hpp"
#include "liftbid/learning/losses.hpp"
#include "liftbid/learning/outcome.hpp"
#include "liftbid/learning/propensity.hpp"
#include "liftbid/learning/regressor.hpp"
#include "liftbid/market.hpp"
#include "liftbid/pacing.hpp"
#include "liftbid/pctr.hpp"
#include "liftbid/random.hpp"
#include "liftbid/stats.hpp"
