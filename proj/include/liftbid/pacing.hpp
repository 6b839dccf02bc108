// Copyright 2026 The liftbid Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "liftbid/domain.hpp"

namespace liftbid::pacing {

struct PacingConfig {
  double kappa = 0.5;
  double alpha_min = 0.01;
  double alpha_max = 1.0;
  double boost = 1.25;  // applied after a window with no spend
  int cadence_hours = 1;
  double initial_alpha = 0.5;

  void validate() const {
    if (!(alpha_min > 0 && alpha_min <= alpha_max && alpha_max <= 1.0))
      throw std::invalid_argument("pacing clamp must satisfy 0 < alpha_min <= alpha_max <= 1");
    if (!(kappa > 0)) throw std::invalid_argument("pacing kappa must be positive");
    if (!(boost >= 1.0)) throw std::invalid_argument("pacing boost must be >= 1");
    if (cadence_hours <= 0) throw std::invalid_argument("pacing cadence must be positive");
  }
};

struct PacingPoint {
  int hour = 0;  // end of the window
  double alpha = 0;  // alpha in effect for the next window
  Money window_spend;
  friend bool operator==(const PacingPoint&, const PacingPoint&) = default;
};

// Budget pacing multiplier for one arm. Spend is recorded per won auction;
// alpha is recomputed once per cadence window.
class PacingState {
 public:
  PacingState(const PacingConfig& config, Money budget, int horizon_hours)
      : config_(config), budget_(budget), horizon_hours_(horizon_hours) {
    config_.validate();
    if (budget < Money{}) throw std::invalid_argument("budget must be non-negative");
    if (horizon_hours <= 0) throw std::invalid_argument("campaign horizon must be positive");
    alpha_ = std::clamp(config_.initial_alpha, config_.alpha_min, config_.alpha_max);
  }

  double alpha() const { return alpha_; }
  Money budget() const { return budget_; }
  Money spend() const { return spend_; }
  Money window_spend() const { return window_spend_; }
  Money remaining() const { return budget_ - spend_; }
  const PacingConfig& config() const { return config_; }
  const std::vector<PacingPoint>& trajectory() const { return trajectory_; }

  bool can_afford(Money worst_case) const { return spend_ + worst_case <= budget_; }

  void record_spend(Money price) {
    spend_ += price;
    window_spend_ += price;
  }

  // Called at the end of each cadence window; returns the new alpha.
  double update_alpha(int clock_hour) {
    const double target_rate = budget_.as_double() / horizon_hours_;
    const double actual_rate = window_spend_.as_double() / config_.cadence_hours;
    alpha_ = next_alpha(alpha_, target_rate, actual_rate, config_);
    trajectory_.push_back({clock_hour, alpha_, window_spend_});
    window_spend_ = Money{};
    return alpha_;
  }

  static double next_alpha(double alpha, double target_rate, double actual_rate,
                           const PacingConfig& config) {
    double next;
    if (actual_rate <= 0.0)
      next = alpha * config.boost;
    else
      next = alpha * std::pow(target_rate / actual_rate, config.kappa);
    return std::clamp(next, config.alpha_min, config.alpha_max);
  }

 private:
  PacingConfig config_;
  Money budget_;
  int horizon_hours_;
  double alpha_ = 1.0;
  Money spend_;
  Money window_spend_;
  std::vector<PacingPoint> trajectory_;
};

}  // namespace liftbid::pacing
