// Copyright 2026 The liftbid Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>

#include "json.hpp"
#include "liftbid/domain.hpp"

namespace liftbid::bidding {

// Per-slot historical CTR smoothed with a Beta(a, b) prior. Unknown slots
// fall back to the prior mean.
class PctrModel {
 public:
  struct SlotStats {
    std::int64_t clicks = 0;
    std::int64_t impressions = 0;
    friend bool operator==(const SlotStats&, const SlotStats&) = default;
  };

  PctrModel() = default;
  PctrModel(double prior_a, double prior_b) : a_(prior_a), b_(prior_b) {
    if (!(a_ > 0 && b_ > 0)) throw std::invalid_argument("Beta prior parameters must be positive");
  }

  void observe(int slot, bool clicked) {
    auto& s = slots_[slot];
    ++s.impressions;
    if (clicked) ++s.clicks;
  }
  void observe(const ImpressionLog& log) {
    if (log.won) observe(log.slot_id, log.clicked);
  }

  double predict(int slot) const {
    const auto it = slots_.find(slot);
    const double clicks = it == slots_.end() ? 0.0 : static_cast<double>(it->second.clicks);
    const double impressions = it == slots_.end() ? 0.0 : static_cast<double>(it->second.impressions);
    return (clicks + a_) / (impressions + a_ + b_);
  }

  double prior_a() const { return a_; }
  double prior_b() const { return b_; }
  const std::map<int, SlotStats>& slots() const { return slots_; }

  nlohmann::json to_json() const {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& [slot, s] : slots_) rows.push_back({slot, s.clicks, s.impressions});
    return {{"prior_a", a_}, {"prior_b", b_}, {"slots", rows}};
  }
  static PctrModel from_json(const nlohmann::json& j) {
    PctrModel m(j.at("prior_a").get<double>(), j.at("prior_b").get<double>());
    for (const auto& row : j.at("slots"))
      m.slots_[row.at(0).get<int>()] = {row.at(1).get<std::int64_t>(), row.at(2).get<std::int64_t>()};
    return m;
  }
  friend bool operator==(const PctrModel&, const PctrModel&) = default;

 private:
  double a_ = 1.0;
  double b_ = 99.0;
  std::map<int, SlotStats> slots_;
};

}  // namespace liftbid::bidding
