// Copyright 2026 The liftbid Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>

#include "liftbid/domain.hpp"
#include "liftbid/learning/bundle.hpp"
#include "liftbid/learning/outcome.hpp"
#include "liftbid/pctr.hpp"

namespace liftbid::bidding {

using learning::BundleMode;
using learning::ModelBundle;

inline BundleMode required_bundle_mode(Arm arm) {
  switch (arm) {
    case Arm::kBaseline: return BundleMode::kPcvr;
    case Arm::kNaive: return BundleMode::kErm;
    case Arm::kUnbiased: return BundleMode::kIpsClipped;
    case Arm::kNoclip: return BundleMode::kIps;
    case Arm::kControl: break;
  }
  throw std::invalid_argument("control arm has no model");
}

class BidderVariant {
 public:
  static BidderVariant control() { return BidderVariant(Arm::kControl, nullptr, Money{}); }

  BidderVariant(Arm tag, std::shared_ptr<const ModelBundle> bundle, Money cpc)
      : tag_(tag), bundle_(std::move(bundle)), cpc_(cpc) {
    if (tag_ == Arm::kControl) return;
    if (!bundle_) throw std::invalid_argument(std::string(arm_name(tag_)) + " bidder needs a model bundle");
    if (bundle_->mode != required_bundle_mode(tag_))
      throw std::invalid_argument(std::string(arm_name(tag_)) + " bidder needs a '" +
                                  std::string(learning::bundle_mode_name(required_bundle_mode(tag_))) +
                                  "' bundle, got '" +
                                  std::string(learning::bundle_mode_name(bundle_->mode)) + "'");
    if (cpc_ < Money{}) throw std::invalid_argument("CPC must be non-negative");
  }

  Arm tag() const { return tag_; }
  bool bids() const { return tag_ != Arm::kControl; }
  const ModelBundle& bundle() const { return *bundle_; }
  Money cpc() const { return cpc_; }

 private:
  Arm tag_;
  std::shared_ptr<const ModelBundle> bundle_;
  Money cpc_;
};

// Model outputs for one user that do not depend on the impression count;
// computed once per user and reused for every request.
struct UserScores {
  std::array<double, kNumBins> per_bin{};  // lift variants
  double pcvr = 0;                         // baseline
};

inline UserScores prepare_scores(const BidderVariant& variant, const Features& f) {
  UserScores s;
  if (!variant.bids()) return s;
  const auto& b = variant.bundle();
  if (b.is_lift())
    s.per_bin = b.outcome->predict_all(f);
  else
    s.pcvr = b.pcvr->predict(f);
  return s;
}

struct BidDecision {
  double raw_score = 0;  // predicted lift or pCVR
  double phi = 0;        // normalized and floored at zero
  Money bid;
};

inline BidDecision bid_from_scores(const BidderVariant& variant, const UserScores& scores,
                                   std::int64_t count, double pctr, double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha must be in (0,1]");
  const auto& b = variant.bundle();
  BidDecision d;
  d.raw_score = b.is_lift() ? learning::predict_lift(scores.per_bin, count) : scores.pcvr;
  d.phi = std::max(0.0, learning::normalize_phi(d.raw_score, b.normalizer));
  const double cpc = variant.cpc().as_double();
  const double value = std::clamp(d.phi * cpc * pctr * alpha, 0.0, cpc);
  d.bid = Money::from_double_micros(value);
  return d;
}

// Returns nothing for the control arm, which never bids.
inline std::optional<BidDecision> compute_bid(const BidderVariant& variant, const Features& f,
                                              std::int64_t count, int slot, double alpha) {
  if (!variant.bids()) return std::nullopt;
  if (count < 0) throw std::invalid_argument("impression count must be non-negative");
  return bid_from_scores(variant, prepare_scores(variant, f), count,
                         variant.bundle().pctr.predict(slot), alpha);
}

// Impressions (won auctions) per user; one store per arm.
class ImpressionStore {
 public:
  std::int64_t count(UserId user) const {
    const auto it = counts_.find(user);
    return it == counts_.end() ? 0 : it->second;
  }
  std::int64_t record_win(UserId user) { return ++counts_[user]; }
  std::size_t users() const { return counts_.size(); }

 private:
  std::unordered_map<UserId, std::int64_t> counts_;
};

}  // namespace liftbid::bidding
