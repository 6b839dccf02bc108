// Copyright 2026 The liftbid Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "liftbid/domain.hpp"
#include "liftbid/pacing.hpp"
#include "liftbid/stats.hpp"

namespace liftbid::harness {

// A metric value with its standard error; an empty value means the metric is
// undefined (a vanishing denominator), never zero.
struct Estimate {
  std::optional<double> value;
  std::optional<double> se;
  friend bool operator==(const Estimate&, const Estimate&) = default;
};

struct ArmMetrics {
  Arm arm = Arm::kControl;
  std::int64_t users = 0;
  std::int64_t bid_requests = 0;
  std::int64_t impressions = 0;
  std::int64_t clicks = 0;
  std::int64_t second_price_wins = 0;
  Money spend;
  Money cpc_charge;
  double budget_share = 0;

  Estimate ctr;                    // clicks / impressions
  Estimate user_ctr;               // mean over users with >= 1 impression
  Estimate mean_visits;            // per user
  Estimate visit_lift;             // mean visits minus control
  Estimate visit_lift_per_budget;  // visit lift / budget share
  Estimate cpia;                   // CPC charge / incremental visits
  Estimate inv_cost_share;         // inventory cost / CPC charge
  Estimate avg_inv_cost;           // inventory cost / impressions
  Estimate win_rate;               // impressions / bid requests
  Estimate price_diff;             // mean (bid - clearing) on won second-price auctions

  friend bool operator==(const ArmMetrics&, const ArmMetrics&) = default;
};

struct MetricDef {
  std::string_view name;
  Estimate ArmMetrics::*field;
};

inline constexpr std::array<MetricDef, 10> kEstimateMetrics = {{
    {"ctr", &ArmMetrics::ctr},
    {"user_ctr", &ArmMetrics::user_ctr},
    {"mean_visits", &ArmMetrics::mean_visits},
    {"visit_lift", &ArmMetrics::visit_lift},
    {"visit_lift_per_budget", &ArmMetrics::visit_lift_per_budget},
    {"cpia", &ArmMetrics::cpia},
    {"inv_cost_share", &ArmMetrics::inv_cost_share},
    {"avg_inv_cost", &ArmMetrics::avg_inv_cost},
    {"win_rate", &ArmMetrics::win_rate},
    {"price_diff", &ArmMetrics::price_diff},
}};

// Users binned by the phi of their first bid request: [0,0.5), [0.5,1.5),
// ..., [5.5,6.5]; bin 7 collects phi > 6.5.
inline constexpr int kFig3Bins = 7;

inline int fig3_bin(double phi) {
  if (phi < 0.5) return 0;
  if (phi > 6.5) return kFig3Bins;
  return std::min(kFig3Bins - 1, static_cast<int>(std::floor(phi + 0.5)));
}

struct Fig3Row {
  Arm arm = Arm::kControl;
  int bin = 0;
  std::int64_t users = 0;
  Estimate mean_visits;
  friend bool operator==(const Fig3Row&, const Fig3Row&) = default;
};

struct PacingRow {
  Arm arm = Arm::kControl;
  pacing::PacingPoint point;
  friend bool operator==(const PacingRow&, const PacingRow&) = default;
};

struct MetricsReport {
  Money cpc;
  std::vector<ArmMetrics> arms;
  std::vector<PacingRow> pacing;
  std::vector<Fig3Row> fig3;

  const ArmMetrics* find(Arm arm) const {
    for (const auto& a : arms)
      if (a.arm == arm) return &a;
    return nullptr;
  }
  friend bool operator==(const MetricsReport&, const MetricsReport&) = default;
};

// Streaming per-arm aggregation over impression logs; finish() joins the
// visit labels.
class ArmAccumulator {
 public:
  ArmAccumulator(Arm arm, Money cpc, double budget_share)
      : arm_(arm), cpc_(cpc), budget_share_(budget_share) {}

  void add(const ImpressionLog& log) {
    auto& user = users_[log.user_id];
    if (!user.has_phi) {
      user.has_phi = true;
      user.first_phi = log.phi;
    }
    if (log.bid <= Money{}) return;
    ++bid_requests_;
    win_rate_.add(log.won ? 1.0 : 0.0, 1.0);
    if (!log.won) return;
    ++impressions_;
    ++user.impressions;
    spend_ += log.price_paid;
    const double click = log.clicked ? 1.0 : 0.0;
    if (log.clicked) {
      ++clicks_;
      ++user.clicks;
    }
    ctr_.add(click, 1.0);
    avg_inv_cost_.add(log.price_paid.as_double(), 1.0);
    inv_cost_share_.add(log.price_paid.as_double(), cpc_.as_double() * click);
    if (log.mechanism == Mechanism::kSecondPrice && log.clearing_price) {
      ++second_price_wins_;
      price_diff_.add((log.bid - *log.clearing_price).as_double());
    }
  }

  // Mean-visit moments for the control contrast.
  static stats::Moments visit_moments(std::span<const VisitLabel> labels) {
    stats::Moments m;
    for (const auto& l : labels) m.add(l.visits);
    return m;
  }

  ArmMetrics finish(std::span<const VisitLabel> labels, const stats::Moments& control,
                    std::vector<Fig3Row>* fig3 = nullptr) const {
    ArmMetrics out;
    out.arm = arm_;
    out.users = static_cast<std::int64_t>(labels.size());
    out.bid_requests = bid_requests_;
    out.impressions = impressions_;
    out.clicks = clicks_;
    out.second_price_wins = second_price_wins_;
    out.spend = spend_;
    out.cpc_charge = cpc_ * clicks_;
    out.budget_share = budget_share_;

    const stats::Moments visits = visit_moments(labels);
    if (visits.count() > 0) out.mean_visits = {visits.mean(), visits.standard_error()};

    if (arm_ == Arm::kControl) {
      if (visits.count() > 0) out.visit_lift = {0.0, 0.0};
      return out;
    }

    out.ctr = ratio(ctr_);
    out.avg_inv_cost = ratio(avg_inv_cost_);
    out.inv_cost_share = ratio(inv_cost_share_);
    out.win_rate = ratio(win_rate_);
    if (price_diff_.count() > 0) out.price_diff = {price_diff_.mean(), price_diff_.standard_error()};

    stats::Moments user_ctr;
    for (const auto& l : labels) {
      const auto it = users_.find(l.user_id);
      if (it != users_.end() && it->second.impressions > 0)
        user_ctr.add(static_cast<double>(it->second.clicks) / static_cast<double>(it->second.impressions));
    }
    if (user_ctr.count() > 0) out.user_ctr = {user_ctr.mean(), user_ctr.standard_error()};

    if (visits.count() > 0 && control.count() > 0) {
      const double lift = visits.mean() - control.mean();
      std::optional<double> se;
      if (visits.standard_error() && control.standard_error())
        se = std::hypot(*visits.standard_error(), *control.standard_error());
      out.visit_lift = {lift, se};
      if (budget_share_ > 0)
        out.visit_lift_per_budget = {lift / budget_share_,
                                     se ? std::optional<double>(*se / budget_share_) : std::nullopt};
      const double incremental = lift * static_cast<double>(out.users);
      if (incremental > 0 && clicks_ > 0) {
        const double cpia = out.cpc_charge.as_double() / incremental;
        out.cpia = {cpia, se ? std::optional<double>(cpia * *se / lift) : std::nullopt};
      }
    }

    if (fig3) {
      std::array<stats::Moments, kFig3Bins + 1> bins;
      for (const auto& l : labels) {
        const auto it = users_.find(l.user_id);
        if (it == users_.end() || !it->second.has_phi) continue;
        bins[static_cast<std::size_t>(fig3_bin(it->second.first_phi))].add(l.visits);
      }
      for (int b = 0; b <= kFig3Bins; ++b) {
        const auto& m = bins[static_cast<std::size_t>(b)];
        Fig3Row row{arm_, b, m.count(), {}};
        if (m.count() > 0) row.mean_visits = {m.mean(), m.standard_error()};
        fig3->push_back(row);
      }
    }
    return out;
  }

 private:
  static Estimate ratio(const stats::RatioOfSums& r) { return {r.value(), r.standard_error()}; }

  struct UserTally {
    std::int64_t impressions = 0;
    std::int64_t clicks = 0;
    double first_phi = 0;
    bool has_phi = false;
  };

  Arm arm_;
  Money cpc_;
  double budget_share_;
  std::int64_t bid_requests_ = 0, impressions_ = 0, clicks_ = 0, second_price_wins_ = 0;
  Money spend_;
  stats::RatioOfSums ctr_, avg_inv_cost_, inv_cost_share_, win_rate_;
  stats::Moments price_diff_;
  std::unordered_map<UserId, UserTally> users_;
};

struct ArmRun {
  Arm arm = Arm::kControl;
  double budget_share = 0;
  std::vector<ImpressionLog> logs;
  std::vector<VisitLabel> labels;
  std::vector<pacing::PacingPoint> pacing;
};

// Assembles the report from finished per-arm accumulators and labels. The
// control arm, when present, anchors visit lift.
inline MetricsReport assemble_report(Money cpc, std::span<const ArmAccumulator> accumulators,
                                     std::span<const std::vector<VisitLabel>> labels,
                                     std::span<const std::vector<pacing::PacingPoint>> trajectories,
                                     std::span<const Arm> arms) {
  MetricsReport report;
  report.cpc = cpc;
  stats::Moments control;
  for (std::size_t k = 0; k < arms.size(); ++k)
    if (arms[k] == Arm::kControl) control = ArmAccumulator::visit_moments(labels[k]);
  for (std::size_t k = 0; k < arms.size(); ++k) {
    report.arms.push_back(accumulators[k].finish(labels[k], control,
                                                 arms[k] == Arm::kControl ? nullptr : &report.fig3));
    for (const auto& p : trajectories[k]) report.pacing.push_back({arms[k], p});
  }
  return report;
}

// Fold over complete in-memory runs.
inline MetricsReport compute_metrics(std::span<const ArmRun> runs, Money cpc) {
  std::vector<ArmAccumulator> acc;
  std::vector<std::vector<VisitLabel>> labels;
  std::vector<std::vector<pacing::PacingPoint>> traj;
  std::vector<Arm> arms;
  for (const auto& run : runs) {
    ArmAccumulator a(run.arm, cpc, run.budget_share);
    for (const auto& log : run.logs) a.add(log);
    acc.push_back(std::move(a));
    labels.push_back(run.labels);
    traj.push_back(run.pacing);
    arms.push_back(run.arm);
  }
  return assemble_report(cpc, acc, labels, traj, arms);
}

// Value divided by the baseline arm's value; undefined when either is.
inline Estimate relative_to(const Estimate& e, const std::optional<double>& reference) {
  if (!e.value || !reference || *reference == 0.0) return {};
  Estimate out{*e.value / *reference, std::nullopt};
  if (e.se) out.se = *e.se / std::abs(*reference);
  return out;
}

inline std::optional<double> baseline_value(const MetricsReport& report, Estimate ArmMetrics::*field) {
  const auto* base = report.find(Arm::kBaseline);
  if (!base) return std::nullopt;
  return (base->*field).value;
}

// Mean over bidding arms with a defined value.
inline std::optional<double> bidding_average(const MetricsReport& report, Estimate ArmMetrics::*field) {
  double sum = 0;
  int n = 0;
  for (const auto& a : report.arms) {
    if (a.arm == Arm::kControl || !(a.*field).value) continue;
    sum += *(a.*field).value;
    ++n;
  }
  if (n == 0) return std::nullopt;
  return sum / n;
}

}  // namespace liftbid::harness
