// Copyright 2026 The liftbid Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "liftbid/domain.hpp"
#include "liftbid/learning/propensity.hpp"
#include "liftbid/learning/regressor.hpp"

namespace liftbid::learning {

enum class TrainingMode { kErm, kIps, kIpsClipped };

inline std::string_view training_mode_name(TrainingMode m) {
  switch (m) {
    case TrainingMode::kErm: return "erm";
    case TrainingMode::kIps: return "ips";
    case TrainingMode::kIpsClipped: return "ips-clipped";
  }
  return "?";
}

inline TrainingMode training_mode_from_name(std::string_view s) {
  if (s == "erm") return TrainingMode::kErm;
  if (s == "ips") return TrainingMode::kIps;
  if (s == "ips-clipped") return TrainingMode::kIpsClipped;
  throw std::invalid_argument("unknown training mode '" + std::string(s) + "'");
}

// User-level training table: one row per logged user, labels joined on user.
struct TrainingData {
  std::vector<Features> features;
  std::vector<std::int64_t> final_exposure;
  std::vector<double> visits;

  std::size_t size() const { return features.size(); }
  std::vector<int> bins() const {
    std::vector<int> out;
    out.reserve(final_exposure.size());
    for (auto s : final_exposure) out.push_back(exposure_bin_index(s));
    return out;
  }
  void check() const {
    if (features.size() != final_exposure.size() || features.size() != visits.size())
      throw std::invalid_argument("training table columns differ in length");
  }
};

struct WeightDiagnostics {
  double max_weight = 0;
  std::size_t large_weight_count = 0;
};

struct OutcomePredictor {
  TrainingMode mode = TrainingMode::kErm;
  std::vector<Regressor> per_bin;  // kNumBins entries

  // Predicted expected campaign visits in bin `b`, clamped at zero.
  double predict(int b, const Features& f) const {
    return std::max(0.0, learning::predict(per_bin.at(static_cast<std::size_t>(b)), f.as_array()));
  }
  std::array<double, kNumBins> predict_all(const Features& f) const {
    std::array<double, kNumBins> out{};
    const auto x = f.as_array();
    for (int b = 0; b < kNumBins; ++b)
      out[b] = std::max(0.0, learning::predict(per_bin[static_cast<std::size_t>(b)], x));
    return out;
  }
};

// Per-sample weights for one training mode.
inline std::vector<double> training_weights(const TrainingData& data, std::span<const int> bins,
                                            const PropensityModel* propensity, TrainingMode mode,
                                            const LearnerConfig& config,
                                            WeightDiagnostics* diagnostics = nullptr) {
  std::vector<double> w(data.size(), 1.0);
  if (mode == TrainingMode::kErm) return w;
  if (propensity == nullptr) throw std::invalid_argument("IPS training needs a propensity model");
  if (mode == TrainingMode::kIpsClipped && !propensity->clip_thresholds)
    throw std::invalid_argument("clipped IPS training needs a clipped propensity model");
  WeightDiagnostics diag;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto scores = mode == TrainingMode::kIpsClipped ? propensity->scores(data.features[i])
                                                          : propensity->raw_scores(data.features[i]);
    const double e = scores[bins[i]];
    if (!(e > 0.0)) throw NonPositivePropensity("propensity score must be positive");
    w[i] = 1.0 / e;
    diag.max_weight = std::max(diag.max_weight, w[i]);
    if (w[i] > config.large_weight_warning) ++diag.large_weight_count;
  }
  if (diagnostics) *diagnostics = diag;
  return w;
}

inline OutcomePredictor fit_outcome_models(const TrainingData& data, const PropensityModel* propensity,
                                           TrainingMode mode, const LearnerConfig& config,
                                           WeightDiagnostics* diagnostics = nullptr) {
  data.check();
  const auto bins = data.bins();
  require_bin_population(bins, config.min_per_bin);
  const auto weights = training_weights(data, bins, propensity, mode, config, diagnostics);

  OutcomePredictor out;
  out.mode = mode;
  out.per_bin.reserve(kNumBins);
  for (int b = 0; b < kNumBins; ++b) {
    std::vector<FeatureVector> x;
    std::vector<double> y, w;
    for (std::size_t i = 0; i < data.size(); ++i) {
      if (bins[i] != b) continue;
      x.push_back(data.features[i].as_array());
      y.push_back(data.visits[i]);
      w.push_back(weights[i]);
    }
    out.per_bin.push_back(fit_regressor(WeightedSample{x, y, w}, config));
  }
  return out;
}

// Predicted lift of the next impression for a user currently at `count`
// impressions, given the per-bin outcome predictions. Cross-bin differences
// are amortized over the impressions separating the bins' lower edges; the
// open last bin has zero lift.
inline double predict_lift(const std::array<double, kNumBins>& per_bin, std::int64_t count) {
  const int b = exposure_bin_index(count);
  if (b == kNumBins - 1) return 0.0;
  return (per_bin[b + 1] - per_bin[b]) / static_cast<double>(bin_gap(b, b + 1));
}

inline double predict_lift(const OutcomePredictor& models, const Features& f, std::int64_t count) {
  return predict_lift(models.predict_all(f), count);
}

// Lift attributed to reaching exposure state `s` (the s-th impression). State
// zero has no lift by definition.
inline double state_lift(const std::array<double, kNumBins>& per_bin, std::int64_t s) {
  if (s < 0) throw std::invalid_argument("exposure state must be non-negative");
  return s == 0 ? 0.0 : predict_lift(per_bin, s - 1);
}

// Mean predicted lift over the population and the bid-time state grid (the
// lower edge of every bin).
inline double compute_tau_bar(const OutcomePredictor& models, std::span<const Features> population) {
  if (population.empty()) throw std::invalid_argument("empty normalization population");
  double sum = 0;
  for (const auto& f : population) {
    const auto per_bin = models.predict_all(f);
    double user = 0;
    for (int b = 0; b < kNumBins; ++b) user += predict_lift(per_bin, kBinLowerEdges[b]);
    sum += user;
  }
  return sum / (static_cast<double>(population.size()) * kNumBins);
}

inline constexpr double kMinNormalizer = 1e-12;

// Unfloored normalized score; bidding floors it at zero.
inline double normalize_phi(double score, double normalizer) {
  if (!(normalizer >= kMinNormalizer))
    throw DegenerateNormalizer("mean score " + std::to_string(normalizer) +
                               " cannot normalize bids");
  return score / normalizer;
}

inline nlohmann::json outcome_to_json(const OutcomePredictor& m) {
  nlohmann::json bins = nlohmann::json::array();
  for (const auto& r : m.per_bin) bins.push_back(regressor_to_json(r));
  return {{"mode", training_mode_name(m.mode)}, {"bins", bins}};
}

inline OutcomePredictor outcome_from_json(const nlohmann::json& j) {
  OutcomePredictor m;
  m.mode = training_mode_from_name(j.at("mode").get<std::string>());
  for (const auto& r : j.at("bins")) m.per_bin.push_back(regressor_from_json(r));
  if (m.per_bin.size() != kNumBins) throw std::invalid_argument("outcome predictor bin count");
  return m;
}

}  // namespace liftbid::learning
