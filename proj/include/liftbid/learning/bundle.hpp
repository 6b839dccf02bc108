// Copyright 2026 The liftbid Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

#include "json.hpp"
#include "liftbid/domain.hpp"
#include "liftbid/learning/outcome.hpp"
#include "liftbid/learning/propensity.hpp"
#include "liftbid/learning/regressor.hpp"
#include "liftbid/pctr.hpp"

namespace liftbid::learning {

// Lift bundles come in the three training modes; `kPcvr` is the
// performance-based baseline's conversion model.
enum class BundleMode { kErm, kIps, kIpsClipped, kPcvr };

inline std::string_view bundle_mode_name(BundleMode m) {
  switch (m) {
    case BundleMode::kErm: return "erm";
    case BundleMode::kIps: return "ips";
    case BundleMode::kIpsClipped: return "ips-clipped";
    case BundleMode::kPcvr: return "pcvr";
  }
  return "?";
}

inline BundleMode bundle_mode_from_name(std::string_view s) {
  if (s == "erm") return BundleMode::kErm;
  if (s == "ips") return BundleMode::kIps;
  if (s == "ips-clipped") return BundleMode::kIpsClipped;
  if (s == "pcvr") return BundleMode::kPcvr;
  throw std::invalid_argument("unknown bundle mode '" + std::string(s) + "'");
}

inline TrainingMode to_training_mode(BundleMode m) {
  switch (m) {
    case BundleMode::kErm: return TrainingMode::kErm;
    case BundleMode::kIps: return TrainingMode::kIps;
    case BundleMode::kIpsClipped: return TrainingMode::kIpsClipped;
    case BundleMode::kPcvr: break;
  }
  throw std::invalid_argument("pcvr bundles have no lift training mode");
}

struct PcvrModel {
  Regressor model;
  double predict(const Features& f) const { return std::max(0.0, learning::predict(model, f.as_array())); }
};

struct BundleMetadata {
  std::uint64_t seed = 0;
  std::size_t n = 0;
  std::array<std::size_t, kNumBins> n_per_bin{};
  std::string learner;
  double clip_percentile = 0;
  std::optional<std::array<double, kNumBins>> max_raw_propensity;
  double max_weight = 0;
  std::size_t large_weight_count = 0;
};

struct ModelBundle {
  static constexpr int kFormatVersion = 1;

  BundleMode mode = BundleMode::kErm;
  bidding::PctrModel pctr;
  std::optional<PropensityModel> propensity;
  std::optional<OutcomePredictor> outcome;
  std::optional<PcvrModel> pcvr;
  // Mean lift (lift bundles) or mean pCVR (baseline) over the training
  // population; divides raw scores into phi.
  double normalizer = 0;
  BundleMetadata metadata;

  bool is_lift() const { return mode != BundleMode::kPcvr; }
};

inline ModelBundle train_bundle(const TrainingData& data, const bidding::PctrModel& pctr,
                                BundleMode mode, const LearnerConfig& config, std::uint64_t seed) {
  data.check();
  if (data.size() == 0) throw UnderpopulatedBin(0, 0, config.min_per_bin);
  ModelBundle bundle;
  bundle.mode = mode;
  bundle.pctr = pctr;
  auto& meta = bundle.metadata;
  meta.seed = seed;
  meta.n = data.size();
  meta.learner = std::string(learner_kind_name(config.kind));
  const auto bins = data.bins();
  for (int b : bins) ++meta.n_per_bin[b];

  if (mode == BundleMode::kPcvr) {
    // E[y | ad]: pooled over every exposed user, unweighted.
    std::vector<FeatureVector> x;
    std::vector<double> y;
    for (std::size_t i = 0; i < data.size(); ++i) {
      if (data.final_exposure[i] < 1) continue;
      x.push_back(data.features[i].as_array());
      y.push_back(data.visits[i]);
    }
    if (x.size() < config.min_per_bin) throw UnderpopulatedBin(1, x.size(), config.min_per_bin);
    std::vector<double> w(x.size(), 1.0);
    PcvrModel pcvr{fit_regressor(WeightedSample{x, y, w}, config)};
    double sum = 0;
    for (const auto& f : data.features) sum += pcvr.predict(f);
    bundle.normalizer = sum / static_cast<double>(data.size());
    normalize_phi(1.0, bundle.normalizer);  // rejects a degenerate mean
    bundle.pcvr = std::move(pcvr);
    return bundle;
  }

  const TrainingMode tmode = to_training_mode(mode);
  if (tmode != TrainingMode::kErm) {
    auto prop = fit_propensity(data.features, bins, config);
    std::array<double, kNumBins> max_raw{};
    for (const auto& f : data.features) {
      const auto s = prop.raw_scores(f);
      for (int b = 0; b < kNumBins; ++b) max_raw[b] = std::max(max_raw[b], s[b]);
    }
    meta.max_raw_propensity = max_raw;
    if (tmode == TrainingMode::kIpsClipped) {
      prop = clip_propensity(prop, data.features, config.clip_percentile);
      meta.clip_percentile = config.clip_percentile;
    }
    bundle.propensity = std::move(prop);
  } else {
    require_bin_population(bins, config.min_per_bin);
  }

  WeightDiagnostics diag;
  bundle.outcome = fit_outcome_models(data, bundle.propensity ? &*bundle.propensity : nullptr, tmode,
                                      config, &diag);
  meta.max_weight = diag.max_weight;
  meta.large_weight_count = diag.large_weight_count;
  bundle.normalizer = compute_tau_bar(*bundle.outcome, data.features);
  normalize_phi(1.0, bundle.normalizer);
  return bundle;
}

// ---------------------------------------------------------------------------
// Versioned JSON document
// ---------------------------------------------------------------------------

inline nlohmann::json bundle_to_json(const ModelBundle& b) {
  using nlohmann::json;
  const auto& m = b.metadata;
  json meta = {{"seed", m.seed},
               {"n", m.n},
               {"n_per_bin", m.n_per_bin},
               {"learner", m.learner},
               {"clip_percentile", m.clip_percentile},
               {"max_raw_propensity", nullptr},
               {"max_weight", m.max_weight},
               {"large_weight_count", m.large_weight_count}};
  if (m.max_raw_propensity) meta["max_raw_propensity"] = *m.max_raw_propensity;
  json j = {{"format", "liftbid.model_bundle"},
            {"version", ModelBundle::kFormatVersion},
            {"mode", bundle_mode_name(b.mode)},
            {"pctr", b.pctr.to_json()},
            {"propensity", nullptr},
            {"outcome", nullptr},
            {"pcvr", nullptr},
            {"normalizer", b.normalizer},
            {"metadata", meta}};
  if (b.propensity) j["propensity"] = propensity_to_json(*b.propensity);
  if (b.outcome) j["outcome"] = outcome_to_json(*b.outcome);
  if (b.pcvr) j["pcvr"] = regressor_to_json(b.pcvr->model);
  return j;
}

inline ModelBundle bundle_from_json(const nlohmann::json& j) {
  if (j.at("format").get<std::string>() != "liftbid.model_bundle")
    throw std::invalid_argument("not a model bundle document");
  if (j.at("version").get<int>() != ModelBundle::kFormatVersion)
    throw std::invalid_argument("unsupported model bundle version " +
                                std::to_string(j.at("version").get<int>()));
  ModelBundle b;
  b.mode = bundle_mode_from_name(j.at("mode").get<std::string>());
  b.pctr = bidding::PctrModel::from_json(j.at("pctr"));
  if (!j.at("propensity").is_null()) b.propensity = propensity_from_json(j.at("propensity"));
  if (!j.at("outcome").is_null()) b.outcome = outcome_from_json(j.at("outcome"));
  if (!j.at("pcvr").is_null()) b.pcvr = PcvrModel{regressor_from_json(j.at("pcvr"))};
  b.normalizer = j.at("normalizer").get<double>();
  const auto& m = j.at("metadata");
  b.metadata.seed = m.at("seed").get<std::uint64_t>();
  b.metadata.n = m.at("n").get<std::size_t>();
  b.metadata.n_per_bin = m.at("n_per_bin").get<std::array<std::size_t, kNumBins>>();
  b.metadata.learner = m.at("learner").get<std::string>();
  b.metadata.clip_percentile = m.at("clip_percentile").get<double>();
  if (!m.at("max_raw_propensity").is_null())
    b.metadata.max_raw_propensity = m.at("max_raw_propensity").get<std::array<double, kNumBins>>();
  b.metadata.max_weight = m.at("max_weight").get<double>();
  b.metadata.large_weight_count = m.at("large_weight_count").get<std::size_t>();
  if (b.is_lift() && !b.outcome) throw std::invalid_argument("lift bundle without outcome models");
  if (!b.is_lift() && !b.pcvr) throw std::invalid_argument("pcvr bundle without a pCVR model");
  return b;
}

inline std::string dump_bundle(const ModelBundle& b) { return bundle_to_json(b).dump(2) + "\n"; }

}  // namespace liftbid::learning
