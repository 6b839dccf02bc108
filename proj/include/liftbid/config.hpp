// Copyright 2026 The liftbid Authors
// SPDX-License-Identifier: Apache-2.0

// Run configuration file (YAML). The four sections are required; every field
// inside a section is optional and falls back to its default. Unknown keys
// are rejected.
//
//   run_id: desk                        # optional, default "run"
//   market:
//     population_size: 50000            # experiment users, split over five arms
//     days: 7                           # informational campaign length
//     auctions_per_day: 4.0
//     auction_rate_dispersion: 0.6
//     frequency_mean: 1.5
//     frequency_dispersion: 0.8
//     distance_median_km: 5.0
//     distance_dispersion: 0.8
//     prior_win_rate: 0.15
//     logged_pcvr_noise: 0.3
//     competitor_log_mu: 7.0
//     competitor_log_sigma: 0.7
//     confounding: 1.0
//     second_price_fraction: 0.1
//     num_slots: 200
//     slot_ctr_mean: 0.01
//     slot_ctr_concentration: 200.0
//     outcome: { organic_intercept: -3.4, ... }   # see OutcomeCoefficients
//   learner:
//     kind: stumps                      # stumps | ridge
//     rounds: 200
//     shrinkage: 0.1
//     min_leaf_samples: 20
//     ridge_lambda: 1.0
//     min_per_bin: 30
//     clip_percentile: 99.9
//     large_weight_warning: 10000
//     propensity_l2: 0.001
//     propensity_max_iter: 50
//     propensity_tolerance: 1.0e-9
//   pacing:
//     kappa: 0.5
//     alpha_min: 0.01
//     alpha_max: 1.0
//     boost: 1.25
//     cadence_hours: 1
//     initial_alpha: 0.5
//   experiment:
//     seed: 1
//     logging: { population: 50000, days: 7, alpha: 0.3, pctr: 0.01 }
//     ab:
//       days: 7
//       cpc_micros: 100000
//       budget_per_user_day_micros: 300
//       budget_ratios: { baseline: 1.0, naive: 0.1, unbiased: 0.1, noclip: 0.1, control: 0.0 }
//       parallel_arms: false

#pragma once

#include <yaml-cpp/yaml.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include "liftbid/domain.hpp"
#include "liftbid/harness/experiment.hpp"

namespace liftbid::config {

class ConfigError : public Error {
 public:
  ConfigError(const std::string& key, int line, const std::string& message)
      : Error(message), key_(key), line_(line) {}
  const std::string& key() const { return key_; }
  int line() const { return line_; }

 private:
  std::string key_;
  int line_;
};

struct RunConfig {
  std::string run_id = "run";
  harness::ExperimentPlan plan;
};

namespace detail {

inline int line_of(const YAML::Node& node) { return node.Mark().line >= 0 ? node.Mark().line + 1 : 0; }

// Reads the keys of one mapping and rejects the ones nobody asked for.
class Section {
 public:
  Section(const YAML::Node& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.IsMap())
      throw ConfigError(path_, line_of(node_), "config key '" + path_ + "' must be a mapping");
  }

  template <class T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    const YAML::Node v = node_[key];
    if (!v) return;
    try {
      out = v.as<T>();
    } catch (const YAML::Exception&) {
      throw ConfigError(full(key), line_of(v), "config key '" + full(key) + "' has an invalid value");
    }
  }

  void get_money(const char* key, Money& out) {
    std::int64_t micros = out.micros();
    get(key, micros);
    out = Money::micros(micros);
  }

  Section child(const char* key, bool required) {
    seen_.insert(key);
    const YAML::Node v = node_[key];
    if (!v) {
      if (required)
        throw ConfigError(full(key), line_of(node_), "missing required config key '" + full(key) + "'");
      return Section(YAML::Node(YAML::NodeType::Map), full(key));
    }
    return Section(v, full(key));
  }

  void finish() const {
    for (const auto& kv : node_) {
      const auto name = kv.first.as<std::string>();
      if (!seen_.count(name))
        throw ConfigError(full(name.c_str()), line_of(kv.first), "unknown config key '" + full(name.c_str()) + "'");
    }
  }

 private:
  std::string full(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

  YAML::Node node_;
  std::string path_;
  std::set<std::string> seen_;
};

}  // namespace detail

inline RunConfig parse_config(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError("", e.mark.line + 1, "config parse error at line " + std::to_string(e.mark.line + 1) + ": " + e.msg);
  }
  if (!root || root.IsNull()) root = YAML::Node(YAML::NodeType::Map);

  RunConfig rc;
  auto& plan = rc.plan;
  detail::Section top(root, "");
  top.get("run_id", rc.run_id);

  {
    auto s = top.child("market", true);
    auto& m = plan.market;
    s.get("population_size", m.population_size);
    s.get("days", m.days);
    s.get("auctions_per_day", m.auctions_per_day);
    s.get("auction_rate_dispersion", m.auction_rate_dispersion);
    s.get("frequency_mean", m.frequency_mean);
    s.get("frequency_dispersion", m.frequency_dispersion);
    s.get("distance_median_km", m.distance_median_km);
    s.get("distance_dispersion", m.distance_dispersion);
    s.get("prior_win_rate", m.prior_win_rate);
    s.get("logged_pcvr_noise", m.logged_pcvr_noise);
    s.get("competitor_log_mu", m.competitor_log_mu);
    s.get("competitor_log_sigma", m.competitor_log_sigma);
    s.get("confounding", m.confounding);
    s.get("second_price_fraction", m.second_price_fraction);
    s.get("num_slots", m.num_slots);
    s.get("slot_ctr_mean", m.slot_ctr_mean);
    s.get("slot_ctr_concentration", m.slot_ctr_concentration);
    {
      auto o = s.child("outcome", false);
      auto& c = m.outcome;
      o.get("organic_intercept", c.organic_intercept);
      o.get("organic_frequency", c.organic_frequency);
      o.get("organic_distance", c.organic_distance);
      o.get("organic_noise", c.organic_noise);
      o.get("wearin_floor", c.wearin_floor);
      o.get("wearin_scale", c.wearin_scale);
      o.get("wearin_frequency_decay", c.wearin_frequency_decay);
      o.get("wearin_distance_decay", c.wearin_distance_decay);
      o.get("wearin_noise", c.wearin_noise);
      o.get("wearout_median", c.wearout_median);
      o.get("wearout_noise", c.wearout_noise);
      o.finish();
    }
    s.finish();
  }
  {
    auto s = top.child("learner", true);
    auto& l = plan.learner;
    std::string kind(learning::learner_kind_name(l.kind));
    s.get("kind", kind);
    try {
      l.kind = learning::learner_kind_from_name(kind);
    } catch (const std::invalid_argument&) {
      throw ConfigError("learner.kind", 0, "config key 'learner.kind' must be 'stumps' or 'ridge'");
    }
    s.get("rounds", l.rounds);
    s.get("shrinkage", l.shrinkage);
    s.get("min_leaf_samples", l.min_leaf_samples);
    s.get("ridge_lambda", l.ridge_lambda);
    s.get("min_per_bin", l.min_per_bin);
    s.get("clip_percentile", l.clip_percentile);
    s.get("large_weight_warning", l.large_weight_warning);
    s.get("propensity_l2", l.propensity_l2);
    s.get("propensity_max_iter", l.propensity_max_iter);
    s.get("propensity_tolerance", l.propensity_tolerance);
    s.finish();
  }
  {
    auto s = top.child("pacing", true);
    auto& p = plan.pacing;
    s.get("kappa", p.kappa);
    s.get("alpha_min", p.alpha_min);
    s.get("alpha_max", p.alpha_max);
    s.get("boost", p.boost);
    s.get("cadence_hours", p.cadence_hours);
    s.get("initial_alpha", p.initial_alpha);
    s.finish();
  }
  {
    auto s = top.child("experiment", true);
    s.get("seed", plan.seed);
    {
      auto g = s.child("logging", false);
      g.get("population", plan.logging.population);
      g.get("days", plan.logging.days);
      g.get("alpha", plan.logging.alpha);
      g.get("pctr", plan.logging.pctr);
      g.finish();
    }
    {
      auto a = s.child("ab", false);
      a.get("days", plan.ab.days);
      a.get_money("cpc_micros", plan.ab.cpc);
      a.get_money("budget_per_user_day_micros", plan.ab.budget_per_user_day);
      {
        auto r = a.child("budget_ratios", false);
        for (Arm arm : kAllArms)
          r.get(std::string(arm_name(arm)).c_str(), plan.ab.budget_ratios[static_cast<std::size_t>(arm)]);
        r.finish();
      }
      a.get("parallel_arms", plan.ab.parallel_arms);
      a.finish();
    }
    s.finish();
  }
  top.finish();

  try {
    plan.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("", 0, e.what());
  }
  return rc;
}

inline RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", 0, "cannot open config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

// Canonical YAML echo of the effective configuration; parses back to the
// same RunConfig.
inline std::string resolved_config(const RunConfig& rc) {
  const auto& p = rc.plan;
  const auto& m = p.market;
  const auto& c = m.outcome;
  const auto& l = p.learner;
  YAML::Emitter e;
  e.SetDoublePrecision(17);
  e << YAML::BeginMap;
  e << YAML::Key << "run_id" << YAML::Value << rc.run_id;

  e << YAML::Key << "market" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "population_size" << YAML::Value << m.population_size;
  e << YAML::Key << "days" << YAML::Value << m.days;
  e << YAML::Key << "auctions_per_day" << YAML::Value << m.auctions_per_day;
  e << YAML::Key << "auction_rate_dispersion" << YAML::Value << m.auction_rate_dispersion;
  e << YAML::Key << "frequency_mean" << YAML::Value << m.frequency_mean;
  e << YAML::Key << "frequency_dispersion" << YAML::Value << m.frequency_dispersion;
  e << YAML::Key << "distance_median_km" << YAML::Value << m.distance_median_km;
  e << YAML::Key << "distance_dispersion" << YAML::Value << m.distance_dispersion;
  e << YAML::Key << "prior_win_rate" << YAML::Value << m.prior_win_rate;
  e << YAML::Key << "logged_pcvr_noise" << YAML::Value << m.logged_pcvr_noise;
  e << YAML::Key << "competitor_log_mu" << YAML::Value << m.competitor_log_mu;
  e << YAML::Key << "competitor_log_sigma" << YAML::Value << m.competitor_log_sigma;
  e << YAML::Key << "confounding" << YAML::Value << m.confounding;
  e << YAML::Key << "second_price_fraction" << YAML::Value << m.second_price_fraction;
  e << YAML::Key << "num_slots" << YAML::Value << m.num_slots;
  e << YAML::Key << "slot_ctr_mean" << YAML::Value << m.slot_ctr_mean;
  e << YAML::Key << "slot_ctr_concentration" << YAML::Value << m.slot_ctr_concentration;
  e << YAML::Key << "outcome" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "organic_intercept" << YAML::Value << c.organic_intercept;
  e << YAML::Key << "organic_frequency" << YAML::Value << c.organic_frequency;
  e << YAML::Key << "organic_distance" << YAML::Value << c.organic_distance;
  e << YAML::Key << "organic_noise" << YAML::Value << c.organic_noise;
  e << YAML::Key << "wearin_floor" << YAML::Value << c.wearin_floor;
  e << YAML::Key << "wearin_scale" << YAML::Value << c.wearin_scale;
  e << YAML::Key << "wearin_frequency_decay" << YAML::Value << c.wearin_frequency_decay;
  e << YAML::Key << "wearin_distance_decay" << YAML::Value << c.wearin_distance_decay;
  e << YAML::Key << "wearin_noise" << YAML::Value << c.wearin_noise;
  e << YAML::Key << "wearout_median" << YAML::Value << c.wearout_median;
  e << YAML::Key << "wearout_noise" << YAML::Value << c.wearout_noise;
  e << YAML::EndMap << YAML::EndMap;

  e << YAML::Key << "learner" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "kind" << YAML::Value << std::string(learning::learner_kind_name(l.kind));
  e << YAML::Key << "rounds" << YAML::Value << l.rounds;
  e << YAML::Key << "shrinkage" << YAML::Value << l.shrinkage;
  e << YAML::Key << "min_leaf_samples" << YAML::Value << l.min_leaf_samples;
  e << YAML::Key << "ridge_lambda" << YAML::Value << l.ridge_lambda;
  e << YAML::Key << "min_per_bin" << YAML::Value << l.min_per_bin;
  e << YAML::Key << "clip_percentile" << YAML::Value << l.clip_percentile;
  e << YAML::Key << "large_weight_warning" << YAML::Value << l.large_weight_warning;
  e << YAML::Key << "propensity_l2" << YAML::Value << l.propensity_l2;
  e << YAML::Key << "propensity_max_iter" << YAML::Value << l.propensity_max_iter;
  e << YAML::Key << "propensity_tolerance" << YAML::Value << l.propensity_tolerance;
  e << YAML::EndMap;

  e << YAML::Key << "pacing" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "kappa" << YAML::Value << p.pacing.kappa;
  e << YAML::Key << "alpha_min" << YAML::Value << p.pacing.alpha_min;
  e << YAML::Key << "alpha_max" << YAML::Value << p.pacing.alpha_max;
  e << YAML::Key << "boost" << YAML::Value << p.pacing.boost;
  e << YAML::Key << "cadence_hours" << YAML::Value << p.pacing.cadence_hours;
  e << YAML::Key << "initial_alpha" << YAML::Value << p.pacing.initial_alpha;
  e << YAML::EndMap;

  e << YAML::Key << "experiment" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "seed" << YAML::Value << p.seed;
  e << YAML::Key << "logging" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "population" << YAML::Value << p.logging.population;
  e << YAML::Key << "days" << YAML::Value << p.logging.days;
  e << YAML::Key << "alpha" << YAML::Value << p.logging.alpha;
  e << YAML::Key << "pctr" << YAML::Value << p.logging.pctr;
  e << YAML::EndMap;
  e << YAML::Key << "ab" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "days" << YAML::Value << p.ab.days;
  e << YAML::Key << "cpc_micros" << YAML::Value << p.ab.cpc.micros();
  e << YAML::Key << "budget_per_user_day_micros" << YAML::Value << p.ab.budget_per_user_day.micros();
  e << YAML::Key << "budget_ratios" << YAML::Value << YAML::BeginMap;
  for (Arm arm : kAllArms)
    e << YAML::Key << std::string(arm_name(arm)) << YAML::Value << p.ab.budget_ratio(arm);
  e << YAML::EndMap;
  e << YAML::Key << "parallel_arms" << YAML::Value << p.ab.parallel_arms;
  e << YAML::EndMap << YAML::EndMap;
  e << YAML::EndMap;
  return std::string(e.c_str()) + "\n";
}

}  // namespace liftbid::config
