// Copyright 2026 The liftbid Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "liftbid/domain.hpp"

namespace liftbid::learning {

struct LearnerConfig {
  enum class Kind { kStumps, kRidge };
  Kind kind = Kind::kStumps;

  // Boosted stumps.
  int rounds = 200;
  double shrinkage = 0.1;
  std::size_t min_leaf_samples = 20;
  // Weighted ridge.
  double ridge_lambda = 1.0;

  // Bin population floor shared by propensity and outcome fits.
  std::size_t min_per_bin = 30;
  // Propensity clipping percentile for the clipped IPS mode.
  double clip_percentile = 99.9;
  // IPS weights above this count as "large" in training diagnostics.
  double large_weight_warning = 1e4;

  // Multinomial logit propensity model.
  double propensity_l2 = 1e-3;
  int propensity_max_iter = 50;
  double propensity_tolerance = 1e-9;
};

inline std::string_view learner_kind_name(LearnerConfig::Kind k) {
  return k == LearnerConfig::Kind::kStumps ? "stumps" : "ridge";
}

inline LearnerConfig::Kind learner_kind_from_name(std::string_view s) {
  if (s == "stumps") return LearnerConfig::Kind::kStumps;
  if (s == "ridge") return LearnerConfig::Kind::kRidge;
  throw std::invalid_argument("unknown learner kind '" + std::string(s) + "'");
}

// A weighted regression problem; all spans have equal length.
struct WeightedSample {
  std::span<const FeatureVector> x;
  std::span<const double> y;
  std::span<const double> w;

  std::size_t size() const { return x.size(); }
  void check() const {
    if (x.size() != y.size() || x.size() != w.size())
      throw std::invalid_argument("feature, target and weight counts differ");
    if (x.empty()) throw std::invalid_argument("empty training sample");
    for (double wi : w)
      if (!(wi >= 0.0) || !std::isfinite(wi))
        throw std::invalid_argument("sample weights must be finite and non-negative");
  }
};

// ---------------------------------------------------------------------------
// Boosted depth-1 trees, stored in compiled form: the sum of all stumps on a
// feature is a step function, so prediction is one binary search per feature.
// ---------------------------------------------------------------------------

struct AdditiveStepModel {
  double base = 0;
  // values[j].size() == thresholds[j].size() + 1; region k of feature j holds
  // x with thresholds[k-1] < x <= thresholds[k].
  std::array<std::vector<double>, kNumFeatures> thresholds;
  std::array<std::vector<double>, kNumFeatures> values;
  int rounds_used = 0;

  double predict(const FeatureVector& x) const {
    double out = base;
    for (int j = 0; j < kNumFeatures; ++j) {
      const auto& t = thresholds[j];
      if (t.empty()) continue;
      const auto k = std::lower_bound(t.begin(), t.end(), x[j]) - t.begin();
      out += values[j][static_cast<std::size_t>(k)];
    }
    return out;
  }
  friend bool operator==(const AdditiveStepModel&, const AdditiveStepModel&) = default;
};

namespace detail {

struct Stump {
  int feature = -1;
  double threshold = 0;
  double left = 0;
  double right = 0;
};

inline AdditiveStepModel compile_stumps(double base, const std::vector<Stump>& stumps) {
  AdditiveStepModel model;
  model.base = base;
  model.rounds_used = static_cast<int>(stumps.size());
  for (int j = 0; j < kNumFeatures; ++j) {
    std::vector<double> ts;
    for (const auto& s : stumps)
      if (s.feature == j) ts.push_back(s.threshold);
    std::sort(ts.begin(), ts.end());
    ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
    std::vector<double> vals(ts.size() + 1, 0.0);
    for (const auto& s : stumps) {
      if (s.feature != j) continue;
      const auto q = static_cast<std::size_t>(std::lower_bound(ts.begin(), ts.end(), s.threshold) -
                                              ts.begin());
      for (std::size_t k = 0; k < vals.size(); ++k) vals[k] += k <= q ? s.left : s.right;
    }
    if (!ts.empty()) {
      model.thresholds[j] = std::move(ts);
      model.values[j] = std::move(vals);
    }
  }
  return model;
}

}  // namespace detail

inline AdditiveStepModel fit_boosted_stumps(const WeightedSample& data, const LearnerConfig& config) {
  data.check();
  const std::size_t n = data.size();
  const double total_w = std::accumulate(data.w.begin(), data.w.end(), 0.0);
  if (!(total_w > 0)) throw std::invalid_argument("total sample weight must be positive");

  double base = 0;
  for (std::size_t i = 0; i < n; ++i) base += data.w[i] * data.y[i];
  base /= total_w;

  std::vector<double> residual(n);
  for (std::size_t i = 0; i < n; ++i) residual[i] = data.y[i] - base;

  std::array<std::vector<std::size_t>, kNumFeatures> order;
  for (int j = 0; j < kNumFeatures; ++j) {
    order[j].resize(n);
    std::iota(order[j].begin(), order[j].end(), 0);
    std::stable_sort(order[j].begin(), order[j].end(),
                     [&](std::size_t a, std::size_t b) { return data.x[a][j] < data.x[b][j]; });
  }

  const std::size_t min_leaf = std::max<std::size_t>(1, config.min_leaf_samples);
  std::vector<detail::Stump> stumps;
  for (int round = 0; round < config.rounds; ++round) {
    double total_s = 0;
    for (std::size_t i = 0; i < n; ++i) total_s += data.w[i] * residual[i];
    const double parent = total_s * total_s / total_w;

    detail::Stump best;
    double best_gain = 0;
    for (int j = 0; j < kNumFeatures; ++j) {
      const auto& ord = order[j];
      double wl = 0, sl = 0;
      for (std::size_t k = 0; k + 1 < n; ++k) {
        const std::size_t i = ord[k];
        wl += data.w[i];
        sl += data.w[i] * residual[i];
        const double xv = data.x[i][j];
        const double xn = data.x[ord[k + 1]][j];
        if (xv == xn) continue;
        if (k + 1 < min_leaf || n - k - 1 < min_leaf) continue;
        const double wr = total_w - wl;
        if (wl <= 0 || wr <= 0) continue;
        const double sr = total_s - sl;
        const double gain = sl * sl / wl + sr * sr / wr - parent;
        if (gain > best_gain) {
          best_gain = gain;
          best.feature = j;
          best.threshold = xv + 0.5 * (xn - xv);
          best.left = sl / wl;
          best.right = sr / wr;
        }
      }
    }
    if (best.feature < 0 || !(best_gain > 1e-300)) break;
    best.left *= config.shrinkage;
    best.right *= config.shrinkage;
    for (std::size_t i = 0; i < n; ++i)
      residual[i] -= data.x[i][best.feature] <= best.threshold ? best.left : best.right;
    stumps.push_back(best);
  }
  return detail::compile_stumps(base, stumps);
}

// ---------------------------------------------------------------------------
// Weighted ridge regression (intercept unpenalized, features standardized).
// ---------------------------------------------------------------------------

struct LinearModel {
  double intercept = 0;
  FeatureVector coef{};

  double predict(const FeatureVector& x) const {
    double out = intercept;
    for (int j = 0; j < kNumFeatures; ++j) out += coef[j] * x[j];
    return out;
  }
  friend bool operator==(const LinearModel&, const LinearModel&) = default;
};

inline LinearModel fit_weighted_ridge(const WeightedSample& data, double lambda) {
  data.check();
  if (lambda < 0) throw std::invalid_argument("ridge lambda must be non-negative");
  const std::size_t n = data.size();
  const double total_w = std::accumulate(data.w.begin(), data.w.end(), 0.0);
  if (!(total_w > 0)) throw std::invalid_argument("total sample weight must be positive");

  FeatureVector mean{}, scale{};
  double ybar = 0;
  for (std::size_t i = 0; i < n; ++i) {
    ybar += data.w[i] * data.y[i];
    for (int j = 0; j < kNumFeatures; ++j) mean[j] += data.w[i] * data.x[i][j];
  }
  ybar /= total_w;
  for (auto& m : mean) m /= total_w;
  for (std::size_t i = 0; i < n; ++i)
    for (int j = 0; j < kNumFeatures; ++j) {
      const double d = data.x[i][j] - mean[j];
      scale[j] += data.w[i] * d * d;
    }
  for (auto& s : scale) s = s > 0 ? std::sqrt(s / total_w) : 1.0;

  Eigen::Matrix<double, kNumFeatures, kNumFeatures> gram =
      Eigen::Matrix<double, kNumFeatures, kNumFeatures>::Zero();
  Eigen::Matrix<double, kNumFeatures, 1> rhs = Eigen::Matrix<double, kNumFeatures, 1>::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    Eigen::Matrix<double, kNumFeatures, 1> z;
    for (int j = 0; j < kNumFeatures; ++j) z[j] = (data.x[i][j] - mean[j]) / scale[j];
    gram.noalias() += data.w[i] * z * z.transpose();
    rhs.noalias() += data.w[i] * (data.y[i] - ybar) * z;
  }
  gram.diagonal().array() += lambda;
  // Guards a singular system when lambda = 0 and a feature is constant.
  gram.diagonal().array() += 1e-12;
  const Eigen::Matrix<double, kNumFeatures, 1> beta = gram.ldlt().solve(rhs);

  LinearModel model;
  model.intercept = ybar;
  for (int j = 0; j < kNumFeatures; ++j) {
    model.coef[j] = beta[j] / scale[j];
    model.intercept -= model.coef[j] * mean[j];
  }
  return model;
}

using Regressor = std::variant<AdditiveStepModel, LinearModel>;

inline double predict(const Regressor& model, const FeatureVector& x) {
  return std::visit([&](const auto& m) { return m.predict(x); }, model);
}

inline Regressor fit_regressor(const WeightedSample& data, const LearnerConfig& config) {
  if (config.kind == LearnerConfig::Kind::kRidge) return fit_weighted_ridge(data, config.ridge_lambda);
  return fit_boosted_stumps(data, config);
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

inline nlohmann::json regressor_to_json(const Regressor& model) {
  using nlohmann::json;
  if (const auto* m = std::get_if<AdditiveStepModel>(&model)) {
    json features = json::array();
    for (int j = 0; j < kNumFeatures; ++j)
      features.push_back({{"thresholds", m->thresholds[j]}, {"values", m->values[j]}});
    return {{"kind", "stumps"}, {"base", m->base}, {"rounds_used", m->rounds_used},
            {"features", features}};
  }
  const auto& m = std::get<LinearModel>(model);
  return {{"kind", "ridge"}, {"intercept", m.intercept}, {"coef", m.coef}};
}

inline Regressor regressor_from_json(const nlohmann::json& j) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "stumps") {
    AdditiveStepModel m;
    m.base = j.at("base").get<double>();
    m.rounds_used = j.at("rounds_used").get<int>();
    const auto& features = j.at("features");
    if (features.size() != kNumFeatures) throw std::invalid_argument("stump model feature count");
    for (int f = 0; f < kNumFeatures; ++f) {
      m.thresholds[f] = features[f].at("thresholds").get<std::vector<double>>();
      m.values[f] = features[f].at("values").get<std::vector<double>>();
      if (!m.thresholds[f].empty() && m.values[f].size() != m.thresholds[f].size() + 1)
        throw std::invalid_argument("stump model region count");
    }
    return m;
  }
  if (kind == "ridge") {
    LinearModel m;
    m.intercept = j.at("intercept").get<double>();
    m.coef = j.at("coef").get<FeatureVector>();
    return m;
  }
  throw std::invalid_argument("unknown regressor kind '" + kind + "'");
}

}  // namespace liftbid::learning
