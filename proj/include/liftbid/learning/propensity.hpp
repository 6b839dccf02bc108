// Copyright 2026 The liftbid Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "json.hpp"
#include "liftbid/domain.hpp"
#include "liftbid/learning/regressor.hpp"
#include "liftbid/stats.hpp"

namespace liftbid::learning {

// Multinomial logistic regression fitted by damped Newton steps on the
// L2-penalized mean log-likelihood. Class 0 is the reference class. Inputs are
// standardized internally.
class MultinomialLogit {
 public:
  MultinomialLogit() = default;

  static MultinomialLogit fit(const std::vector<std::vector<double>>& rows,
                              std::span<const int> labels, int num_classes, double l2,
                              int max_iter, double tolerance) {
    if (rows.size() != labels.size()) throw std::invalid_argument("rows and labels differ in size");
    if (rows.empty()) throw std::invalid_argument("empty training set");
    if (num_classes < 2) throw std::invalid_argument("need at least two classes");
    const std::size_t n = rows.size();
    const int d = static_cast<int>(rows.front().size());
    for (const auto& r : rows)
      if (static_cast<int>(r.size()) != d) throw std::invalid_argument("ragged design rows");
    for (int y : labels)
      if (y < 0 || y >= num_classes) throw std::invalid_argument("label out of range");

    MultinomialLogit m;
    m.num_classes_ = num_classes;
    m.dim_ = d;
    m.mean_.assign(d, 0.0);
    m.scale_.assign(d, 1.0);
    for (const auto& r : rows)
      for (int j = 0; j < d; ++j) m.mean_[j] += r[j];
    for (auto& v : m.mean_) v /= static_cast<double>(n);
    for (int j = 0; j < d; ++j) {
      double ss = 0;
      for (const auto& r : rows) ss += (r[j] - m.mean_[j]) * (r[j] - m.mean_[j]);
      const double sd = std::sqrt(ss / static_cast<double>(n));
      m.scale_[j] = sd > 0 ? sd : 1.0;
    }

    const int p = d + 1;
    const int km = num_classes - 1;
    const int np = km * p;
    Eigen::MatrixXd z(static_cast<Eigen::Index>(n), p);
    for (std::size_t i = 0; i < n; ++i) {
      z(static_cast<Eigen::Index>(i), 0) = 1.0;
      for (int j = 0; j < d; ++j)
        z(static_cast<Eigen::Index>(i), j + 1) = (rows[i][j] - m.mean_[j]) / m.scale_[j];
    }

    Eigen::VectorXd theta = Eigen::VectorXd::Zero(np);
    const double inv_n = 1.0 / static_cast<double>(n);

    auto penalty_mask = [&](int idx) { return idx % p == 0 ? 0.0 : 1.0; };
    auto objective = [&](const Eigen::VectorXd& th) {
      double ll = 0;
      std::vector<double> eta(num_classes);
      for (std::size_t i = 0; i < n; ++i) {
        const auto zi = z.row(static_cast<Eigen::Index>(i));
        eta[0] = 0;
        for (int k = 0; k < km; ++k) eta[k + 1] = zi.dot(th.segment(k * p, p));
        const double mx = *std::max_element(eta.begin(), eta.end());
        double se = 0;
        for (double e : eta) se += std::exp(e - mx);
        ll += eta[labels[i]] - mx - std::log(se);
      }
      double pen = 0;
      for (int idx = 0; idx < np; ++idx) pen += penalty_mask(idx) * th[idx] * th[idx];
      return ll * inv_n - 0.5 * l2 * pen;
    };

    double current = objective(theta);
    std::vector<double> prob(num_classes);
    for (int iter = 0; iter < max_iter; ++iter) {
      Eigen::VectorXd grad = Eigen::VectorXd::Zero(np);
      Eigen::MatrixXd hess = Eigen::MatrixXd::Zero(np, np);
      Eigen::MatrixXd zz(p, p);
      for (std::size_t i = 0; i < n; ++i) {
        const auto zi = z.row(static_cast<Eigen::Index>(i));
        m.softmax(theta, zi, prob);
        zz.noalias() = zi.transpose() * zi;
        for (int a = 0; a < km; ++a) {
          const double ya = labels[i] == a + 1 ? 1.0 : 0.0;
          grad.segment(a * p, p).noalias() += (ya - prob[a + 1]) * zi.transpose();
          for (int b = a; b < km; ++b) {
            const double w = (a == b ? prob[a + 1] : 0.0) - prob[a + 1] * prob[b + 1];
            hess.block(a * p, b * p, p, p).noalias() += w * zz;
          }
        }
      }
      for (int a = 0; a < km; ++a)
        for (int b = 0; b < a; ++b) hess.block(a * p, b * p, p, p) = hess.block(b * p, a * p, p, p);
      grad *= inv_n;
      hess *= inv_n;
      for (int idx = 0; idx < np; ++idx) {
        grad[idx] -= l2 * penalty_mask(idx) * theta[idx];
        hess(idx, idx) += l2 * penalty_mask(idx) + 1e-10;
      }
      // hess is the negated Hessian of the objective (positive definite).
      Eigen::VectorXd step = hess.ldlt().solve(grad);
      double t = 1.0;
      double next = current;
      Eigen::VectorXd candidate;
      for (int halving = 0; halving < 30; ++halving) {
        candidate = theta + t * step;
        next = objective(candidate);
        if (next >= current) break;
        t *= 0.5;
      }
      if (next < current) break;
      const double moved = (candidate - theta).lpNorm<Eigen::Infinity>();
      theta = candidate;
      const double improvement = next - current;
      current = next;
      if (moved < tolerance || improvement < tolerance * tolerance) break;
    }
    m.theta_.assign(theta.data(), theta.data() + np);
    return m;
  }

  std::vector<double> probabilities(std::span<const double> row) const {
    if (static_cast<int>(row.size()) != dim_) throw std::invalid_argument("design row size");
    const int p = dim_ + 1;
    Eigen::RowVectorXd zi(p);
    zi[0] = 1.0;
    for (int j = 0; j < dim_; ++j) zi[j + 1] = (row[j] - mean_[j]) / scale_[j];
    Eigen::Map<const Eigen::VectorXd> theta(theta_.data(), static_cast<Eigen::Index>(theta_.size()));
    std::vector<double> prob(num_classes_);
    softmax(theta, zi, prob);
    return prob;
  }

  int num_classes() const { return num_classes_; }
  int dim() const { return dim_; }

  nlohmann::json to_json() const {
    return {{"num_classes", num_classes_}, {"dim", dim_}, {"mean", mean_}, {"scale", scale_},
            {"theta", theta_}};
  }
  static MultinomialLogit from_json(const nlohmann::json& j) {
    MultinomialLogit m;
    m.num_classes_ = j.at("num_classes").get<int>();
    m.dim_ = j.at("dim").get<int>();
    m.mean_ = j.at("mean").get<std::vector<double>>();
    m.scale_ = j.at("scale").get<std::vector<double>>();
    m.theta_ = j.at("theta").get<std::vector<double>>();
    if (static_cast<int>(m.mean_.size()) != m.dim_ || static_cast<int>(m.scale_.size()) != m.dim_ ||
        static_cast<int>(m.theta_.size()) != (m.num_classes_ - 1) * (m.dim_ + 1))
      throw std::invalid_argument("inconsistent multinomial logit parameters");
    return m;
  }
  friend bool operator==(const MultinomialLogit&, const MultinomialLogit&) = default;

 private:
  template <class Theta, class Row>
  void softmax(const Theta& theta, const Row& zi, std::vector<double>& prob) const {
    const int p = dim_ + 1;
    prob[0] = 0;
    for (int k = 1; k < num_classes_; ++k) prob[k] = zi.dot(theta.segment((k - 1) * p, p));
    const double mx = *std::max_element(prob.begin(), prob.end());
    double s = 0;
    for (auto& v : prob) {
      v = std::exp(v - mx);
      s += v;
    }
    for (auto& v : prob) v /= s;
  }

  int num_classes_ = 0;
  int dim_ = 0;
  std::vector<double> mean_, scale_, theta_;
};

// Exposure-bin propensity e_b(x) over the eight bins.
struct PropensityModel {
  MultinomialLogit logit;
  std::optional<std::array<double, kNumBins>> clip_thresholds;

  static std::vector<double> design_row(const Features& f) {
    const double pcvr = std::clamp(f.logged_pcvr, 1e-9, 1.0 - 1e-9);
    return {std::log1p(f.visit_frequency), std::log1p(f.distance_km),
            std::log1p(f.prior_impressions), std::log(pcvr / (1.0 - pcvr))};
  }

  std::array<double, kNumBins> raw_scores(const Features& f) const {
    const auto p = logit.probabilities(design_row(f));
    std::array<double, kNumBins> out{};
    std::copy_n(p.begin(), kNumBins, out.begin());
    return out;
  }

  // Scores as used for weighting: capped at the clip thresholds when present.
  std::array<double, kNumBins> scores(const Features& f) const {
    auto out = raw_scores(f);
    if (clip_thresholds)
      for (int b = 0; b < kNumBins; ++b) out[b] = std::min(out[b], (*clip_thresholds)[b]);
    return out;
  }

  friend bool operator==(const PropensityModel&, const PropensityModel&) = default;
};

inline void require_bin_population(std::span<const int> bins, std::size_t min_per_bin) {
  std::array<std::size_t, kNumBins> counts{};
  for (int b : bins) {
    if (b < 0 || b >= kNumBins) throw std::invalid_argument("bin index out of range");
    ++counts[b];
  }
  for (int b = 0; b < kNumBins; ++b)
    if (counts[b] < min_per_bin) throw UnderpopulatedBin(b, counts[b], min_per_bin);
}

inline PropensityModel fit_propensity(std::span<const Features> features, std::span<const int> bins,
                                      const LearnerConfig& config) {
  if (features.size() != bins.size()) throw std::invalid_argument("features and bins differ in size");
  require_bin_population(bins, config.min_per_bin);
  std::vector<std::vector<double>> rows;
  rows.reserve(features.size());
  for (const auto& f : features) rows.push_back(PropensityModel::design_row(f));
  PropensityModel model;
  model.logit = MultinomialLogit::fit(rows, bins, kNumBins, config.propensity_l2,
                                      config.propensity_max_iter, config.propensity_tolerance);
  return model;
}

// Caps each bin's score at the given percentile (nearest rank) of that bin's
// scores over the training set. Only large propensities are affected.
inline PropensityModel clip_propensity(const PropensityModel& model,
                                       std::span<const Features> training, double percentile) {
  if (training.empty()) throw std::invalid_argument("clipping needs training scores");
  std::array<std::vector<double>, kNumBins> per_bin;
  for (auto& v : per_bin) v.reserve(training.size());
  for (const auto& f : training) {
    const auto s = model.raw_scores(f);
    for (int b = 0; b < kNumBins; ++b) per_bin[b].push_back(s[b]);
  }
  PropensityModel clipped = model;
  std::array<double, kNumBins> thresholds{};
  for (int b = 0; b < kNumBins; ++b)
    thresholds[b] = stats::nearest_rank_percentile(per_bin[b], percentile);
  clipped.clip_thresholds = thresholds;
  return clipped;
}

inline nlohmann::json propensity_to_json(const PropensityModel& m) {
  nlohmann::json j = {{"logit", m.logit.to_json()}, {"clip_thresholds", nullptr}};
  if (m.clip_thresholds) j["clip_thresholds"] = *m.clip_thresholds;
  return j;
}

inline PropensityModel propensity_from_json(const nlohmann::json& j) {
  PropensityModel m;
  m.logit = MultinomialLogit::from_json(j.at("logit"));
  if (m.logit.num_classes() != kNumBins) throw std::invalid_argument("propensity class count");
  if (!j.at("clip_thresholds").is_null())
    m.clip_thresholds = j.at("clip_thresholds").get<std::array<double, kNumBins>>();
  return m;
}

}  // namespace liftbid::learning
