// Copyright 2026 The liftbid Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace liftbid::stats {

// Nearest-rank percentile: the smallest sample such that at least
// `percentile`% of the samples are <= it. `percentile` in (0, 100].
inline double nearest_rank_percentile(std::span<const double> values, double percentile) {
  if (values.empty()) throw std::invalid_argument("percentile of empty sample");
  if (!(percentile > 0.0 && percentile <= 100.0))
    throw std::invalid_argument("percentile must be in (0, 100]");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const auto n = static_cast<double>(sorted.size());
  // The epsilon absorbs representation error in e.g. 99.9 * 1000 / 100.
  auto rank = static_cast<std::int64_t>(std::ceil(percentile * n / 100.0 - 1e-9));
  rank = std::clamp<std::int64_t>(rank, 1, static_cast<std::int64_t>(sorted.size()));
  return sorted[static_cast<std::size_t>(rank - 1)];
}

// Welford accumulator.
class Moments {
 public:
  void add(double x) {
    ++n_;
    const double d = x - mean_;
    mean_ += d / static_cast<double>(n_);
    m2_ += d * (x - mean_);
  }
  std::int64_t count() const { return n_; }
  double mean() const { return mean_; }
  double variance() const { return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0; }
  double sd() const { return std::sqrt(variance()); }
  std::optional<double> standard_error() const {
    if (n_ < 2) return std::nullopt;
    return sd() / std::sqrt(static_cast<double>(n_));
  }

 private:
  std::int64_t n_ = 0;
  double mean_ = 0;
  double m2_ = 0;
};

// Ratio of sums R = sum(a) / sum(b) over units with a linearized standard
// error sqrt(sum((a - R b)^2)) / sum(b) (units are i.i.d.).
class RatioOfSums {
 public:
  void add(double a, double b) {
    sa_ += a;
    sb_ += b;
    saa_ += a * a;
    sab_ += a * b;
    sbb_ += b * b;
    ++n_;
  }
  std::int64_t count() const { return n_; }
  std::optional<double> value() const {
    if (sb_ == 0.0) return std::nullopt;
    return sa_ / sb_;
  }
  std::optional<double> standard_error() const {
    if (sb_ == 0.0 || n_ < 2) return std::nullopt;
    const double r = sa_ / sb_;
    const double ss = std::max(0.0, saa_ - 2 * r * sab_ + r * r * sbb_);
    // n/(n-1) small-sample correction, matching the sample SD convention.
    const double n = static_cast<double>(n_);
    return std::sqrt(ss * n / (n - 1)) / std::abs(sb_);
  }

 private:
  double sa_ = 0, sb_ = 0, saa_ = 0, sab_ = 0, sbb_ = 0;
  std::int64_t n_ = 0;
};

}  // namespace liftbid::stats
