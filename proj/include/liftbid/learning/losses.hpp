// Copyright 2026 The liftbid Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>

#include "liftbid/domain.hpp"

namespace liftbid::learning {

inline double squared_loss(double observed, double predicted) {
  const double d = observed - predicted;
  return d * d;
}

// Mean squared error of `f` over one bin's samples, normalized by the bin size.
template <class X, class F>
double erm_loss(F&& f, std::span<const X> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("features and outcomes differ in size");
  if (x.empty()) throw std::invalid_argument("ERM loss over an empty bin");
  double sum = 0;
  for (std::size_t i = 0; i < x.size(); ++i) sum += squared_loss(y[i], f(x[i]));
  return sum / static_cast<double>(x.size());
}

// Inverse-propensity weighted squared error over one bin's samples. The sum
// is divided by `total_n`, the sample count across ALL bins, not the bin size.
template <class X, class F>
double ips_loss(F&& f, std::span<const X> x, std::span<const double> y,
                std::span<const double> propensity, std::size_t total_n) {
  if (x.size() != y.size() || x.size() != propensity.size())
    throw std::invalid_argument("features, outcomes and propensities differ in size");
  if (total_n == 0) throw std::invalid_argument("IPS loss needs a positive total sample count");
  double sum = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(propensity[i] > 0.0))
      throw NonPositivePropensity("propensity score must be positive, got " +
                                  std::to_string(propensity[i]));
    sum += squared_loss(y[i], f(x[i])) / propensity[i];
  }
  return sum / static_cast<double>(total_n);
}

}  // namespace liftbid::learning
