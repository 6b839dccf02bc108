// Copyright 2026 The liftbid Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cmath>
#include <compare>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace liftbid {

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UnderpopulatedBin : public Error {
 public:
  UnderpopulatedBin(int bin, std::size_t count, std::size_t required)
      : Error("exposure bin " + std::to_string(bin) + " has " + std::to_string(count) +
              " samples, need at least " + std::to_string(required)),
        bin_(bin) {}
  int bin() const noexcept { return bin_; }

 private:
  int bin_;
};

class NonPositivePropensity : public Error {
 public:
  using Error::Error;
};

class DegenerateNormalizer : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Money: fixed-point micro-units so that spend sums are order independent.
// ---------------------------------------------------------------------------

class Money {
 public:
  constexpr Money() = default;
  static constexpr Money micros(std::int64_t v) { return Money(v); }
  // Rounds half away from zero.
  static Money from_double_micros(double v) { return Money(std::llround(v)); }

  constexpr std::int64_t micros() const { return micros_; }
  constexpr double as_double() const { return static_cast<double>(micros_); }

  constexpr Money& operator+=(Money o) {
    micros_ += o.micros_;
    return *this;
  }
  constexpr Money& operator-=(Money o) {
    micros_ -= o.micros_;
    return *this;
  }
  friend constexpr Money operator+(Money a, Money b) { return Money(a.micros_ + b.micros_); }
  friend constexpr Money operator-(Money a, Money b) { return Money(a.micros_ - b.micros_); }
  friend constexpr Money operator*(Money a, std::int64_t k) { return Money(a.micros_ * k); }
  friend constexpr auto operator<=>(Money, Money) = default;

 private:
  constexpr explicit Money(std::int64_t v) : micros_(v) {}
  std::int64_t micros_ = 0;
};

// ---------------------------------------------------------------------------
// Exposure bins {0},{1},{2},{3},{4},{5-9},{10-19},{20+}
// ---------------------------------------------------------------------------

inline constexpr int kNumBins = 8;
inline constexpr std::array<std::int64_t, kNumBins> kBinLowerEdges = {0, 1, 2, 3, 4, 5, 10, 20};

struct ExposureBin {
  int index = 0;
  std::int64_t lower = 0;
  std::optional<std::int64_t> upper;  // empty for the open last bin

  bool contains(std::int64_t count) const {
    return count >= lower && (!upper || count <= *upper);
  }
  friend bool operator==(const ExposureBin&, const ExposureBin&) = default;
};

constexpr int exposure_bin_index(std::int64_t count) {
  if (count < 0) throw std::invalid_argument("exposure count must be non-negative");
  int b = 0;
  while (b + 1 < kNumBins && count >= kBinLowerEdges[b + 1]) ++b;
  return b;
}

inline ExposureBin bin_at(int index) {
  if (index < 0 || index >= kNumBins) throw std::out_of_range("bin index out of range");
  ExposureBin bin{index, kBinLowerEdges[index], std::nullopt};
  if (index + 1 < kNumBins) bin.upper = kBinLowerEdges[index + 1] - 1;
  return bin;
}

inline ExposureBin exposure_bin(std::int64_t count) { return bin_at(exposure_bin_index(count)); }

// Impressions between the lower edges of two bins.
constexpr std::int64_t bin_gap(int from, int to) { return kBinLowerEdges[to] - kBinLowerEdges[from]; }

inline std::string bin_label(int index) {
  auto b = bin_at(index);
  if (!b.upper) return std::to_string(b.lower) + "+";
  if (*b.upper == b.lower) return std::to_string(b.lower);
  return std::to_string(b.lower) + "-" + std::to_string(*b.upper);
}

// ---------------------------------------------------------------------------
// Users
// ---------------------------------------------------------------------------

inline constexpr int kNumFeatures = 4;
using FeatureVector = std::array<double, kNumFeatures>;

struct Features {
  double visit_frequency = 0;    // past store visits
  double distance_km = 0;        // home to nearest store
  double prior_impressions = 0;  // impressions during the previous period
  double logged_pcvr = 0;        // production pCVR at logging time

  FeatureVector as_array() const {
    return {visit_frequency, distance_km, prior_impressions, logged_pcvr};
  }
  static Features from_array(const FeatureVector& v) { return {v[0], v[1], v[2], v[3]}; }
  friend bool operator==(const Features&, const Features&) = default;
};

inline constexpr std::array<std::string_view, kNumFeatures> kFeatureNames = {
    "visit_frequency", "distance_km", "prior_impressions", "logged_pcvr"};

enum class Arm { kBaseline = 0, kNaive = 1, kUnbiased = 2, kNoclip = 3, kControl = 4 };
inline constexpr int kNumArms = 5;
inline constexpr std::array<Arm, kNumArms> kAllArms = {Arm::kBaseline, Arm::kNaive, Arm::kUnbiased,
                                                       Arm::kNoclip, Arm::kControl};

constexpr std::string_view arm_name(Arm arm) {
  switch (arm) {
    case Arm::kBaseline: return "baseline";
    case Arm::kNaive: return "naive";
    case Arm::kUnbiased: return "unbiased";
    case Arm::kNoclip: return "noclip";
    case Arm::kControl: return "control";
  }
  return "?";
}

inline Arm arm_from_name(std::string_view name) {
  for (Arm a : kAllArms)
    if (arm_name(a) == name) return a;
  throw std::invalid_argument("unknown arm '" + std::string(name) + "'");
}

using UserId = std::uint64_t;

// Bidder-visible part of a user. Ground-truth response parameters live in
// market::Population and never travel with this struct.
struct UserProfile {
  UserId user_id = 0;
  Features features;
  Arm arm = Arm::kControl;
};

// ---------------------------------------------------------------------------
// Auction records
// ---------------------------------------------------------------------------

enum class Mechanism { kFirstPrice, kSecondPrice };

constexpr std::string_view mechanism_name(Mechanism m) {
  return m == Mechanism::kFirstPrice ? "first_price" : "second_price";
}

inline Mechanism mechanism_from_name(std::string_view s) {
  if (s == "first_price") return Mechanism::kFirstPrice;
  if (s == "second_price") return Mechanism::kSecondPrice;
  throw std::invalid_argument("unknown mechanism '" + std::string(s) + "'");
}

struct ImpressionLog {
  UserId user_id = 0;
  int day = 0;
  int hour = 0;
  std::uint64_t auction_id = 0;
  int slot_id = 0;
  Features features;
  std::int64_t exposure_count_before = 0;
  int bin_before = 0;
  double phi = 0;        // normalized value score at bid time (floored)
  double raw_score = 0;  // unnormalized lift or pCVR
  Money bid;             // zero means no bid was submitted
  bool won = false;
  Money price_paid;
  std::optional<Money> clearing_price;
  Mechanism mechanism = Mechanism::kFirstPrice;
  bool clicked = false;

  friend bool operator==(const ImpressionLog&, const ImpressionLog&) = default;
};

struct VisitLabel {
  UserId user_id = 0;
  std::int64_t final_exposure = 0;
  int visits = 0;
  friend bool operator==(const VisitLabel&, const VisitLabel&) = default;
};

}  // namespace liftbid
