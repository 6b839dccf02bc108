// Copyright 2026 The liftbid Authors
// SPDX-License-Identifier: Apache-2.0

// File formats:
//   impressions.jsonl  one ImpressionLog object per line (keys sorted)
//   labels.csv         user_id,s_final,y_obs
//   users.csv          user_id,arm,visit_frequency,distance_km,prior_impressions,logged_pcvr
//   report.csv         arm,metric,value,se,vs_baseline,vs_baseline_se,vs_average
//   report.json        {"format":"liftbid.metrics_report","version":1,...}
//   pacing.csv         hour,arm,alpha,window_spend_micros
//   fig3_bins.csv      arm,bin,phi_lower,phi_upper,users,mean_visits,se
// Empty fields in CSV and nulls in JSON mark undefined values.

#pragma once

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "liftbid/domain.hpp"
#include "liftbid/harness/metrics.hpp"

namespace liftbid::harness::io {

class IoError : public Error {
 public:
  using Error::Error;
};

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string format_optional(const std::optional<double>& v) {
  return v ? format_double(*v) : std::string();
}

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline double parse_double(const std::string& s, const std::string& what) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) throw IoError("malformed number in " + what + ": '" + s + "'");
  return v;
}

inline std::int64_t parse_int(const std::string& s, const std::string& what) {
  char* end = nullptr;
  const long long v = std::strtoll(s.c_str(), &end, 10);
  if (s.empty() || end != s.c_str() + s.size()) throw IoError("malformed integer in " + what + ": '" + s + "'");
  return v;
}

inline std::optional<double> parse_optional(const std::string& s, const std::string& what) {
  if (s.empty()) return std::nullopt;
  return parse_double(s, what);
}

inline std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  return out;
}

inline std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return in;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  auto out = open_out(path);
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

inline std::string read_text(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------------------
// Impression logs
// ---------------------------------------------------------------------------

inline nlohmann::json features_to_json(const Features& f) {
  return {{"visit_frequency", f.visit_frequency},
          {"distance_km", f.distance_km},
          {"prior_impressions", f.prior_impressions},
          {"logged_pcvr", f.logged_pcvr}};
}

inline Features features_from_json(const nlohmann::json& j) {
  return {j.at("visit_frequency").get<double>(), j.at("distance_km").get<double>(),
          j.at("prior_impressions").get<double>(), j.at("logged_pcvr").get<double>()};
}

inline nlohmann::json log_to_json(const ImpressionLog& l) {
  nlohmann::json j = {{"user_id", l.user_id},
                      {"day", l.day},
                      {"hour", l.hour},
                      {"auction_id", l.auction_id},
                      {"slot_id", l.slot_id},
                      {"features", features_to_json(l.features)},
                      {"exposure_count_before", l.exposure_count_before},
                      {"bin_before", l.bin_before},
                      {"phi", l.phi},
                      {"raw_score", l.raw_score},
                      {"bid_micros", l.bid.micros()},
                      {"won", l.won},
                      {"price_paid_micros", l.price_paid.micros()},
                      {"clearing_price_micros", nullptr},
                      {"mechanism", mechanism_name(l.mechanism)},
                      {"clicked", l.clicked}};
  if (l.clearing_price) j["clearing_price_micros"] = l.clearing_price->micros();
  return j;
}

inline ImpressionLog log_from_json(const nlohmann::json& j) {
  ImpressionLog l;
  l.user_id = j.at("user_id").get<UserId>();
  l.day = j.at("day").get<int>();
  l.hour = j.at("hour").get<int>();
  l.auction_id = j.at("auction_id").get<std::uint64_t>();
  l.slot_id = j.at("slot_id").get<int>();
  l.features = features_from_json(j.at("features"));
  l.exposure_count_before = j.at("exposure_count_before").get<std::int64_t>();
  l.bin_before = j.at("bin_before").get<int>();
  l.phi = j.at("phi").get<double>();
  l.raw_score = j.at("raw_score").get<double>();
  l.bid = Money::micros(j.at("bid_micros").get<std::int64_t>());
  l.won = j.at("won").get<bool>();
  l.price_paid = Money::micros(j.at("price_paid_micros").get<std::int64_t>());
  if (!j.at("clearing_price_micros").is_null())
    l.clearing_price = Money::micros(j.at("clearing_price_micros").get<std::int64_t>());
  l.mechanism = mechanism_from_name(j.at("mechanism").get<std::string>());
  l.clicked = j.at("clicked").get<bool>();
  return l;
}

class JsonlWriter {
 public:
  explicit JsonlWriter(const std::filesystem::path& path) : out_(open_out(path)) {}
  void operator()(const ImpressionLog& log) { out_ << log_to_json(log).dump() << '\n'; }
  void close() {
    out_.flush();
    if (!out_) throw IoError("failed writing impression log");
  }

 private:
  std::ofstream out_;
};

inline void for_each_log(const std::filesystem::path& path,
                         const std::function<void(const ImpressionLog&)>& fn) {
  auto in = open_in(path);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      fn(log_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw IoError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

inline std::vector<ImpressionLog> read_logs(const std::filesystem::path& path) {
  std::vector<ImpressionLog> out;
  for_each_log(path, [&](const ImpressionLog& l) { out.push_back(l); });
  return out;
}

// ---------------------------------------------------------------------------
// Labels and user tables
// ---------------------------------------------------------------------------

inline void write_labels(const std::filesystem::path& path, std::span<const VisitLabel> labels) {
  auto out = open_out(path);
  out << "user_id,s_final,y_obs\n";
  for (const auto& l : labels) out << l.user_id << ',' << l.final_exposure << ',' << l.visits << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

inline std::vector<VisitLabel> read_labels(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line) || line != "user_id,s_final,y_obs")
    throw IoError(path.string() + ": unexpected header");
  std::vector<VisitLabel> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != 3) throw IoError(path.string() + ": expected 3 columns");
    out.push_back({static_cast<UserId>(parse_int(cells[0], "user_id")), parse_int(cells[1], "s_final"),
                   static_cast<int>(parse_int(cells[2], "y_obs"))});
  }
  return out;
}

inline void write_users(const std::filesystem::path& path, std::span<const UserProfile> users) {
  auto out = open_out(path);
  out << "user_id,arm,visit_frequency,distance_km,prior_impressions,logged_pcvr\n";
  for (const auto& u : users) {
    const auto& f = u.features;
    out << u.user_id << ',' << arm_name(u.arm) << ',' << format_double(f.visit_frequency) << ','
        << format_double(f.distance_km) << ',' << format_double(f.prior_impressions) << ','
        << format_double(f.logged_pcvr) << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

inline std::vector<UserProfile> read_users(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line) ||
      line != "user_id,arm,visit_frequency,distance_km,prior_impressions,logged_pcvr")
    throw IoError(path.string() + ": unexpected header");
  std::vector<UserProfile> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto c = split_csv(line);
    if (c.size() != 6) throw IoError(path.string() + ": expected 6 columns");
    UserProfile u;
    u.user_id = static_cast<UserId>(parse_int(c[0], "user_id"));
    u.arm = arm_from_name(c[1]);
    u.features = {parse_double(c[2], "visit_frequency"), parse_double(c[3], "distance_km"),
                  parse_double(c[4], "prior_impressions"), parse_double(c[5], "logged_pcvr")};
    out.push_back(u);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

struct CountDef {
  std::string_view name;
  double (*get)(const ArmMetrics&);
};

inline constexpr std::array<CountDef, 8> kCountMetrics = {{
    {"users", [](const ArmMetrics& a) { return static_cast<double>(a.users); }},
    {"bid_requests", [](const ArmMetrics& a) { return static_cast<double>(a.bid_requests); }},
    {"impressions", [](const ArmMetrics& a) { return static_cast<double>(a.impressions); }},
    {"clicks", [](const ArmMetrics& a) { return static_cast<double>(a.clicks); }},
    {"second_price_wins", [](const ArmMetrics& a) { return static_cast<double>(a.second_price_wins); }},
    {"spend_micros", [](const ArmMetrics& a) { return a.spend.as_double(); }},
    {"cpc_charge_micros", [](const ArmMetrics& a) { return a.cpc_charge.as_double(); }},
    {"budget_share", [](const ArmMetrics& a) { return a.budget_share; }},
}};

struct MetricRow {
  std::string name;
  Estimate raw;
  Estimate vs_baseline;
  std::optional<double> vs_average;
};

// Every metric of one arm with its baseline- and average-normalized forms.
inline std::vector<MetricRow> metric_rows(const MetricsReport& report, const ArmMetrics& arm) {
  std::vector<MetricRow> rows;
  const auto* base = report.find(Arm::kBaseline);
  for (const auto& c : kCountMetrics) {
    const Estimate raw{c.get(arm), std::nullopt};
    std::optional<double> ref;
    if (base) ref = c.get(*base);
    rows.push_back({std::string(c.name), raw, relative_to(raw, ref), std::nullopt});
  }
  for (const auto& m : kEstimateMetrics) {
    const Estimate& raw = arm.*(m.field);
    const auto avg = bidding_average(report, m.field);
    std::optional<double> vs_avg;
    if (raw.value && avg && *avg != 0.0) vs_avg = *raw.value / *avg;
    rows.push_back({std::string(m.name), raw, relative_to(raw, baseline_value(report, m.field)), vs_avg});
  }
  return rows;
}

inline std::string report_csv(const MetricsReport& report) {
  std::string out = "arm,metric,value,se,vs_baseline,vs_baseline_se,vs_average\n";
  for (const auto& arm : report.arms)
    for (const auto& r : metric_rows(report, arm)) {
      out += std::string(arm_name(arm.arm)) + ',' + r.name + ',' + format_optional(r.raw.value) + ',' +
             format_optional(r.raw.se) + ',' + format_optional(r.vs_baseline.value) + ',' +
             format_optional(r.vs_baseline.se) + ',' + format_optional(r.vs_average) + '\n';
    }
  return out;
}

inline nlohmann::json optional_json(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

inline std::optional<double> optional_from_json(const nlohmann::json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

inline nlohmann::json report_to_json(const MetricsReport& report) {
  using nlohmann::json;
  json arms = json::array();
  for (const auto& arm : report.arms) {
    json metrics = json::object();
    for (const auto& r : metric_rows(report, arm))
      metrics[r.name] = {{"value", optional_json(r.raw.value)},
                         {"se", optional_json(r.raw.se)},
                         {"vs_baseline", optional_json(r.vs_baseline.value)},
                         {"vs_baseline_se", optional_json(r.vs_baseline.se)},
                         {"vs_average", optional_json(r.vs_average)}};
    arms.push_back({{"arm", arm_name(arm.arm)}, {"metrics", metrics}});
  }
  json pacing = json::array();
  for (const auto& p : report.pacing)
    pacing.push_back({{"arm", arm_name(p.arm)},
                      {"hour", p.point.hour},
                      {"alpha", p.point.alpha},
                      {"window_spend_micros", p.point.window_spend.micros()}});
  json fig3 = json::array();
  for (const auto& f : report.fig3)
    fig3.push_back({{"arm", arm_name(f.arm)},
                    {"bin", f.bin},
                    {"users", f.users},
                    {"mean_visits", optional_json(f.mean_visits.value)},
                    {"se", optional_json(f.mean_visits.se)}});
  return {{"format", "liftbid.metrics_report"},
          {"version", 1},
          {"cpc_micros", report.cpc.micros()},
          {"arms", arms},
          {"pacing", pacing},
          {"fig3", fig3}};
}

inline MetricsReport report_from_json(const nlohmann::json& j) {
  if (j.at("format").get<std::string>() != "liftbid.metrics_report" || j.at("version").get<int>() != 1)
    throw IoError("not a version 1 metrics report");
  MetricsReport r;
  r.cpc = Money::micros(j.at("cpc_micros").get<std::int64_t>());
  for (const auto& a : j.at("arms")) {
    ArmMetrics m;
    m.arm = arm_from_name(a.at("arm").get<std::string>());
    const auto& mj = a.at("metrics");
    auto count = [&](const char* name) { return mj.at(name).at("value").get<double>(); };
    m.users = static_cast<std::int64_t>(count("users"));
    m.bid_requests = static_cast<std::int64_t>(count("bid_requests"));
    m.impressions = static_cast<std::int64_t>(count("impressions"));
    m.clicks = static_cast<std::int64_t>(count("clicks"));
    m.second_price_wins = static_cast<std::int64_t>(count("second_price_wins"));
    m.spend = Money::micros(mj.at("spend_micros").at("value").get<std::int64_t>());
    m.cpc_charge = Money::micros(mj.at("cpc_charge_micros").at("value").get<std::int64_t>());
    m.budget_share = count("budget_share");
    for (const auto& def : kEstimateMetrics) {
      const auto& e = mj.at(std::string(def.name));
      m.*(def.field) = {optional_from_json(e.at("value")), optional_from_json(e.at("se"))};
    }
    r.arms.push_back(m);
  }
  for (const auto& p : j.at("pacing"))
    r.pacing.push_back({arm_from_name(p.at("arm").get<std::string>()),
                        {p.at("hour").get<int>(), p.at("alpha").get<double>(),
                         Money::micros(p.at("window_spend_micros").get<std::int64_t>())}});
  for (const auto& f : j.at("fig3"))
    r.fig3.push_back({arm_from_name(f.at("arm").get<std::string>()), f.at("bin").get<int>(),
                      f.at("users").get<std::int64_t>(),
                      {optional_from_json(f.at("mean_visits")), optional_from_json(f.at("se"))}});
  return r;
}

inline std::string pacing_csv(std::span<const PacingRow> rows) {
  std::string out = "hour,arm,alpha,window_spend_micros\n";
  for (const auto& p : rows)
    out += std::to_string(p.point.hour) + ',' + std::string(arm_name(p.arm)) + ',' +
           format_double(p.point.alpha) + ',' + std::to_string(p.point.window_spend.micros()) + '\n';
  return out;
}

inline std::vector<PacingRow> read_pacing_csv(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line) || line != "hour,arm,alpha,window_spend_micros")
    throw IoError(path.string() + ": unexpected header");
  std::vector<PacingRow> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto c = split_csv(line);
    if (c.size() != 4) throw IoError(path.string() + ": expected 4 columns");
    out.push_back({arm_from_name(c[1]),
                   {static_cast<int>(parse_int(c[0], "hour")), parse_double(c[2], "alpha"),
                    Money::micros(parse_int(c[3], "window_spend_micros"))}});
  }
  return out;
}

inline std::string fig3_csv(std::span<const Fig3Row> rows) {
  std::string out = "arm,bin,phi_lower,phi_upper,users,mean_visits,se\n";
  for (const auto& f : rows) {
    const double lower = f.bin == 0 ? 0.0 : f.bin - 0.5;
    const std::string upper = f.bin >= kFig3Bins ? std::string() : format_double(f.bin + 0.5);
    out += std::string(arm_name(f.arm)) + ',' + std::to_string(f.bin) + ',' + format_double(lower) + ',' +
           upper + ',' + std::to_string(f.users) + ',' + format_optional(f.mean_visits.value) + ',' +
           format_optional(f.mean_visits.se) + '\n';
  }
  return out;
}

enum class ReportFormat { kCsv, kJson };

inline ReportFormat report_format_from_name(std::string_view s) {
  if (s == "csv") return ReportFormat::kCsv;
  if (s == "json") return ReportFormat::kJson;
  throw std::invalid_argument("unknown report format '" + std::string(s) + "'");
}

// Writes report.<fmt>, pacing.csv and fig3_bins.csv into `dir`.
inline void emit_report(const MetricsReport& report, ReportFormat format, const std::filesystem::path& dir) {
  if (format == ReportFormat::kCsv)
    write_text(dir / "report.csv", report_csv(report));
  else
    write_text(dir / "report.json", report_to_json(report).dump(2) + "\n");
  write_text(dir / "pacing.csv", pacing_csv(report.pacing));
  write_text(dir / "fig3_bins.csv", fig3_csv(report.fig3));
}

}  // namespace liftbid::harness::io
