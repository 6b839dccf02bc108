// Copyright 2026 The liftbid Authors
// SPDX-License-Identifier: Apache-2.0

// Pipeline stages behind the command-line tool. Directory layout:
//   <root>/<run_id>/config.resolved
//   <root>/<run_id>/logging/{impressions.jsonl, labels.csv, users.csv, manifest.json}
//   <root>/<run_id>/bundles/bundle_<mode>.json
//   <root>/<run_id>/<arm>/{impressions.jsonl, labels.csv}
//   <root>/<run_id>/{manifest.json, report.csv, report.json, pacing.csv, fig3_bins.csv}

#pragma once

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "liftbid/bidding.hpp"
#include "liftbid/config.hpp"
#include "liftbid/harness/experiment.hpp"
#include "liftbid/harness/io.hpp"
#include "liftbid/harness/metrics.hpp"
#include "liftbid/learning/bundle.hpp"

namespace liftbid::cli {

namespace fs = std::filesystem;

inline constexpr const char* kOutEnv = "LIFTBID_OUT";

// Output root: the explicit flag, then $LIFTBID_OUT, then ./runs.
inline fs::path output_root(const std::optional<fs::path>& flag) {
  if (flag) return *flag;
  if (const char* env = std::getenv(kOutEnv); env && *env) return env;
  return "runs";
}

inline std::string bundle_file_name(learning::BundleMode mode) {
  return "bundle_" + std::string(learning::bundle_mode_name(mode)) + ".json";
}

inline void write_json(const fs::path& path, const nlohmann::json& j) {
  harness::io::write_text(path, j.dump(2) + "\n");
}

inline nlohmann::json read_json(const fs::path& path) {
  try {
    return nlohmann::json::parse(harness::io::read_text(path));
  } catch (const nlohmann::json::exception& e) {
    throw harness::io::IoError(path.string() + ": " + e.what());
  }
}

struct SimulateLogResult {
  fs::path run_dir;
  fs::path logging_dir;
  std::int64_t requests = 0;
};

inline SimulateLogResult cmd_simulate_log(const config::RunConfig& rc, std::uint64_t seed, const fs::path& root) {
  SimulateLogResult out;
  out.run_dir = root / rc.run_id;
  out.logging_dir = out.run_dir / "logging";
  fs::create_directories(out.logging_dir);
  harness::io::write_text(out.run_dir / "config.resolved", config::resolved_config(rc));

  harness::io::JsonlWriter writer(out.logging_dir / "impressions.jsonl");
  const auto result = harness::run_logging_campaign(rc.plan, seed, [&](const ImpressionLog& l) { writer(l); });
  writer.close();
  harness::io::write_labels(out.logging_dir / "labels.csv", result.labels);
  harness::io::write_users(out.logging_dir / "users.csv", result.users);
  write_json(out.logging_dir / "manifest.json", {{"format", "liftbid.logging_run"},
                                                 {"version", 1},
                                                 {"seed", seed},
                                                 {"users", result.users.size()},
                                                 {"requests", result.requests}});
  out.requests = result.requests;
  return out;
}

// Training inputs recovered from a logging directory.
struct LoggedData {
  learning::TrainingData data;
  bidding::PctrModel pctr;
  std::uint64_t seed = 0;
};

inline LoggedData load_logged_data(const fs::path& logs) {
  LoggedData out;
  const auto manifest = read_json(logs / "manifest.json");
  out.seed = manifest.at("seed").get<std::uint64_t>();
  const auto users = harness::io::read_users(logs / "users.csv");
  const auto labels = harness::io::read_labels(logs / "labels.csv");
  out.data = harness::build_training_data(users, labels);
  harness::io::for_each_log(logs / "impressions.jsonl", [&](const ImpressionLog& l) { out.pctr.observe(l); });
  return out;
}

inline fs::path cmd_train(const config::RunConfig& rc, const fs::path& logs, learning::BundleMode mode,
                          const fs::path& out_dir) {
  const auto logged = load_logged_data(logs);
  const auto bundle = learning::train_bundle(logged.data, logged.pctr, mode, rc.plan.learner, logged.seed);
  const auto path = out_dir / bundle_file_name(mode);
  harness::io::write_text(path, learning::dump_bundle(bundle));
  return path;
}

inline harness::BundleSet load_bundles(const fs::path& dir) {
  harness::BundleSet out;
  for (Arm arm : kAllArms) {
    if (arm == Arm::kControl) continue;
    const auto path = dir / bundle_file_name(bidding::required_bundle_mode(arm));
    try {
      out[static_cast<std::size_t>(arm)] =
          std::make_shared<const learning::ModelBundle>(learning::bundle_from_json(read_json(path)));
    } catch (const std::invalid_argument& e) {
      throw harness::io::IoError(path.string() + ": " + e.what());
    } catch (const nlohmann::json::exception& e) {
      throw harness::io::IoError(path.string() + ": " + e.what());
    }
  }
  return out;
}

inline nlohmann::json run_manifest(const harness::ExperimentPlan& plan, std::uint64_t seed,
                                   const std::vector<harness::ArmResult>& arms) {
  nlohmann::json list = nlohmann::json::array();
  for (const auto& a : arms)
    list.push_back({{"arm", arm_name(a.arm)},
                    {"budget_share", a.budget_share},
                    {"budget_micros", a.budget.micros()},
                    {"spend_micros", a.spend.micros()},
                    {"users", a.labels.size()},
                    {"requests", a.requests}});
  return {{"format", "liftbid.ab_run"},
          {"version", 1},
          {"seed", seed},
          {"cpc_micros", plan.ab.cpc.micros()},
          {"arms", list}};
}

struct ExperimentCmdResult {
  fs::path run_dir;
  harness::MetricsReport report;
};

inline ExperimentCmdResult cmd_experiment(const config::RunConfig& rc, const fs::path& bundles_dir,
                                          std::uint64_t seed, const fs::path& root) {
  ExperimentCmdResult out;
  out.run_dir = root / rc.run_id;
  fs::create_directories(out.run_dir);
  harness::io::write_text(out.run_dir / "config.resolved", config::resolved_config(rc));
  const auto bundles = load_bundles(bundles_dir);
  const auto pop = harness::experiment_population(rc.plan, seed);

  std::vector<std::unique_ptr<harness::io::JsonlWriter>> writers;
  for (Arm arm : kAllArms)
    writers.push_back(
        std::make_unique<harness::io::JsonlWriter>(out.run_dir / arm_name(arm) / "impressions.jsonl"));
  auto ab = harness::run_ab_experiment(rc.plan, pop, bundles, seed, [&](Arm arm) {
    auto* w = writers[static_cast<std::size_t>(arm)].get();
    return [w](const ImpressionLog& l) { (*w)(l); };
  });
  for (auto& w : writers) w->close();
  for (const auto& a : ab.arms) harness::io::write_labels(out.run_dir / arm_name(a.arm) / "labels.csv", a.labels);
  write_json(out.run_dir / "manifest.json", run_manifest(rc.plan, seed, ab.arms));
  harness::io::emit_report(ab.report, harness::io::ReportFormat::kCsv, out.run_dir);
  harness::io::emit_report(ab.report, harness::io::ReportFormat::kJson, out.run_dir);
  out.report = std::move(ab.report);
  return out;
}

// Recomputes the report from the raw files of a finished run.
inline harness::MetricsReport load_run_report(const fs::path& run_dir) {
  const auto manifest = read_json(run_dir / "manifest.json");
  const Money cpc = Money::micros(manifest.at("cpc_micros").get<std::int64_t>());
  const auto pacing_rows = harness::io::read_pacing_csv(run_dir / "pacing.csv");

  std::vector<harness::ArmAccumulator> acc;
  std::vector<std::vector<VisitLabel>> labels;
  std::vector<std::vector<pacing::PacingPoint>> traj;
  std::vector<Arm> arms;
  for (const auto& a : manifest.at("arms")) {
    const Arm arm = arm_from_name(a.at("arm").get<std::string>());
    const auto dir = run_dir / arm_name(arm);
    harness::ArmAccumulator acc_arm(arm, cpc, a.at("budget_share").get<double>());
    harness::io::for_each_log(dir / "impressions.jsonl", [&](const ImpressionLog& l) { acc_arm.add(l); });
    acc.push_back(std::move(acc_arm));
    labels.push_back(harness::io::read_labels(dir / "labels.csv"));
    std::vector<pacing::PacingPoint> t;
    for (const auto& p : pacing_rows)
      if (p.arm == arm) t.push_back(p.point);
    traj.push_back(std::move(t));
    arms.push_back(arm);
  }
  return harness::assemble_report(cpc, acc, labels, traj, arms);
}

inline harness::MetricsReport cmd_report(const fs::path& run_dir, harness::io::ReportFormat format) {
  auto report = load_run_report(run_dir);
  harness::io::emit_report(report, format, run_dir);
  return report;
}

}  // namespace liftbid::cli
