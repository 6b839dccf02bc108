// Copyright 2026 The liftbid Authors
// SPDX-License-Identifier: Apache-2.0

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "liftbid/cli.hpp"

namespace {

namespace fs = std::filesystem;
using liftbid::cli::output_root;

int fail(const std::string& kind, const std::string& message, const nlohmann::json& extra = nlohmann::json::object()) {
  nlohmann::json j = {{"error", kind}, {"message", message}};
  j.update(extra);
  std::cerr << j.dump() << std::endl;
  return kind == "config" || kind == "usage" ? 2 : 1;
}

std::optional<fs::path> optional_path(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return fs::path(s);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"liftbid: lift-based bidding simulator"};
  app.require_subcommand(1);

  std::string config_path, out, logs, mode, bundles_dir, run_dir, format = "csv";
  std::optional<std::uint64_t> seed;

  auto* sim = app.add_subcommand("simulate-log", "Run the logging campaign and write training logs");
  sim->add_option("--config", config_path, "Run config file (YAML)")->required();
  sim->add_option("--seed", seed, "Master seed (overrides experiment.seed)");
  sim->add_option("--out", out, "Output root (default $LIFTBID_OUT or ./runs)");

  auto* train = app.add_subcommand("train", "Train one model bundle from logging-campaign files");
  train->add_option("--config", config_path, "Run config file (YAML)")->required();
  train->add_option("--logs", logs, "Logging directory written by simulate-log")->required();
  train->add_option("--mode", mode, "Training mode")
      ->required()
      ->check(CLI::IsMember({"erm", "ips", "ips-clipped", "pcvr"}));
  train->add_option("--out", out, "Bundle directory (default <logs>/../bundles)");

  auto* exp = app.add_subcommand("experiment", "Run the five-arm experiment");
  exp->add_option("--config", config_path, "Run config file (YAML)")->required();
  exp->add_option("--bundles-dir", bundles_dir, "Directory with bundle_<mode>.json files")->required();
  exp->add_option("--seed", seed, "Master seed (overrides experiment.seed)");
  exp->add_option("--out", out, "Output root (default $LIFTBID_OUT or ./runs)");

  auto* rep = app.add_subcommand("report", "Recompute report files from a run directory");
  rep->add_option("--run-dir", run_dir, "Run directory written by experiment")->required();
  rep->add_option("--format", format, "Report format")->check(CLI::IsMember({"csv", "json"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage", e.what());
  }

  try {
    if (*rep) {
      liftbid::cli::cmd_report(run_dir, liftbid::harness::io::report_format_from_name(format));
      std::cout << (fs::path(run_dir) / ("report." + format)).string() << "\n";
      return 0;
    }

    const auto rc = liftbid::config::load_config(config_path);
    const std::uint64_t master = seed.value_or(rc.plan.seed);
    if (*sim) {
      const auto r = liftbid::cli::cmd_simulate_log(rc, master, output_root(optional_path(out)));
      std::cout << r.logging_dir.string() << "\n";
    } else if (*train) {
      fs::path logs_dir = fs::path(logs).lexically_normal();
      if (!logs_dir.has_filename()) logs_dir = logs_dir.parent_path();
      const fs::path dir = out.empty() ? logs_dir.parent_path() / "bundles" : fs::path(out);
      const auto path =
          liftbid::cli::cmd_train(rc, logs, liftbid::learning::bundle_mode_from_name(mode), dir);
      std::cout << path.string() << "\n";
    } else if (*exp) {
      const auto r = liftbid::cli::cmd_experiment(rc, bundles_dir, master, output_root(optional_path(out)));
      std::cout << r.run_dir.string() << "\n";
    }
  } catch (const liftbid::config::ConfigError& e) {
    return fail("config", e.what(), {{"key", e.key()}, {"line", e.line()}});
  } catch (const liftbid::UnderpopulatedBin& e) {
    return fail("underpopulated_bin", e.what());
  } catch (const liftbid::Error& e) {
    return fail("liftbid", e.what());
  } catch (const std::exception& e) {
    return fail("runtime", e.what());
  }
  return 0;
}
