// Experiment runner for balanced allocation with double hashing.
//
//   dhash run --preset table1a [--trials N] [--seed S] [--output DIR] [--check]
//   dhash run --config my.conf [--key value ...]
//   dhash list-presets
//   dhash validate --preset table6 --n 8192
//
// Exit codes: 0 success, 1 configuration error, 2 runtime error,
// 3 reference check failed (only with --check).

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "dhash/config.hpp"
#include "dhash/experiment.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 1;
constexpr int kRuntimeError = 2;
constexpr int kCheckFailed = 3;

// Turns leftover `--key value` / `--key=value` arguments into config overrides.
dhash::ConfigMap parse_overrides(const std::vector<std::string>& extras) {
  dhash::ConfigMap out;
  for (std::size_t i = 0; i < extras.size(); ++i) {
    const std::string& arg = extras[i];
    if (arg.rfind("--", 0) != 0 || arg.size() == 2)
      throw dhash::ConfigError(arg, "expected --key value");
    std::string key = arg.substr(2);
    std::string value;
    if (const auto eq = key.find('='); eq != std::string::npos) {
      value = key.substr(eq + 1);
      key.erase(eq);
    } else {
      if (i + 1 >= extras.size()) throw dhash::ConfigError(key, "missing value");
      value = extras[++i];
    }
    for (auto& c : key)
      if (c == '-') c = '_';
    if (key == "seed") key = "master_seed";
    if (key == "output") key = "output_path";
    out[key] = value;
  }
  return out;
}

struct Source {
  std::optional<std::string> preset;
  std::optional<std::string> config;
  bool paper_scale = false;
};

dhash::ExperimentConfig load(const Source& src, const std::vector<std::string>& extras) {
  const auto map = dhash::layer(src.preset, src.config, parse_overrides(extras), src.paper_scale);
  auto cfg = dhash::resolve(map);
  cfg.paper_scale = src.paper_scale;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Balanced allocations with double hashing: simulations, fluid limits, and diagnostics"};
  app.require_subcommand(1);

  Source run_src;
  bool check = false;
  unsigned threads = 1;
  std::string output;
  auto* run = app.add_subcommand("run", "Run an experiment and write its reports");
  run->add_option("--preset", run_src.preset, "Bundled preset name (see list-presets)");
  run->add_option("--config", run_src.config, "key=value config file, or a report.json to replay");
  run->add_flag("--paper-scale", run_src.paper_scale, "Use the preset's full trial count");
  run->add_flag("--check", check, "Exit with status 3 if a reference check fails");
  run->add_option("--threads", threads, "Worker threads for trial fan-out")->check(CLI::PositiveNumber);
  run->add_option("--output", output, "Directory for report.json and the CSV rows");
  run->allow_extras();

  auto* list = app.add_subcommand("list-presets", "List bundled presets");

  Source val_src;
  auto* val = app.add_subcommand("validate", "Check a configuration without running it");
  val->add_option("--preset", val_src.preset, "Bundled preset name");
  val->add_option("--config", val_src.config, "key=value config file or report.json");
  val->add_flag("--paper-scale", val_src.paper_scale, "Use the preset's full trial count");
  val->allow_extras();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  if (*list) {
    for (const auto& p : dhash::presets()) std::cout << p.name << "  " << p.description << "\n";
    return kOk;
  }

  dhash::ExperimentConfig cfg;
  try {
    if (*val) {
      cfg = load(val_src, val->remaining());
      for (const auto& [k, v] : dhash::canonical(cfg)) std::cout << k << " = " << v << "\n";
      return kOk;
    }
    std::vector<std::string> extras = run->remaining();
    if (!output.empty()) {
      extras.push_back("--output_path");
      extras.push_back(output);
    }
    cfg = load(run_src, extras);
  } catch (const dhash::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  }

  try {
    const auto out = dhash::run_experiment(cfg, {threads});
    std::cout << out.summary;
    if (!cfg.output_path.empty()) {
      dhash::write_outputs(out, cfg.output_path);
      std::cerr << "wrote " << cfg.output_path << "/report.json and " << cfg.output_path << "/" << out.csv_name << "\n";
    }
    if (check && !out.all_checks_pass()) {
      std::cerr << "reference check failed\n";
      return kCheckFailed;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntimeError;
  }
  return kOk;
}
