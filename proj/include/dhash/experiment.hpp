#ifndef DHASH_EXPERIMENT_HPP
#define DHASH_EXPERIMENT_HPP

#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dhash/config.hpp"

namespace dhash {

struct RunOptions {
  /// Worker threads for trial fan-out. Results do not depend on it.
  unsigned threads = 1;
};

/// One comparison against a published or derived reference value.
struct Check {
  std::string name;
  double value = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  bool pass = false;
};

struct RunOutput {
  nlohmann::ordered_json report;
  std::string csv_name;  // e.g. trials.csv
  std::string csv;
  std::string summary;   // human-readable tables, 5 decimals
  std::vector<Check> checks;

  bool all_checks_pass() const noexcept;
};

/// Runs the experiment described by `cfg`. Trial i of every scheme uses the
/// stream seeded by derive_seed(master_seed, i).
RunOutput run_experiment(const ExperimentConfig& cfg, const RunOptions& options = {});

/// Writes report.json and the CSV into `dir`, creating it if needed. Throws
/// std::runtime_error when the directory or files cannot be written.
void write_outputs(const RunOutput& out, const std::string& dir);

/// Calls fn(i) for i in [0, count) across `threads` workers.
void parallel_for(std::uint64_t count, unsigned threads, const std::function<void(std::uint64_t)>& fn);

/// Least-squares fit y = a + b x; returns {a, b}.
std::pair<double, double> fit_line(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace dhash

#endif  // DHASH_EXPERIMENT_HPP
