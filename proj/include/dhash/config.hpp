#ifndef DHASH_CONFIG_HPP
#define DHASH_CONFIG_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "dhash/allocator.hpp"
#include "dhash/choosers.hpp"
#include "dhash/queuesim.hpp"

namespace dhash {

enum class Kind : std::uint8_t { balls, queue, fluid, coupled, ancestry, compare };

std::string_view kind_tag(Kind k) noexcept;
std::optional<Kind> parse_kind(std::string_view tag) noexcept;

/// A problem with one configuration field.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& message)
      : std::runtime_error(field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// Raw flat key=value settings. Later layers overwrite earlier ones.
using ConfigMap = std::map<std::string, std::string>;

/// Parses `key = value` lines; '#' starts a comment. Throws ConfigError.
ConfigMap parse_config_text(std::string_view text, std::string_view origin = "config");

/// Reads a key=value file, or the embedded config of a JSON report.
ConfigMap load_config_file(const std::string& path);

struct Preset {
  std::string name;
  std::string description;
  ConfigMap settings;
};

/// Bundled presets, sorted by name.
const std::vector<Preset>& presets();
const Preset* find_preset(std::string_view name);

struct ExperimentConfig {
  Kind kind = Kind::balls;
  std::vector<Scheme> schemes;
  std::uint32_t n = 0;
  std::uint64_t m = 0;
  std::uint32_t d = 0;
  std::uint64_t trials = 0;
  std::uint64_t paper_trials = 0;
  std::uint64_t master_seed = 1;
  std::optional<TieBreak> tie_break;  // unset: per-scheme default
  double lambda = 0.0;
  double horizon = 0.0;
  double burn_in = 0.0;
  QueueEngine engine = QueueEngine::race;
  double T = 1.0;
  int K = 16;
  double h = 1e-3;
  std::string system = "bins";  // fluid kind: bins | queues
  std::vector<std::uint32_t> ns;
  std::string output_path;
  std::string table_preset;
  bool paper_scale = false;

  /// Leftmost for d-left schemes, else the configured rule (default random).
  TieBreak tie_break_for(Scheme s) const noexcept;
};

/// Validates and types a merged ConfigMap. Throws ConfigError naming the
/// offending field.
ExperimentConfig resolve(const ConfigMap& map);

/// The fully resolved configuration as canonical key=value pairs; feeding it
/// back to resolve() reproduces the same experiment.
ConfigMap canonical(const ExperimentConfig& cfg);

/// Builds the effective map: preset (if any), then file, then overrides.
/// `paper_scale` swaps trials for the preset's paper_trials.
ConfigMap layer(const std::optional<std::string>& preset, const std::optional<std::string>& config_path,
                const ConfigMap& overrides, bool paper_scale);

}  // namespace dhash

#endif  // DHASH_CONFIG_HPP
