#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "magd/errors.hpp"
#include "magd/problem.hpp"

namespace magd {

enum class Method { kMagd, kGossip, kSgd };

std::string_view to_string(Method m);
Method parse_method(std::string_view text);

struct ExperimentConfig {
  TopologyKind topology = TopologyKind::kCycle;
  int d = 10;
  std::vector<Method> methods{Method::kMagd, Method::kGossip};
  std::vector<std::uint64_t> seeds{1};
  std::int64_t max_iters = 1000;
  std::optional<double> gamma_override;
  double gamma_scale = 1.0;
  std::string output_path = "out";
  /// 0 selects a horizon from the chain size.
  std::int64_t mixing_horizon = 0;
  int mc_trials = 10000;

  double flip_probability = 0.5;
  int mixing_replicas = 400;
  int delta_samples = 20;
  /// Seeds the tau/delta estimation and the lemma probe points; kept apart
  /// from the run seeds so that changing a run seed touches only its traces.
  std::uint64_t analysis_seed = 0;
  double dist_sq_floor = 1e-12;
  std::optional<double> gossip_gamma;
  std::optional<double> sgd_gamma;
  /// Worker threads for the run pool; 0 uses the hardware count.
  int threads = 0;

  void validate() const;
};

/// Raised for malformed files, unknown keys, bad values and violated
/// invariants. `where` is "path:line", "--flag" or "config".
class ConfigError : public InvalidArgument {
 public:
  ConfigError(std::string where, const std::string& message)
      : InvalidArgument(where + ": " + message), where_(std::move(where)) {}
  const std::string& where() const { return where_; }

 private:
  std::string where_;
};

struct Setting {
  std::string key;
  std::string value;
  std::string origin;
};

/// Applies one key=value pair; throws ConfigError naming the origin.
void apply_setting(ExperimentConfig& config, const Setting& setting);

/// key = value lines; '#' and ';' start comments; [sections] are ignored.
std::vector<Setting> parse_config_text(std::string_view text, std::string_view source);

/// Defaults, then the file (if any), then flag settings in order; validated.
ExperimentConfig load_config(const std::optional<std::filesystem::path>& file,
                             const std::vector<Setting>& flags);

/// Config keys in canonical order with their current values.
std::vector<std::pair<std::string, std::string>> config_entries(const ExperimentConfig& config);

std::vector<std::uint64_t> parse_seed_list(std::string_view text);

}  // namespace magd
