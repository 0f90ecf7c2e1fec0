#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "magd/chain.hpp"
#include "magd/config.hpp"
#include "magd/optimizer.hpp"
#include "magd/problem.hpp"
#include "magd/trace.hpp"

namespace magd {

/// ceil(2 ln 4 C(d,2)) + 10: twice the step count at which the analytic
/// per-edge distance between the extreme starts reaches 1/4.
std::int64_t auto_mixing_horizon(int d);

/// Everything about a configuration that does not depend on the run seeds.
struct Analysis {
  Topology topology;
  ChainConfig chain;
  SpectralConstants spectral;
  NoiseConstants noise;
  MixingEstimate mixing;
  std::int64_t mixing_horizon = 0;
  ProblemConstants constants;
};

/// Topology, tau, spectral constants and delta. Uses streams derived from
/// config.analysis_seed only.
Analysis analyze(const ExperimentConfig& config);

/// Mixing estimate alone (cheaper than analyze()).
MixingEstimate mixing_for(const ExperimentConfig& config, std::int64_t* horizon_used = nullptr);

DerivedParams params_for(const ExperimentConfig& config, const ProblemConstants& constants);

/// Baseline steps: the configured value or 1 / L.
double gossip_step(const ExperimentConfig& config, const ProblemConstants& constants);
double sgd_step(const ExperimentConfig& config, const ProblemConstants& constants);

struct RunRecord {
  Method method = Method::kMagd;
  std::uint64_t seed = 0;
  /// Relative to the output directory.
  std::string trace_file;
  Termination termination = Termination::kMaxIters;
  std::size_t records = 0;
  std::uint64_t final_oracle_calls = 0;
  double final_dist_sq = 0.0;
  /// max over iterates of |sum(v) - sum(x0)| / (1 + |sum(x0)|), v in {x, x_f, x_g}.
  double max_sum_drift = 0.0;
  /// Kept out of the manifest text so reruns stay byte-identical.
  double wall_seconds = 0.0;

  bool failed() const { return termination == Termination::kNonFinite; }
};

struct RunManifest {
  ExperimentConfig config;
  std::int64_t mixing_horizon = 0;
  bool mixing_reached = true;
  ProblemConstants constants;
  double delta_analytic = 0.0;
  double delta_monte_carlo = 0.0;
  AgdParams params;
  GammaSource gamma_source = GammaSource::kSmoothness;
  double gossip_gamma = 0.0;
  double sgd_gamma = 0.0;
  std::vector<RunRecord> runs;

  bool any_failed() const;
};

inline constexpr std::string_view kManifestName = "manifest.txt";
inline constexpr std::string_view kTimingName = "timing.txt";

std::string trace_file_name(Method method, std::uint64_t seed);

/// Problem for one seed: x0 drawn uniform on [0, 10] from the seed's init stream.
ConsensusProblem make_problem(const ChainConfig& chain, std::uint64_t seed);

/// Chain for one seed, started from the base graph with the seed's chain stream.
EdgeFlipChain make_chain(const ConsensusProblem& problem, std::uint64_t seed);

/// One (method, seed) run.
Trace run_method(Method method, const ConsensusProblem& problem, const AgdParams& params,
                 double baseline_gamma, std::uint64_t seed, const StopRule& stop,
                 const IterateObserver& observer = {});

/// Full experiment: analysis, parameter derivation, every method x seed in a
/// worker pool, one CSV per run, then the manifest and the timing file.
RunManifest run_experiment(const ExperimentConfig& config);

std::string manifest_to_text(const RunManifest& manifest);
RunManifest parse_manifest_text(std::string_view text);
RunManifest read_manifest(const std::filesystem::path& path);

/// Every referenced trace exists and parses; record counts and final oracle
/// calls match. Returns a list of problems (empty when consistent).
std::vector<std::string> check_manifest(const RunManifest& manifest,
                                        const std::filesystem::path& directory);

}  // namespace magd
