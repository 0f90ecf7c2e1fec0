#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "magd/config.hpp"
#include "magd/problem.hpp"

namespace magd {

enum class LemmaCheckKind { kMse, kIdentity, kVariance };

std::string_view to_string(LemmaCheckKind kind);
LemmaCheckKind parse_lemma_check_kind(std::string_view text);

/// One Monte Carlo check. For kMse the parameter is the batch size n, for
/// the other two it is the truncation M. For kIdentity `empirical` is the
/// distance between the two means and `bound` is three combined standard
/// errors.
struct LemmaCheck {
  LemmaCheckKind kind = LemmaCheckKind::kMse;
  int probe = 0;
  std::uint64_t parameter = 0;
  double empirical = 0.0;
  double bound = 0.0;

  bool passed() const { return empirical <= bound; }
  /// bound / empirical, +inf when the empirical value is zero.
  double ratio() const;
  bool operator==(const LemmaCheck&) const = default;
};

struct LemmaReport {
  ProblemConstants constants;
  int trials = 0;
  std::vector<LemmaCheck> checks;

  bool all_passed() const;
  bool operator==(const LemmaReport&) const;
};

inline constexpr std::uint64_t kLemmaTruncation = 8;
inline constexpr int kProbeCount = 3;

/// Probe points: uniform on [0, 10]^d from the analysis seed's probe stream.
std::vector<Eigen::VectorXd> probe_points(int d, std::uint64_t analysis_seed);

/// MSE bound for n in {1, 4, 16, 64}, the estimator identity at M = 8 and the
/// variance bound at M = 8, at three probe points, mc_trials each. Needs
/// mc_trials >= 10^4.
LemmaReport verify_lemmas(const ExperimentConfig& config);

/// Same checks with precomputed constants (lets callers reuse an analysis).
LemmaReport verify_lemmas(const ChainConfig& chain, const ProblemConstants& constants,
                          int trials, std::uint64_t analysis_seed);

std::string report_to_text(const LemmaReport& report);
LemmaReport parse_report_text(std::string_view text);

}  // namespace magd
