#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <optional>
#include <type_traits>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "magd/chain.hpp"
#include "magd/problem.hpp"
#include "magd/random.hpp"

namespace magd {

/// C1 = 16 (1 + 1 / ln^2 4), the constant of the arbitrary-start MSE bound.
inline double c1_constant() {
  const double ln4 = std::log(4.0);
  return 16.0 * (1.0 + 1.0 / (ln4 * ln4));
}

struct BatchDraw {
  int exponent = 1;
  bool truncated = false;
  std::uint64_t samples_used = 2;
};

/// floor(log2 M) + 1; the smallest exponent whose window exceeds M.
inline int exponent_cap(std::uint64_t truncation) { return std::bit_width(truncation); }

/// Builds the draw for a given exponent, clamped at `cap` (default
/// exponent_cap(M)). Throws for M < 1, exponent < 1 or exponent > 63.
BatchDraw make_draw(int exponent, std::uint64_t truncation, int cap = 0);

/// J ~ Geom(1/2) on {1, 2, ...}, clamped at floor(log2 M) + 1. Clamping only
/// removes draws whose correction is already zero.
BatchDraw sample_exponent(Rng& rng, std::uint64_t truncation);

/// Expected chain samples per call: J_cap + 1.
double expected_samples(std::uint64_t truncation);

struct EstimatorLevels {
  Eigen::VectorXd g0;
  Eigen::VectorXd g_prev;  // average of the first 2^(J-1) samples
  Eigen::VectorXd g_full;  // average of all 2^J samples
  Eigen::VectorXd g_second_half;
};

struct GradientEstimate {
  Eigen::VectorXd g;
  BatchDraw draw;
  std::optional<EstimatorLevels> levels;
};

namespace detail {

/// Streaming pairwise sum. For a power-of-two count the result is the
/// balanced binary tree sum, and the left subtree over the first half is
/// captured when it completes.
class PairwiseAccumulator {
 public:
  explicit PairwiseAccumulator(int capture_level) : capture_level_(capture_level) {}

  void add(Eigen::VectorXd v) {
    stack_.emplace_back(0, std::move(v));
    maybe_capture();
    while (stack_.size() >= 2 && stack_.back().first == stack_[stack_.size() - 2].first) {
      auto top = std::move(stack_.back());
      stack_.pop_back();
      stack_.back().second += top.second;
      ++stack_.back().first;
      maybe_capture();
    }
  }

  /// Valid after exactly 2^k additions.
  const Eigen::VectorXd& total() const { return stack_.front().second; }
  const Eigen::VectorXd& captured() const { return captured_; }

 private:
  void maybe_capture() {
    if (!has_capture_ && stack_.size() == 1 && stack_.front().first == capture_level_) {
      captured_ = stack_.front().second;
      has_capture_ = true;
    }
  }

  int capture_level_;
  bool has_capture_ = false;
  std::vector<std::pair<int, Eigen::VectorXd>> stack_;
  Eigen::VectorXd captured_;
};

}  // namespace detail

/// Randomized-batch estimate from one nested window of samples_used chain
/// steps: g = g_0 + 2^J (g_J - g_{J-1}), or g_0 alone when truncated. The
/// chain is advanced before every evaluation, so g_0 uses Z_{T+1}.
template <MarkovChain Chain, typename Oracle>
GradientEstimate estimate_by_samples(const Eigen::VectorXd& x_g, Chain& chain,
                                     const Oracle& oracle, const BatchDraw& draw,
                                     bool keep_levels = false) {
  GradientEstimate out;
  out.draw = draw;
  chain.advance();
  Eigen::VectorXd g0 = oracle(x_g, chain.state());
  if (draw.truncated) {
    for (std::uint64_t i = 1; i < draw.samples_used; ++i) chain.advance();
    if (keep_levels) out.levels = EstimatorLevels{g0, g0, g0, g0};
    out.g = std::move(g0);
    return out;
  }
  detail::PairwiseAccumulator sum(draw.exponent - 1);
  sum.add(g0);
  for (std::uint64_t i = 1; i < draw.samples_used; ++i) {
    chain.advance();
    sum.add(oracle(x_g, chain.state()));
  }
  const Eigen::VectorXd& left = sum.captured();
  const Eigen::VectorXd& total = sum.total();
  // 2^J (g_J - g_{J-1}) = total - 2 * left exactly (power-of-two scaling).
  out.g = g0 + (total - 2.0 * left);
  if (keep_levels) {
    const double n = static_cast<double>(draw.samples_used);
    out.levels = EstimatorLevels{g0, left / (0.5 * n), total / n, (total - left) / (0.5 * n)};
  }
  return out;
}

/// Same estimator for the Laplacian oracle on the edge-flip chain, computed
/// from integer per-edge occupancy counts over the window. The correction
/// sum_e (n_e - 2 n_e^left) L_e x_g has exact integer weights and costs
/// O(window + toggled edges) rather than one mat-vec per sample.
GradientEstimate estimate_by_occupancy(const Eigen::VectorXd& x_g, EdgeFlipChain& chain,
                                       const BatchDraw& draw, bool keep_levels = false);

template <MarkovChain Chain, typename Oracle>
GradientEstimate estimate(const Eigen::VectorXd& x_g, Chain& chain, const Oracle& oracle,
                          const BatchDraw& draw, bool keep_levels = false) {
  if constexpr (std::is_same_v<Chain, EdgeFlipChain> &&
                std::is_same_v<std::remove_cvref_t<Oracle>, LaplacianOracle>) {
    return estimate_by_occupancy(x_g, chain, draw, keep_levels);
  } else {
    return estimate_by_samples(x_g, chain, oracle, draw, keep_levels);
  }
}

struct MseCheck {
  double empirical_mse = 0.0;
  double bound = 0.0;
};

/// Mean of ||(1/n) sum_i W_{Z_i} x - E[W] x||^2 over stationary starts against
/// (8 tau / n)(sigma^2 + delta^2 ||x - x*||^2).
MseCheck verify_mse_bound(const ChainConfig& config, const Eigen::VectorXd& x,
                          const Eigen::VectorXd& x_star, const ProblemConstants& constants,
                          int n, int trials, Rng& rng);

struct IdentityCheck {
  Eigen::VectorXd mean_estimate;
  Eigen::VectorXd mean_reference;
  double difference_norm = 0.0;
  double combined_standard_error = 0.0;
};

/// Mean of the randomized estimator against the mean of plain
/// 2^floor(log2 M)-sample averages, both from independent stationary starts.
IdentityCheck verify_estimator_identity(const ChainConfig& config, const Eigen::VectorXd& x_g,
                                        std::uint64_t truncation, int trials, Rng& rng);

struct VarianceCheck {
  double empirical = 0.0;
  double bound = 0.0;
};

/// E||grad f(x_g) - g||^2 against 13 C1 tau log2(M) (sigma^2 + delta^2 ||x_g - x*||^2).
VarianceCheck verify_variance_bound(const ChainConfig& config, const Eigen::VectorXd& x_g,
                                    const Eigen::VectorXd& x_star,
                                    const ProblemConstants& constants, std::uint64_t truncation,
                                    int trials, Rng& rng);

}  // namespace magd
