#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>

#include <Eigen/Dense>

#include "magd/chain.hpp"
#include "magd/errors.hpp"
#include "magd/estimator.hpp"
#include "magd/problem.hpp"
#include "magd/random.hpp"
#include "magd/trace.hpp"

namespace magd {

/// Step size and momentum bundle of accelerated MAGD:
///   beta = sqrt(4 mu gamma / 9), eta = sqrt(9 / (mu gamma)),
///   theta = (1 - eta) / (beta - eta), M = ceil(1 + 2 / beta).
struct AgdParams {
  double mu = 0.0;
  double gamma = 0.0;
  double beta = 0.0;
  double eta = 0.0;
  double theta = 0.0;
  std::uint64_t M = 1;
  std::int64_t N = 0;
  double C1 = c1_constant();

  /// 1 - theta = (1 - beta) / (eta - beta), without the cancellation of 1 - theta.
  double one_minus_theta() const { return (1.0 - beta) / (eta - beta); }
  void validate() const;
};

/// Fills beta, eta, theta and M for a given step. Throws InvalidArgument when
/// beta > 1 (equivalently eta < 2), where theta leaves (0, 1).
AgdParams make_params(double mu, double gamma, std::int64_t iterations);

/// ceil(v) tolerant to the last-bit error of 1 + 2/beta.
std::uint64_t truncation_from_beta(double beta);

enum class GammaSource { kOverride, kSmoothness, kMarkovNoise, kHorizon };

std::string_view to_string(GammaSource s);

struct DeriveOptions {
  std::int64_t iterations = 1000;
  std::optional<double> gamma_override;
  /// Multiplies the derived step (not an override).
  double gamma_scale = 1.0;
  /// ||x0 - x*||^2 + (18/mu)(f(x0) - f(x*)); enables the horizon candidate.
  std::optional<double> initial_lyapunov;
};

struct DerivedParams {
  AgdParams params;
  GammaSource binding = GammaSource::kSmoothness;
  double gamma_smoothness = 0.0;
  double gamma_noise = std::numeric_limits<double>::infinity();
  double gamma_horizon = std::numeric_limits<double>::infinity();
  int fixed_point_iterations = 0;
};

/// Step selection: gamma = min of 9/(16L), the Markov-noise constraint
/// sqrt(gamma) <= mu^{3/2} / (1872 C1 tau delta^2 log2 M(gamma)) solved by
/// fixed-point iteration, and the horizon term ln^2(arg)/(mu N^2) when its
/// logarithm is positive; then scaled by gamma_scale.
DerivedParams derive_params_detailed(const ProblemConstants& constants,
                                     const DeriveOptions& options);

AgdParams derive_params(const ProblemConstants& constants, std::int64_t iterations,
                        std::optional<double> gamma_override = std::nullopt);

struct IterateState {
  Eigen::VectorXd x;
  Eigen::VectorXd x_f;
  Eigen::VectorXd x_g;
  std::uint64_t T = 0;
  std::int64_t k = 0;
  std::uint64_t last_samples = 0;
};

/// x = x_f = x_g = x0, T = 0.
IterateState initial_iterate(const Eigen::VectorXd& x0);

void check_finite(const IterateState& state);

/// One MAGD iteration with a given batch draw:
///   x_g = theta x_f + (1 - theta) x
///   g   = randomized-batch estimate at x_g
///   x_f' = x_g - gamma g
///   x'  = eta x_f' + (1 - eta) x_f
/// The last line is evaluated as x_f + eta (1 - theta)(x - x_f) - eta gamma g,
/// which is the same affine map but keeps its rounding independent of eta.
template <MarkovChain Chain, typename Oracle>
IterateState magd_step(const IterateState& s, const AgdParams& params, Chain& chain,
                       const Oracle& oracle, const BatchDraw& draw) {
  IterateState next;
  const double lag = params.one_minus_theta();
  const Eigen::VectorXd delta = s.x - s.x_f;
  next.x_g = s.x_f + lag * delta;
  const GradientEstimate est = estimate(next.x_g, chain, oracle, draw);
  next.x_f = next.x_g - params.gamma * est.g;
  next.x = s.x_f + (params.eta * lag) * delta - (params.eta * params.gamma) * est.g;
  next.T = s.T + draw.samples_used;
  next.k = s.k + 1;
  next.last_samples = draw.samples_used;
  check_finite(next);
  return next;
}

template <MarkovChain Chain, typename Oracle>
IterateState magd_step(const IterateState& s, const AgdParams& params, Chain& chain,
                       const Oracle& oracle, Rng& batch_rng) {
  return magd_step(s, params, chain, oracle, sample_exponent(batch_rng, params.M));
}

struct StopRule {
  std::int64_t max_iters = 1000;
  /// Stop once dist_sq <= floor; a negative floor disables the check.
  double dist_sq_floor = 1e-12;
  /// Stop once cumulative oracle calls reach this budget; 0 disables.
  std::uint64_t max_oracle_calls = 0;
};

struct IterateView {
  std::int64_t k;
  const Eigen::VectorXd& x;
  const Eigen::VectorXd& x_f;
  const Eigen::VectorXd& x_g;
};

using IterateObserver = std::function<void(const IterateView&)>;

/// Runs MAGD from x0 = x_f0 = problem.x0(). A non-finite iterate or record ends the run
/// with Termination::kNonFinite and the records so far.
Trace run_magd(const ConsensusProblem& problem, const AgdParams& params, EdgeFlipChain& chain,
               Rng& batch_rng, const StopRule& stop, const IterateObserver& observer = {});

/// Gossip descent x' = (I - gamma W_k) x with one chain step per iteration.
Trace run_gossip(const ConsensusProblem& problem, double gamma, double mu, EdgeFlipChain& chain,
                 const StopRule& stop, const IterateObserver& observer = {});

/// Plain Markov SGD x' = x - gamma grad F(x, Z_k) with one chain step per iteration.
Trace run_markov_sgd(const ConsensusProblem& problem, double gamma, double mu,
                     EdgeFlipChain& chain, const StopRule& stop,
                     const IterateObserver& observer = {});

/// ||x - x*||^2 + (18/mu)(f(x_f) - f(x*)).
double lyapunov(double dist_sq, double f_gap, double mu);

/// Least-squares slope of -log(lyapunov) against iteration over [from, to].
double fit_log_contraction(const Trace& trace, std::int64_t from, std::int64_t to);

}  // namespace magd
