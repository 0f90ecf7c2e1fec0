#include "magd/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace magd {

void AgdParams::validate() const {
  if (!(mu > 0.0)) throw InvalidArgument("params: mu must be positive");
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw InvalidArgument("params: gamma must be > 0");
  if (!(beta > 0.0 && beta <= 1.0)) throw InvalidArgument("params: beta must lie in (0, 1]");
  if (!(eta >= 1.0)) throw InvalidArgument("params: eta must be >= 1");
  if (M < 1) throw InvalidArgument("params: M must be >= 1");
}

std::uint64_t truncation_from_beta(double beta) {
  const double v = 1.0 + 2.0 / beta;
  if (!(v < 0x1.0p62)) throw DegenerateProblem("params: truncation M overflows");
  return static_cast<std::uint64_t>(std::ceil(v * (1.0 - 1e-12)));
}

AgdParams make_params(double mu, double gamma, std::int64_t iterations) {
  if (!(mu > 0.0)) throw InvalidArgument("params: mu must be positive");
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw InvalidArgument("params: gamma must be > 0");
  AgdParams p;
  p.mu = mu;
  p.gamma = gamma;
  p.N = iterations;
  p.beta = std::sqrt(4.0 * mu * gamma / 9.0);
  p.eta = std::sqrt(9.0 / (mu * gamma));
  if (p.eta < 1.0) {
    throw InvalidArgument("params: gamma " + format_real(gamma) + " gives eta < 1");
  }
  if (p.beta > 1.0) {
    throw InvalidArgument("params: gamma " + format_real(gamma) +
                          " gives beta > 1 (need gamma <= 9/(4 mu))");
  }
  p.theta = (1.0 - p.eta) / (p.beta - p.eta);
  p.M = truncation_from_beta(p.beta);
  return p;
}

std::string_view to_string(GammaSource s) {
  switch (s) {
    case GammaSource::kOverride: return "override";
    case GammaSource::kSmoothness: return "smoothness";
    case GammaSource::kMarkovNoise: return "markov_noise";
    case GammaSource::kHorizon: return "horizon";
  }
  return "smoothness";
}

namespace {

/// Largest sqrt(gamma) allowed by the Markov-noise condition at gamma.
double noise_candidate(const ProblemConstants& c, double gamma, double c1) {
  const double beta = std::sqrt(4.0 * c.mu * gamma / 9.0);
  const double log_m = std::log2(static_cast<double>(truncation_from_beta(std::min(beta, 1.0))));
  const double root = std::pow(c.mu, 1.5) /
                      (1872.0 * c1 * static_cast<double>(c.tau) * c.delta * c.delta * log_m);
  return root * root;
}

}  // namespace

DerivedParams derive_params_detailed(const ProblemConstants& constants,
                                     const DeriveOptions& options) {
  constants.validate();
  if (!(options.gamma_scale > 0.0)) throw InvalidArgument("params: gamma_scale must be > 0");
  DerivedParams out;
  const double c1 = c1_constant();
  out.gamma_smoothness = 9.0 / (16.0 * constants.L_smooth);

  if (options.initial_lyapunov && constants.sigma > 0.0 && options.iterations > 0) {
    const double n = static_cast<double>(options.iterations);
    const double arg = constants.mu * constants.mu * n * *options.initial_lyapunov /
                       (static_cast<double>(constants.tau) * constants.sigma * constants.sigma);
    const double lg = std::log(arg);
    if (lg > 0.0 && std::isfinite(lg)) out.gamma_horizon = lg * lg / (constants.mu * n * n);
  }

  double gamma = std::min(out.gamma_smoothness, out.gamma_horizon);
  out.binding = gamma == out.gamma_smoothness ? GammaSource::kSmoothness : GammaSource::kHorizon;

  if (constants.delta > 0.0) {
    // The condition couples gamma and log2 M(gamma); the map gamma -> bound is
    // non-decreasing, so plain iteration converges monotonically.
    double g = gamma;
    for (int it = 0; it < 20; ++it) {
      const double next = noise_candidate(constants, g, c1);
      ++out.fixed_point_iterations;
      const bool done = std::abs(next - g) <= 1e-10 * g;
      g = next;
      if (done) break;
    }
    out.gamma_noise = g;
    if (g < gamma) {
      gamma = g;
      out.binding = GammaSource::kMarkovNoise;
    }
  }

  gamma *= options.gamma_scale;
  if (options.gamma_override) {
    gamma = *options.gamma_override;
    out.binding = GammaSource::kOverride;
  }
  if (!(gamma >= 1e-300)) throw DegenerateProblem("params: derived gamma underflows");
  out.params = make_params(constants.mu, gamma, options.iterations);
  return out;
}

AgdParams derive_params(const ProblemConstants& constants, std::int64_t iterations,
                        std::optional<double> gamma_override) {
  DeriveOptions opt;
  opt.iterations = iterations;
  opt.gamma_override = gamma_override;
  return derive_params_detailed(constants, opt).params;
}

IterateState initial_iterate(const Eigen::VectorXd& x0) {
  IterateState s;
  s.x = x0;
  s.x_f = x0;
  s.x_g = x0;
  return s;
}

void check_finite(const IterateState& state) {
  if (!state.x.allFinite() || !state.x_f.allFinite() || !state.x_g.allFinite()) {
    throw NonFiniteIterate("non-finite iterate at k = " + std::to_string(state.k));
  }
}

double lyapunov(double dist_sq, double f_gap, double mu) { return dist_sq + 18.0 / mu * f_gap; }

namespace {

TraceRecord make_record(const ConsensusProblem& problem, double mu, std::int64_t k,
                        std::uint64_t T, const Eigen::VectorXd& x, const Eigen::VectorXd& x_f,
                        std::uint64_t samples) {
  TraceRecord r;
  r.iter = k;
  r.oracle_calls = T;
  r.dist_sq = problem.dist_sq(x);
  r.f_gap = problem.objective_gap(x_f);
  r.lyapunov = lyapunov(r.dist_sq, r.f_gap, mu);
  r.samples_used = samples;
  return r;
}

bool finite_record(const TraceRecord& r) {
  return std::isfinite(r.dist_sq) && std::isfinite(r.f_gap) && std::isfinite(r.lyapunov);
}

bool should_stop(const StopRule& stop, const TraceRecord& r, Trace& trace) {
  if (stop.dist_sq_floor >= 0.0 && r.dist_sq <= stop.dist_sq_floor) {
    trace.termination = Termination::kReachedFloor;
    return true;
  }
  if (stop.max_oracle_calls > 0 && r.oracle_calls >= stop.max_oracle_calls) {
    trace.termination = Termination::kOracleBudget;
    return true;
  }
  if (r.iter >= stop.max_iters) {
    trace.termination = Termination::kMaxIters;
    return true;
  }
  return false;
}

/// Shared loop of the one-sample-per-iteration baselines.
template <typename Update>
Trace run_single_sample(const ConsensusProblem& problem, double mu, std::string method,
                        EdgeFlipChain& chain, const StopRule& stop,
                        const IterateObserver& observer, Update&& update) {
  Trace trace;
  trace.method = std::move(method);
  Eigen::VectorXd x = problem.x0();
  Eigen::VectorXd grad(x.size());
  std::uint64_t T = 0;
  trace.records.push_back(make_record(problem, mu, 0, 0, x, x, 0));
  if (observer) observer({0, x, x, x});
  if (should_stop(stop, trace.records.back(), trace)) return trace;
  for (std::int64_t k = 1;; ++k) {
    chain.advance();
    update(x, chain.state(), grad);
    ++T;
    const TraceRecord r = make_record(problem, mu, k, T, x, x, 1);
    if (!x.allFinite() || !finite_record(r)) {
      trace.termination = Termination::kNonFinite;
      return trace;
    }
    trace.records.push_back(r);
    if (observer) observer({k, x, x, x});
    if (should_stop(stop, trace.records.back(), trace)) return trace;
  }
}

}  // namespace

Trace run_magd(const ConsensusProblem& problem, const AgdParams& params, EdgeFlipChain& chain,
               Rng& batch_rng, const StopRule& stop, const IterateObserver& observer) {
  params.validate();
  Trace trace;
  trace.method = "magd";
  const LaplacianOracle oracle;
  IterateState s = initial_iterate(problem.x0());
  trace.records.push_back(make_record(problem, params.mu, 0, 0, s.x, s.x_f, 0));
  if (observer) observer({0, s.x, s.x_f, s.x_g});
  if (should_stop(stop, trace.records.back(), trace)) return trace;
  while (true) {
    try {
      s = magd_step(s, params, chain, oracle, batch_rng);
    } catch (const NonFiniteIterate&) {
      trace.termination = Termination::kNonFinite;
      return trace;
    }
    const TraceRecord r = make_record(problem, params.mu, s.k, s.T, s.x, s.x_f, s.last_samples);
    if (!finite_record(r)) {
      trace.termination = Termination::kNonFinite;
      return trace;
    }
    trace.records.push_back(r);
    if (observer) observer({s.k, s.x, s.x_f, s.x_g});
    if (should_stop(stop, trace.records.back(), trace)) return trace;
  }
}

Trace run_gossip(const ConsensusProblem& problem, double gamma, double mu, EdgeFlipChain& chain,
                 const StopRule& stop, const IterateObserver& observer) {
  if (!(gamma > 0.0)) throw InvalidArgument("gossip: step must be positive");
  const LaplacianOracle oracle;
  return run_single_sample(problem, mu, "gossip", chain, stop, observer,
                           [&](Eigen::VectorXd& x, const GraphState& z, Eigen::VectorXd& wx) {
                             oracle.apply(x, z, wx);
                             x -= gamma * wx;
                           });
}

Trace run_markov_sgd(const ConsensusProblem& problem, double gamma, double mu,
                     EdgeFlipChain& chain, const StopRule& stop,
                     const IterateObserver& observer) {
  if (!(gamma > 0.0)) throw InvalidArgument("sgd: step must be positive");
  const LaplacianOracle oracle;
  return run_single_sample(problem, mu, "sgd", chain, stop, observer,
                           [&](Eigen::VectorXd& x, const GraphState& z, Eigen::VectorXd& g) {
                             g = oracle(x, z);
                             x -= gamma * g;
                           });
}

double fit_log_contraction(const Trace& trace, std::int64_t from, std::int64_t to) {
  double sk = 0, sy = 0, skk = 0, sky = 0;
  int n = 0;
  for (const TraceRecord& r : trace.records) {
    if (r.iter < from || r.iter > to || !(r.lyapunov > 0.0)) continue;
    const double k = static_cast<double>(r.iter);
    const double y = std::log(r.lyapunov);
    sk += k;
    sy += y;
    skk += k * k;
    sky += k * y;
    ++n;
  }
  if (n < 2) throw InvalidArgument("fit: fewer than two records in range");
  const double slope = (n * sky - sk * sy) / (n * skk - sk * sk);
  return -slope;
}

}  // namespace magd
