#include <algorithm>
#include <cmath>

#include <gtest/gtest.h>

#include "magd/harness.hpp"
#include "magd/optimizer.hpp"

namespace {

using namespace magd;

struct CountingChain {
  using State = std::int64_t;
  std::int64_t k = 0;
  const std::int64_t& state() const { return k; }
  void advance() { ++k; }
};

struct ZeroOracle {
  Eigen::VectorXd operator()(const Eigen::VectorXd& x, const std::int64_t&) const {
    return Eigen::VectorXd::Zero(x.size());
  }
};

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd x(static_cast<Eigen::Index>(v.size()));
  std::copy(v.begin(), v.end(), x.data());
  return x;
}

ChainConfig complete_config(int d) {
  std::vector<EdgeId> all;
  for (int i = 0; i < d; ++i) {
    for (int j = i + 1; j < d; ++j) all.push_back({i, j});
  }
  return {d, all, 0.5};
}

EdgeFlipChain chain_for(const ConsensusProblem& p, std::uint64_t seed) {
  return EdgeFlipChain(GraphState::base_only(p.universe()), 0.5, Rng(seed));
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

TEST(Params, HandExample) {
  const AgdParams p = make_params(1.0, 0.01, 100);
  EXPECT_NEAR(p.beta, 0.066667, 1e-6);
  EXPECT_NEAR(p.eta, 30.0, 1e-12);
  EXPECT_EQ(p.M, 31u);
  const double beta = std::sqrt(4.0 * 0.01 / 9.0);
  EXPECT_NEAR(p.theta, (1.0 - 30.0) / (beta - 30.0), 1e-15);
  EXPECT_NEAR(p.theta, 29.0 / (30.0 - 1.0 / 15.0), 1e-15);
  EXPECT_GT(p.theta, 0.0);
  EXPECT_LT(p.theta, 1.0);
  EXPECT_NEAR(p.one_minus_theta(), 1.0 - p.theta, 1e-15);
}

TEST(Params, SmoothnessCandidateWhenNoiseInactive) {
  const ProblemConstants c{1.0, 3.0, 0.0, 0.0, 17};
  const DerivedParams d = derive_params_detailed(c, {});
  EXPECT_DOUBLE_EQ(d.params.gamma, 9.0 / 48.0);
  EXPECT_DOUBLE_EQ(d.params.gamma, 0.1875);
  EXPECT_EQ(d.binding, GammaSource::kSmoothness);
  EXPECT_TRUE(std::isinf(d.gamma_noise));
  EXPECT_DOUBLE_EQ(derive_params(c, 10).gamma, 0.1875);
}

TEST(Params, NoiseFixedPointSatisfiesItsEquation) {
  const ProblemConstants c{5.0, 7.0, 4.8, 0.0, 62};
  const DerivedParams d = derive_params_detailed(c, {});
  ASSERT_EQ(d.binding, GammaSource::kMarkovNoise);
  const double gamma = d.params.gamma;
  const double beta = std::sqrt(4 * c.mu * gamma / 9);
  const double m = std::ceil(1 + 2 / beta);
  const double rhs =
      std::pow(c.mu, 1.5) / (1872 * c1_constant() * c.tau * c.delta * c.delta * std::log2(m));
  EXPECT_NEAR(std::sqrt(gamma), rhs, 1e-9 * rhs);
  EXPECT_LE(d.fixed_point_iterations, 20);
}

TEST(Params, HorizonCandidate) {
  const ProblemConstants c{1.0, 1.0, 0.0, 1.0, 1};
  DeriveOptions opt;
  opt.iterations = 1000000;
  opt.initial_lyapunov = 1.0;
  const DerivedParams d = derive_params_detailed(c, opt);
  const double lg = std::log(1e6);
  EXPECT_NEAR(d.params.gamma, lg * lg / 1e12, 1e-24);
  EXPECT_EQ(d.binding, GammaSource::kHorizon);
  opt.iterations = 1;  // argument 1: logarithm zero, candidate skipped
  EXPECT_EQ(derive_params_detailed(c, opt).binding, GammaSource::kSmoothness);
}

TEST(Params, OverrideScaleAndRejection) {
  const ProblemConstants c{1.0, 3.0, 0.0, 0.0, 1};
  DeriveOptions opt;
  opt.gamma_scale = 0.5;
  EXPECT_DOUBLE_EQ(derive_params_detailed(c, opt).params.gamma, 0.09375);
  opt.gamma_override = 0.02;
  EXPECT_DOUBLE_EQ(derive_params_detailed(c, opt).params.gamma, 0.02);
  EXPECT_THROW(make_params(1.0, 10.0, 1), InvalidArgument);  // eta < 1
  EXPECT_THROW(make_params(1.0, 3.0, 1), InvalidArgument);   // beta > 1
  EXPECT_NO_THROW(make_params(1.0, 2.25, 1));                // beta = 1, theta = 1
  EXPECT_THROW(make_params(0.0, 0.1, 1), InvalidArgument);
  const ProblemConstants huge{1.0, 1.0, 1e200, 0.0, 1};
  EXPECT_THROW(derive_params(huge, 10), DegenerateProblem);
}

TEST(Params, IdentitiesOverRandomBundles) {
  Rng rng(2718);
  for (int t = 0; t < 1000; ++t) {
    ProblemConstants c;
    c.mu = std::exp(rng.uniform(std::log(0.01), std::log(100.0)));
    c.L_smooth = c.mu * std::exp(rng.uniform(0.0, std::log(100.0)));
    c.delta = rng.bernoulli(0.2) ? 0.0 : std::exp(rng.uniform(std::log(0.01), std::log(10.0)));
    c.tau = 1 + static_cast<std::int64_t>(rng.index(1000));
    const AgdParams p = derive_params(c, 1000);
    EXPECT_NEAR(p.beta * p.eta, 2.0, 2e-12);
    EXPECT_NEAR(p.eta * p.gamma, 9 * p.beta / (2 * p.mu), 1e-12 * p.eta * p.gamma);
    const double v = 1 + 2 / p.beta;
    EXPECT_LE(static_cast<double>(p.M) - 1.0, v * (1 + 1e-12));
    EXPECT_GE(static_cast<double>(p.M), v * (1 - 1e-12));
    EXPECT_GT(p.theta, 0.0);
    EXPECT_LE(p.theta, 1.0);
  }
}

TEST(MagdStep, ZeroGradientFixedPoint) {
  const AgdParams p = make_params(2.0, 9.0 / 8.0, 1);  // beta = 1, theta = 1
  EXPECT_DOUBLE_EQ(p.theta, 1.0);
  IterateState s;
  s.x = vec({1, 5, -2});
  s.x_f = vec({0.5, 0.25, 4});
  CountingChain chain;
  const IterateState n = magd_step(s, p, chain, ZeroOracle{}, make_draw(2, p.M));
  EXPECT_EQ(n.x_g, s.x_f);
  EXPECT_EQ(n.x_f, s.x_f);
  EXPECT_EQ(n.x, s.x_f);
  EXPECT_EQ(n.T, 4u);
  EXPECT_EQ(n.k, 1);
}

TEST(MagdStep, HandStepOnTriangle) {
  const ChainConfig cfg{3, {{0, 1}, {0, 2}, {1, 2}}, 0.5};
  const ConsensusProblem problem(cfg, vec({1, 2, 3}));
  const AgdParams p = make_params(3.0, 0.01, 1);
  EdgeFlipChain chain = chain_for(problem, 1);
  const IterateState s0 = initial_iterate(problem.x0());
  const BatchDraw draw = make_draw(1, p.M);
  ASSERT_FALSE(draw.truncated);
  const IterateState s1 = magd_step(s0, p, chain, LaplacianOracle{}, draw);
  const double eta = std::sqrt(9.0 / (3.0 * 0.01));
  EXPECT_NEAR(eta, 17.3205080757, 1e-9);
  EXPECT_EQ(s1.x_g, s0.x);
  EXPECT_LE((s1.x_f - vec({1.03, 2.0, 2.97})).norm(), 1e-14);
  const Eigen::VectorXd expected = eta * vec({1.03, 2.0, 2.97}) + (1 - eta) * vec({1, 2, 3});
  EXPECT_LE((s1.x - expected).norm(), 1e-13);
  EXPECT_LE((s1.x - vec({1 + 0.03 * eta, 2, 3 - 0.03 * eta})).norm(), 1e-13);
  EXPECT_EQ(s1.T, 2u);
}

TEST(MagdStep, StableFormMatchesLiteralLine) {
  // x+ = eta x_f+ + (1 - eta) x_f in exact arithmetic; compare in long double.
  const ChainConfig cfg = chain_config_for(make_cycle(6));
  Rng rng(4);
  Eigen::VectorXd x0(6);
  for (int i = 0; i < 6; ++i) x0(i) = rng.uniform(0, 10);
  const ConsensusProblem problem(cfg, x0);
  const AgdParams p = make_params(3.0, 0.05, 1);
  EdgeFlipChain chain = chain_for(problem, 3);
  IterateState s = initial_iterate(x0);
  Rng batch(5);
  for (int k = 0; k < 20; ++k) {
    const IterateState prev = s;
    EdgeFlipChain probe = chain;
    const BatchDraw draw = sample_exponent(batch, p.M);
    s = magd_step(prev, p, chain, LaplacianOracle{}, draw);
    const Eigen::VectorXd g = estimate(s.x_g, probe, LaplacianOracle{}, draw).g;
    for (int i = 0; i < 6; ++i) {
      const long double xf_new = static_cast<long double>(s.x_g(i)) - p.gamma * static_cast<long double>(g(i));
      const long double literal = p.eta * xf_new + (1.0L - p.eta) * prev.x_f(i);
      EXPECT_NEAR(static_cast<double>(literal), s.x(i), 1e-11 * (1 + std::abs(s.x(i))));
    }
  }
}

TEST(RunMagd, OptimumStaysPut) {
  const ChainConfig cfg = chain_config_for(make_cycle(10));
  const ConsensusProblem problem(cfg, Eigen::VectorXd::Constant(10, 4.5));
  const AgdParams p = make_params(5.0, 0.05, 200);
  EdgeFlipChain chain = chain_for(problem, 2);
  Rng batch(3);
  StopRule stop;
  stop.max_iters = 200;
  stop.dist_sq_floor = -1;
  const Trace t = run_magd(problem, p, chain, batch, stop);
  EXPECT_EQ(t.records.size(), 201u);
  for (const TraceRecord& r : t.records) EXPECT_LE(r.dist_sq, 1e-20);
}

TEST(RunMagd, OracleAccountingAndSumConservation) {
  const ChainConfig cfg = chain_config_for(make_cycle(10));
  Rng init(1);
  const ConsensusProblem problem(cfg, default_initial_point(10, init));
  const double sum0 = problem.x0().sum();
  for (double gamma : {1e-6, 0.01, 9.0 / (16 * 7.0)}) {
    const AgdParams p = make_params(5.190983005625053, gamma, 300);
    EdgeFlipChain chain = chain_for(problem, 4);
    Rng batch(5);
    StopRule stop;
    stop.max_iters = 300;
    stop.dist_sq_floor = -1;
    double drift = 0.0;
    const Trace t = run_magd(problem, p, chain, batch, stop, [&](const IterateView& v) {
      for (const Eigen::VectorXd* q : {&v.x, &v.x_f, &v.x_g}) {
        drift = std::max(drift, std::abs(q->sum() - sum0));
      }
    });
    EXPECT_LE(drift, 1e-10 * (1 + std::abs(sum0))) << "gamma=" << gamma;
    std::uint64_t total = 0;
    for (std::size_t k = 0; k < t.records.size(); ++k) {
      EXPECT_EQ(t.records[k].iter, static_cast<std::int64_t>(k));
      total += t.records[k].samples_used;
      EXPECT_EQ(t.records[k].oracle_calls, total);
    }
    EXPECT_EQ(chain.steps(), total);
  }
}

TEST(RunMagd, DeterministicGivenSeeds) {
  const ChainConfig cfg = chain_config_for(make_star(8));
  Rng init(9);
  const ConsensusProblem problem(cfg, default_initial_point(8, init));
  const AgdParams p = make_params(4.0, 0.02, 100);
  StopRule stop;
  stop.max_iters = 100;
  auto run = [&] {
    EdgeFlipChain chain = chain_for(problem, 7);
    Rng batch(8);
    return run_magd(problem, p, chain, batch, stop).records;
  };
  EXPECT_EQ(run(), run());
}

TEST(RunMagd, MovingAverageNonIncreasingWithoutNoise) {
  const ChainConfig cfg = complete_config(6);
  Rng init(3);
  const ConsensusProblem problem(cfg, default_initial_point(6, init));
  const SpectralConstants sc = spectral_constants(problem.mean_laplacian());
  const AgdParams p = derive_params({sc.mu, sc.L_smooth, 0.0, 0.0, 1}, 400);
  EdgeFlipChain chain = chain_for(problem, 1);
  Rng batch(2);
  StopRule stop;
  stop.max_iters = 400;
  stop.dist_sq_floor = -1;
  const Trace t = run_magd(problem, p, chain, batch, stop);
  std::vector<double> avg;
  for (std::size_t k = 50; k <= t.records.size(); ++k) {
    double s = 0;
    for (std::size_t i = k - 50; i < k; ++i) s += t.records[i].lyapunov;
    avg.push_back(s / 50);
  }
  for (std::size_t i = 1; i < avg.size(); ++i) EXPECT_LE(avg[i], avg[i - 1]) << i;
  EXPECT_LT(t.records.back().lyapunov, 1e-20 * t.records.front().lyapunov);
}

TEST(RunMagd, CycleTenRateAtIteration500) {
  ExperimentConfig config;
  config.topology = TopologyKind::kCycle;
  config.d = 10;
  config.max_iters = 500;
  const Analysis a = analyze(config);
  const AgdParams p = params_for(config, a.constants).params;
  const double r = std::sqrt(p.mu * p.gamma) / 3;
  std::vector<double> ratios;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const ConsensusProblem problem = make_problem(a.chain, seed);
    StopRule stop;
    stop.max_iters = 500;
    stop.dist_sq_floor = -1;
    const Trace t = run_method(Method::kMagd, problem, p, 0.0, seed, stop);
    ratios.push_back(t.records[500].lyapunov / t.records[0].lyapunov);
  }
  EXPECT_LE(median(ratios), std::exp(-500 * r * 0.8));
}

TEST(RunMagd, NonFiniteEndsRun) {
  const ChainConfig cfg = chain_config_for(make_cycle(10));
  Rng init(1);
  const ConsensusProblem problem(cfg, default_initial_point(10, init));
  EdgeFlipChain chain = chain_for(problem, 1);
  StopRule stop;
  stop.max_iters = 100000;
  const Trace t = run_gossip(problem, 10.0, 5.0, chain, stop);
  EXPECT_EQ(t.termination, Termination::kNonFinite);
  EXPECT_LT(t.records.size(), 100001u);
  for (const TraceRecord& r : t.records) EXPECT_TRUE(std::isfinite(r.dist_sq));
}

TEST(RunGossip, TriangleHandStep) {
  const ChainConfig cfg{3, {{0, 1}, {0, 2}, {1, 2}}, 0.5};
  const ConsensusProblem problem(cfg, vec({1, 2, 3}));
  EdgeFlipChain chain = chain_for(problem, 1);
  StopRule stop;
  stop.max_iters = 1;
  Eigen::VectorXd x1;
  run_gossip(problem, 0.1, 3.0, chain, stop, [&](const IterateView& v) { x1 = v.x; });
  EXPECT_LE((x1 - vec({1.3, 2.0, 2.7})).norm(), 1e-15);
}

TEST(RunGossip, ConstantStartFixed) {
  const ChainConfig cfg = chain_config_for(make_star(6));
  const ConsensusProblem problem(cfg, Eigen::VectorXd::Constant(6, -1.5));
  for (bool sgd : {false, true}) {
    EdgeFlipChain chain = chain_for(problem, 1);
    StopRule stop;
    stop.max_iters = 100;
    stop.dist_sq_floor = -1;
    const Trace t = sgd ? run_markov_sgd(problem, 0.1, 1.0, chain, stop)
                        : run_gossip(problem, 0.1, 1.0, chain, stop);
    for (const TraceRecord& r : t.records) EXPECT_EQ(r.dist_sq, 0.0);
  }
}

TEST(RunGossip, StaticCompleteGraphContraction) {
  // W = d I on the mean-zero subspace, so each step scales x - x* by (1 - gamma d).
  const int d = 6;
  const ChainConfig cfg = complete_config(d);
  Rng init(4);
  const ConsensusProblem problem(cfg, default_initial_point(d, init));
  EdgeFlipChain chain = chain_for(problem, 1);
  const double gamma = 0.05;
  StopRule stop;
  stop.max_iters = 30;
  stop.dist_sq_floor = -1;
  const Trace t = run_gossip(problem, gamma, d, chain, stop);
  const double lo = (1 - gamma * d) * (1 - gamma * d);  // lambda_max = mu = d
  for (std::size_t k = 1; k < t.records.size(); ++k) {
    const double ratio = t.records[k].dist_sq / t.records[k - 1].dist_sq;
    EXPECT_NEAR(ratio, lo, 1e-9);
  }
}

TEST(RunMarkovSgd, EqualsGossipOnSingleState) {
  const ChainConfig cfg{3, {{0, 1}, {0, 2}, {1, 2}}, 0.5};
  const ConsensusProblem problem(cfg, vec({1, 2, 3}));
  StopRule stop;
  stop.max_iters = 50;
  stop.dist_sq_floor = -1;
  EdgeFlipChain a = chain_for(problem, 1), b = chain_for(problem, 1);
  EXPECT_EQ(run_gossip(problem, 0.1, 3, a, stop).records,
            run_markov_sgd(problem, 0.1, 3, b, stop).records);
}

TEST(RunMarkovSgd, CycleTenConverges) {
  const ChainConfig cfg = chain_config_for(make_cycle(10));
  Rng init(5);
  const ConsensusProblem problem(cfg, default_initial_point(10, init));
  const SpectralConstants sc = spectral_constants(problem.mean_laplacian());
  EdgeFlipChain chain = chain_for(problem, 6);
  StopRule stop;
  stop.max_iters = 100000;
  stop.dist_sq_floor = 1e-6;
  const Trace t = run_markov_sgd(problem, 1.0 / sc.L_smooth, sc.mu, chain, stop);
  EXPECT_EQ(t.termination, Termination::kReachedFloor);
  EXPECT_LE(t.records.back().dist_sq, 1e-6);
}

TEST(FitLogContraction, RecoversGeometricRate) {
  Trace t;
  for (int k = 0; k <= 700; ++k) {
    t.records.push_back({k, static_cast<std::uint64_t>(k), 0, 0, 5 * std::exp(-0.013 * k), 1});
  }
  EXPECT_NEAR(fit_log_contraction(t, 100, 600), 0.013, 1e-12);
  EXPECT_THROW(fit_log_contraction(t, 800, 900), InvalidArgument);
}

}  // namespace
