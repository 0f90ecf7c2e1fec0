#include <cmath>
#include <set>

#include <gtest/gtest.h>

#include "magd/chain.hpp"
#include "magd/problem.hpp"

namespace {

using namespace magd;

ChainConfig star_config(int d, double p = 0.5) { return chain_config_for(make_star(d), p); }

ChainConfig triangle_config() { return {3, {{0, 1}, {0, 2}, {1, 2}}, 0.5}; }

// Smallest k with (1 - 1/C)^k <= 1/4, computed by counting.
std::int64_t analytic_tau(int d) {
  const double c = d * (d - 1) / 2.0;
  double tv = 1.0;
  std::int64_t k = 0;
  while (tv > 0.25) {
    tv *= 1.0 - 1.0 / c;
    ++k;
  }
  return k;
}

TEST(EdgeUniverse, PairIdsEnumerateAllPairs) {
  const EdgeUniverse u(5, std::vector<EdgeId>{{0, 1}});
  EXPECT_EQ(u.pair_count(), 10u);
  std::set<std::uint32_t> seen;
  for (int i = 0; i < 5; ++i) {
    for (int j = i + 1; j < 5; ++j) {
      const std::uint32_t id = u.pair_id({i, j});
      EXPECT_EQ(u.edge(id), (EdgeId{i, j}));
      seen.insert(id);
    }
  }
  EXPECT_EQ(seen.size(), 10u);
  EXPECT_EQ(u.non_base_ids().size(), 9u);
  EXPECT_EQ(u.non_base_index(u.pair_id({0, 1})), -1);
}

TEST(GraphState, RejectsExtraOverlappingBase) {
  const auto u = make_universe(star_config(4));
  const std::vector<EdgeId> bad{{0, 1}};
  EXPECT_THROW(GraphState::with_extra(u, bad), InvalidArgument);
  EXPECT_THROW(make_edge(2, 2), InvalidArgument);
  EXPECT_THROW(check_edge({0, 4}, 4), InvalidArgument);
}

TEST(ChainStep, CompleteBaseIsAbsorbing) {
  const auto u = make_universe(triangle_config());
  GraphState s = GraphState::base_only(u);
  Rng rng(5);
  for (int k = 0; k < 1000; ++k) {
    const Transition t = step(s, 0.5, rng);
    EXPECT_FALSE(t.changed);
  }
  EXPECT_EQ(s.extra_count(), 0u);
  EXPECT_EQ(s, GraphState::base_only(u));
}

TEST(ChainStep, ForcedAddOnStar) {
  const auto u = make_universe(star_config(4));
  GraphState s = GraphState::base_only(u);
  const Transition t = apply_proposal(s, true, u->pair_id({1, 2}));
  EXPECT_TRUE(t.changed);
  EXPECT_EQ(s.extra_edges(), (std::vector<EdgeId>{{1, 2}}));
}

TEST(ChainStep, NoOpCases) {
  const auto u = make_universe(star_config(4));
  GraphState s = GraphState::base_only(u);
  // remove of a base pair, remove of an absent pair, add of a base pair
  EXPECT_FALSE(apply_proposal(s, false, u->pair_id({0, 1})).changed);
  EXPECT_FALSE(apply_proposal(s, false, u->pair_id({2, 3})).changed);
  EXPECT_FALSE(apply_proposal(s, true, u->pair_id({0, 2})).changed);
  EXPECT_TRUE(apply_proposal(s, true, u->pair_id({2, 3})).changed);
  EXPECT_FALSE(apply_proposal(s, true, u->pair_id({2, 3})).changed);
  EXPECT_TRUE(apply_proposal(s, false, u->pair_id({2, 3})).changed);
  EXPECT_EQ(s.extra_count(), 0u);
  EXPECT_THROW(apply_proposal(s, true, 6), InvalidArgument);
}

TEST(ChainStep, UsesExactlyTwoDraws) {
  const auto u = make_universe(star_config(6));
  GraphState s = GraphState::base_only(u);
  Rng a(17), b(17);
  for (int k = 0; k < 100; ++k) {
    const Transition t = step(s, 0.5, a);
    const bool add = b.bernoulli(0.5);
    const auto pair = static_cast<std::uint32_t>(b.index(u->pair_count()));
    EXPECT_EQ(t.proposed_add, add);
    EXPECT_EQ(t.pair, pair);
  }
  EXPECT_EQ(a(), b());
}

TEST(ChainStep, PresenceFrequencyOnStar4) {
  const auto u = make_universe(star_config(4));
  EdgeFlipChain chain(GraphState::base_only(u), 0.5, Rng(2024));
  const std::uint32_t id = u->pair_id({1, 2});
  int present = 0;
  const int steps = 100000;
  for (int k = 0; k < steps; ++k) {
    chain.advance();
    present += chain.state().has_extra(id);
  }
  EXPECT_NEAR(present / static_cast<double>(steps), 0.5, 0.02);
}

TEST(ChainStep, BaseEdgesConstantAlongTrajectory) {
  const ChainConfig cfg = chain_config_for(make_cycle(8));
  const auto u = make_universe(cfg);
  EdgeFlipChain chain(GraphState::saturated(u), 0.5, Rng(3));
  for (int k = 0; k < 10000; ++k) {
    chain.advance();
    for (const EdgeId& e : cfg.base_edges) ASSERT_TRUE(chain.state().contains(e));
  }
  EXPECT_EQ(chain.state().base_edges(), cfg.base_edges);
  EXPECT_EQ(chain.steps(), 10000u);
}

TEST(ChainStep, EverySingleEdgeReachableFromEmpty) {
  const auto u = make_universe(star_config(4));
  EdgeFlipChain chain(GraphState::base_only(u), 0.5, Rng(99));
  std::set<std::uint32_t> hit;
  for (int k = 0; k < 1000; ++k) {
    chain.advance();
    for (std::uint32_t id : chain.state().extra_ids()) hit.insert(id);
  }
  EXPECT_EQ(hit.size(), u->non_base_ids().size());
}

TEST(ChainStep, DeterministicGivenSeed) {
  const auto u = make_universe(star_config(7));
  EdgeFlipChain a(GraphState::base_only(u), 0.5, Rng(11));
  EdgeFlipChain b(GraphState::base_only(u), 0.5, Rng(11));
  for (int k = 0; k < 5000; ++k) {
    a.advance();
    b.advance();
    ASSERT_EQ(a.state(), b.state());
  }
  EdgeFlipChain c(GraphState::base_only(u), 0.5, Rng(12));
  for (int k = 0; k < 5000; ++k) c.advance();
  EXPECT_FALSE(a.state() == c.state());
}

TEST(ChainStep, FlipProbabilityValidated) {
  ChainConfig cfg = star_config(4);
  cfg.flip_probability = 0.0;
  EXPECT_THROW(cfg.validate(), InvalidArgument);
  cfg.flip_probability = 1.5;
  EXPECT_THROW(cfg.validate(), InvalidArgument);
  const auto u = make_universe(star_config(4));
  EXPECT_THROW(EdgeFlipChain(GraphState::base_only(u), 0.0, Rng(1)), InvalidArgument);
}

TEST(ChainStep, FlipProbabilitySetsStationaryLaw) {
  // Per-edge two-state chain: P(add) = p/C, P(remove) = (1-p)/C, so the
  // stationary presence is p.
  const auto u = make_universe(star_config(4, 0.3));
  EdgeFlipChain chain(GraphState::base_only(u), 0.3, Rng(8));
  double present = 0;
  const int steps = 200000;
  for (int k = 0; k < steps; ++k) {
    chain.advance();
    present += static_cast<double>(chain.state().extra_count()) / 3.0;
  }
  EXPECT_NEAR(present / steps, 0.3, 0.02);
}

TEST(SampleStationary, MarginalsMatchFlipProbability) {
  const ChainConfig cfg = star_config(6, 0.25);
  const auto u = make_universe(cfg);
  Rng rng(4);
  std::vector<int> count(u->pair_count(), 0);
  const int n = 20000;
  for (int t = 0; t < n; ++t) {
    const GraphState s = sample_stationary(u, 0.25, rng);
    for (std::uint32_t id : s.extra_ids()) ++count[id];
  }
  for (std::uint32_t id : u->non_base_ids()) {
    EXPECT_NEAR(count[id] / static_cast<double>(n), 0.25, 4 * std::sqrt(0.25 * 0.75 / n));
  }
  for (const EdgeId& e : cfg.base_edges) EXPECT_EQ(count[u->pair_id(e)], 0);
}

TEST(StationaryMeanLaplacian, TriangleIsExact) {
  Eigen::Matrix3d expected;
  expected << 2, -1, -1, -1, 2, -1, -1, -1, 2;
  EXPECT_EQ(stationary_mean_laplacian(triangle_config()), Eigen::MatrixXd(expected));
}

TEST(StationaryMeanLaplacian, StarFourByHand) {
  const Eigen::MatrixXd m = stationary_mean_laplacian(star_config(4));
  Eigen::Matrix4d expected;
  // L(star) + 1/2 L({(1,2),(1,3),(2,3)})
  expected << 3, -1, -1, -1,
              -1, 2, -0.5, -0.5,
              -1, -0.5, 2, -0.5,
              -1, -0.5, -0.5, 2;
  EXPECT_EQ(m, Eigen::MatrixXd(expected));
  EXPECT_EQ(m(1, 1), 2.0);
  EXPECT_EQ(m, m.transpose());
  for (int i = 0; i < 4; ++i) EXPECT_EQ(m.row(i).sum(), 0.0);
}

TEST(StationaryMeanLaplacian, MatchesMonteCarloAverage) {
  const ChainConfig cfg = chain_config_for(make_cycle(6));
  const auto u = make_universe(cfg);
  Rng rng(6);
  Eigen::MatrixXd avg = Eigen::MatrixXd::Zero(6, 6);
  const int n = 20000;
  for (int t = 0; t < n; ++t) avg += state_laplacian(sample_stationary(u, 0.5, rng));
  avg /= n;
  EXPECT_LT((avg - stationary_mean_laplacian(cfg)).cwiseAbs().maxCoeff(), 0.03);
}

TEST(MixingTime, CompleteBaseMixesImmediately) {
  Rng rng(1);
  const MixingEstimate est = estimate_mixing_time(triangle_config(), 50, 100, rng);
  EXPECT_EQ(est.tau, 1);
  EXPECT_TRUE(est.reached);
  for (const auto& [k, tv] : est.tv_curve) EXPECT_EQ(tv, 0.0);
}

TEST(MixingTime, ArgumentsValidated) {
  Rng rng(1);
  EXPECT_THROW(estimate_mixing_time(star_config(4), 0, 100, rng), InvalidArgument);
  EXPECT_THROW(estimate_mixing_time(star_config(4), 10, 99, rng), InvalidArgument);
}

TEST(MixingTime, StarFourTracksAnalyticRate) {
  Rng rng(7);
  const MixingEstimate est = estimate_mixing_time(star_config(4), 200, 4000, rng);
  EXPECT_TRUE(est.reached);
  EXPECT_LE(est.tv_curve.back().second, 0.25);
  ASSERT_EQ(est.tv_curve.size(), 201u);
  for (std::size_t k = 1; k < est.tv_curve.size(); ++k) {
    EXPECT_LE(est.tv_curve[k].second, est.tv_curve[k - 1].second);
  }
  // Envelope of a max over 3 edges sits above the analytic per-edge value by
  // at most a few binomial standard errors.
  for (std::int64_t k = 0; k <= 60; ++k) {
    const double analytic = analytic_edge_tv(4, k);
    EXPECT_GE(est.tv_curve[k].second, analytic - 0.03) << "k=" << k;
    EXPECT_LE(est.tv_curve[k].second, analytic + 0.06) << "k=" << k;
  }
  EXPECT_EQ(analytic_tau(4), 8);
  EXPECT_GE(est.tau, analytic_tau(4) - 2);
  EXPECT_LE(est.tau, analytic_tau(4) + 3);
}

TEST(MixingTime, NonDecreasingInStarSize) {
  std::int64_t previous = 0;
  for (int d : {4, 6, 8}) {
    Rng rng(100 + d);
    const MixingEstimate est = estimate_mixing_time(star_config(d), 400, 1000, rng);
    EXPECT_TRUE(est.reached);
    EXPECT_GE(est.tau, previous) << "d=" << d;
    previous = est.tau;
  }
  EXPECT_LT(analytic_tau(4), analytic_tau(6));
  EXPECT_LT(analytic_tau(6), analytic_tau(8));
}

TEST(MixingTime, HorizonTooShortIsFlagged) {
  Rng rng(3);
  const MixingEstimate est = estimate_mixing_time(star_config(8), 5, 200, rng);
  EXPECT_FALSE(est.reached);
  EXPECT_EQ(est.tau, 5);
}

TEST(MixingTime, DeterministicGivenSeed) {
  Rng a(9), b(9);
  const MixingEstimate x = estimate_mixing_time(star_config(5), 80, 200, a);
  const MixingEstimate y = estimate_mixing_time(star_config(5), 80, 200, b);
  EXPECT_EQ(x.tau, y.tau);
  EXPECT_EQ(x.tv_curve, y.tv_curve);
}

}  // namespace
