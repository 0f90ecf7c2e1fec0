#include "magd/estimator.hpp"

#include <algorithm>
#include <string>

namespace magd {

BatchDraw make_draw(int exponent, std::uint64_t truncation, int cap) {
  if (truncation < 1) throw InvalidArgument("batch draw: truncation M must be >= 1");
  if (exponent < 1) throw InvalidArgument("batch draw: exponent must be >= 1");
  if (cap <= 0) cap = exponent_cap(truncation);
  const int j = std::min(exponent, cap);
  if (j > 63) throw InvalidArgument("batch draw: exponent too large");
  BatchDraw d;
  d.exponent = j;
  d.samples_used = std::uint64_t{1} << j;
  d.truncated = d.samples_used > truncation;
  return d;
}

BatchDraw sample_exponent(Rng& rng, std::uint64_t truncation) {
  if (truncation < 1) throw InvalidArgument("batch draw: truncation M must be >= 1");
  return make_draw(rng.geometric_half(), truncation);
}

double expected_samples(std::uint64_t truncation) {
  return static_cast<double>(exponent_cap(truncation)) + 1.0;
}

GradientEstimate estimate_by_occupancy(const Eigen::VectorXd& x_g, EdgeFlipChain& chain,
                                       const BatchDraw& draw, bool keep_levels) {
  const LaplacianOracle oracle;
  GradientEstimate out;
  out.draw = draw;
  const std::uint64_t n = draw.samples_used;

  if (draw.truncated) {
    chain.advance();
    out.g = oracle(x_g, chain.state());
    for (std::uint64_t i = 1; i < n; ++i) chain.advance();
    if (keep_levels) out.levels = EstimatorLevels{out.g, out.g, out.g, out.g};
    return out;
  }

  // Extra edges present before the window (only needed for the levels).
  std::vector<std::uint32_t> initial_extra;
  if (keep_levels) {
    const auto ids = chain.state().extra_ids();
    initial_extra.assign(ids.begin(), ids.end());
  }

  struct Event {
    std::uint32_t pair;
    std::uint64_t step;
  };
  std::vector<Event> events;
  Eigen::VectorXd g0;
  for (std::uint64_t s = 1; s <= n; ++s) {
    const Transition t = chain.advance();
    if (t.changed) events.push_back({t.pair, s});
    if (s == 1) g0 = oracle(x_g, chain.state());
  }
  std::stable_sort(events.begin(), events.end(),
                   [](const Event& a, const Event& b) { return a.pair < b.pair; });

  const std::uint64_t half = n / 2;
  const EdgeUniverse& u = chain.state().universe();
  Eigen::VectorXd correction = Eigen::VectorXd::Zero(x_g.size());
  // Occupancy counts of toggled edges: (pair, count over [1, half], count over [1, n]).
  struct Occupancy {
    std::uint32_t pair;
    std::int64_t left;
    std::int64_t total;
  };
  std::vector<Occupancy> toggled;
  for (std::size_t a = 0; a < events.size();) {
    std::size_t b = a;
    while (b < events.size() && events[b].pair == events[a].pair) ++b;
    const std::uint32_t pair = events[a].pair;
    // Presence alternates at each toggle; recover the presence before step 1.
    bool present = chain.state().has_extra(pair) != (((b - a) % 2) == 1);
    std::uint64_t seg_start = 1;
    std::int64_t left = 0;
    std::int64_t total = 0;
    auto close_segment = [&](std::uint64_t seg_end) {  // steps [seg_start, seg_end)
      if (present && seg_end > seg_start) {
        total += static_cast<std::int64_t>(seg_end - seg_start);
        const std::uint64_t left_end = std::min(seg_end, half + 1);
        if (left_end > seg_start) left += static_cast<std::int64_t>(left_end - seg_start);
      }
    };
    for (std::size_t k = a; k < b; ++k) {
      close_segment(events[k].step);
      seg_start = events[k].step;
      present = !present;
    }
    close_segment(n + 1);
    toggled.push_back({pair, left, total});
    const std::int64_t weight = total - 2 * left;
    if (weight != 0) {
      const EdgeId e = u.edge(pair);
      const double diff = static_cast<double>(weight) * (x_g(e.i) - x_g(e.j));
      correction(e.i) += diff;
      correction(e.j) -= diff;
    }
    a = b;
  }
  out.g = g0 + correction;

  if (keep_levels) {
    // Window sums: every base edge and every untouched initial extra edge is
    // present at all n steps.
    std::vector<std::uint32_t> touched;
    touched.reserve(toggled.size());
    for (const auto& o : toggled) touched.push_back(o.pair);
    Eigen::VectorXd sum_left = Eigen::VectorXd::Zero(x_g.size());
    Eigen::VectorXd sum_total = Eigen::VectorXd::Zero(x_g.size());
    auto add_edge = [&](std::uint32_t pair, double left, double total) {
      const EdgeId e = u.edge(pair);
      const double diff = x_g(e.i) - x_g(e.j);
      sum_left(e.i) += left * diff;
      sum_left(e.j) -= left * diff;
      sum_total(e.i) += total * diff;
      sum_total(e.j) -= total * diff;
    };
    for (const EdgeId& e : u.base_edges()) add_edge(u.pair_id(e), double(half), double(n));
    for (std::uint32_t pair : initial_extra) {
      if (!std::binary_search(touched.begin(), touched.end(), pair)) {
        add_edge(pair, double(half), double(n));
      }
    }
    for (const auto& o : toggled) add_edge(o.pair, double(o.left), double(o.total));
    const double nn = static_cast<double>(n);
    out.levels = EstimatorLevels{g0, sum_left / (0.5 * nn), sum_total / nn,
                                 (sum_total - sum_left) / (0.5 * nn)};
  }
  return out;
}

namespace {

EdgeFlipChain stationary_chain(const std::shared_ptr<const EdgeUniverse>& universe,
                               double flip_probability, Rng& rng) {
  GraphState start = sample_stationary(universe, flip_probability, rng);
  return EdgeFlipChain(std::move(start), flip_probability, Rng(rng()));
}

double noise_level(const ProblemConstants& c, const Eigen::VectorXd& x,
                   const Eigen::VectorXd& x_star) {
  return c.sigma * c.sigma + c.delta * c.delta * (x - x_star).squaredNorm();
}

}  // namespace

MseCheck verify_mse_bound(const ChainConfig& config, const Eigen::VectorXd& x,
                          const Eigen::VectorXd& x_star, const ProblemConstants& constants,
                          int n, int trials, Rng& rng) {
  if (n < 1) throw InvalidArgument("mse check: batch size must be >= 1");
  if (trials < 1000) throw InvalidArgument("mse check: need at least 1000 trials");
  const auto universe = make_universe(config);
  const Eigen::VectorXd full_grad = MeanLaplacianOperator(config)(x);
  const LaplacianOracle oracle;
  Eigen::VectorXd grad;
  double acc = 0.0;
  for (int t = 0; t < trials; ++t) {
    EdgeFlipChain chain = stationary_chain(universe, config.flip_probability, rng);
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(x.size());
    for (int i = 0; i < n; ++i) {
      chain.advance();
      oracle.apply(x, chain.state(), grad);
      sum += grad;
    }
    acc += (sum / n - full_grad).squaredNorm();
  }
  MseCheck out;
  out.empirical_mse = acc / trials;
  out.bound = 8.0 * static_cast<double>(constants.tau) / n * noise_level(constants, x, x_star);
  return out;
}

IdentityCheck verify_estimator_identity(const ChainConfig& config, const Eigen::VectorXd& x_g,
                                        std::uint64_t truncation, int trials, Rng& rng) {
  if (trials < 2) throw InvalidArgument("identity check: need at least two trials");
  const auto universe = make_universe(config);
  const Eigen::Index d = x_g.size();
  const int ref_exponent = exponent_cap(truncation) - 1;
  const std::uint64_t ref_samples = std::uint64_t{1} << ref_exponent;
  const LaplacianOracle oracle;

  Eigen::VectorXd sum_g = Eigen::VectorXd::Zero(d), sumsq_g = Eigen::VectorXd::Zero(d);
  Eigen::VectorXd sum_r = Eigen::VectorXd::Zero(d), sumsq_r = Eigen::VectorXd::Zero(d);
  Eigen::VectorXd grad;
  for (int t = 0; t < trials; ++t) {
    EdgeFlipChain chain = stationary_chain(universe, config.flip_probability, rng);
    const BatchDraw draw = sample_exponent(rng, truncation);
    const Eigen::VectorXd g = estimate(x_g, chain, oracle, draw).g;
    sum_g += g;
    sumsq_g += g.cwiseAbs2();

    EdgeFlipChain ref_chain = stationary_chain(universe, config.flip_probability, rng);
    Eigen::VectorXd avg = Eigen::VectorXd::Zero(d);
    for (std::uint64_t i = 0; i < ref_samples; ++i) {
      ref_chain.advance();
      oracle.apply(x_g, ref_chain.state(), grad);
      avg += grad;
    }
    avg /= static_cast<double>(ref_samples);
    sum_r += avg;
    sumsq_r += avg.cwiseAbs2();
  }
  const double m = trials;
  IdentityCheck out;
  out.mean_estimate = sum_g / m;
  out.mean_reference = sum_r / m;
  const Eigen::VectorXd var_g =
      ((sumsq_g - m * out.mean_estimate.cwiseAbs2()) / (m - 1.0)).cwiseMax(0.0);
  const Eigen::VectorXd var_r =
      ((sumsq_r - m * out.mean_reference.cwiseAbs2()) / (m - 1.0)).cwiseMax(0.0);
  out.difference_norm = (out.mean_estimate - out.mean_reference).norm();
  out.combined_standard_error = std::sqrt((var_g.sum() + var_r.sum()) / m);
  return out;
}

VarianceCheck verify_variance_bound(const ChainConfig& config, const Eigen::VectorXd& x_g,
                                    const Eigen::VectorXd& x_star,
                                    const ProblemConstants& constants, std::uint64_t truncation,
                                    int trials, Rng& rng) {
  if (trials < 1) throw InvalidArgument("variance check: trials must be >= 1");
  const auto universe = make_universe(config);
  const Eigen::VectorXd full_grad = MeanLaplacianOperator(config)(x_g);
  const LaplacianOracle oracle;
  double acc = 0.0;
  for (int t = 0; t < trials; ++t) {
    EdgeFlipChain chain = stationary_chain(universe, config.flip_probability, rng);
    const BatchDraw draw = sample_exponent(rng, truncation);
    acc += (full_grad - estimate(x_g, chain, oracle, draw).g).squaredNorm();
  }
  VarianceCheck out;
  out.empirical = acc / trials;
  out.bound = 13.0 * c1_constant() * static_cast<double>(constants.tau) *
              std::log2(static_cast<double>(truncation)) * noise_level(constants, x_g, x_star);
  return out;
}

}  // namespace magd
