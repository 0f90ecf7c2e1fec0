#include "magd/problem.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace magd {

std::string_view to_string(TopologyKind kind) {
  switch (kind) {
    case TopologyKind::kCycle: return "cycle";
    case TopologyKind::kStar: return "star";
    case TopologyKind::kCustom: return "custom";
  }
  return "custom";
}

TopologyKind parse_topology_kind(std::string_view text) {
  if (text == "cycle") return TopologyKind::kCycle;
  if (text == "star") return TopologyKind::kStar;
  if (text == "custom") return TopologyKind::kCustom;
  throw InvalidArgument("unknown topology '" + std::string(text) + "'");
}

Topology make_cycle(int d) {
  if (d < 3) throw InvalidArgument("cycle topology needs d >= 3");
  Topology t{TopologyKind::kCycle, d, {}};
  for (int i = 0; i < d; ++i) t.edges.push_back(make_edge(i, (i + 1) % d));
  std::sort(t.edges.begin(), t.edges.end());
  return t;
}

Topology make_star(int d) {
  if (d < 2) throw InvalidArgument("star topology needs d >= 2");
  Topology t{TopologyKind::kStar, d, {}};
  for (int j = 1; j < d; ++j) t.edges.push_back({0, j});
  return t;
}

Topology make_custom(int d, std::vector<EdgeId> edges) {
  if (d < 1) throw InvalidArgument("topology needs at least one node");
  for (const EdgeId& e : edges) check_edge(e, d);
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  if (!is_connected(d, edges)) throw InvalidArgument("topology must be connected");
  return {TopologyKind::kCustom, d, std::move(edges)};
}

Topology make_topology(TopologyKind kind, int d) {
  switch (kind) {
    case TopologyKind::kCycle: return make_cycle(d);
    case TopologyKind::kStar: return make_star(d);
    case TopologyKind::kCustom: break;
  }
  throw InvalidArgument("custom topologies need an explicit edge list");
}

ChainConfig chain_config_for(const Topology& topology, double flip_probability) {
  ChainConfig c{topology.d, topology.edges, flip_probability};
  c.validate();
  return c;
}

void LaplacianOracle::apply(const Eigen::VectorXd& x, const GraphState& state,
                            Eigen::VectorXd& out) const {
  if (x.size() != state.nodes()) {
    throw InvalidArgument("stochastic gradient: dimension " + std::to_string(x.size()) +
                          " does not match " + std::to_string(state.nodes()) + " nodes");
  }
  out.setZero(x.size());
  accumulate_laplacian_product(std::span<const EdgeId>(state.base_edges()), x, out);
  const EdgeUniverse& u = state.universe();
  for (std::uint32_t id : state.extra_ids()) {
    const EdgeId e = u.edge(id);
    const double diff = x(e.i) - x(e.j);
    out(e.i) += diff;
    out(e.j) -= diff;
  }
}

Eigen::VectorXd LaplacianOracle::operator()(const Eigen::VectorXd& x,
                                            const GraphState& state) const {
  Eigen::VectorXd out;
  apply(x, state, out);
  return out;
}

Eigen::VectorXd stochastic_gradient(const Eigen::VectorXd& x, const GraphState& state) {
  return LaplacianOracle{}(x, state);
}

Eigen::MatrixXd state_laplacian(const GraphState& state) {
  Eigen::MatrixXd w = laplacian(state.nodes(), std::span<const EdgeId>(state.base_edges()));
  const EdgeUniverse& u = state.universe();
  for (std::uint32_t id : state.extra_ids()) {
    const EdgeId e = u.edge(id);
    w(e.i, e.i) += 1.0;
    w(e.j, e.j) += 1.0;
    w(e.i, e.j) -= 1.0;
    w(e.j, e.i) -= 1.0;
  }
  return w;
}

SpectralConstants spectral_constants(const Eigen::MatrixXd& mean_laplacian) {
  const Eigen::Index n = mean_laplacian.rows();
  if (n != mean_laplacian.cols()) throw InvalidArgument("spectral: matrix is not square");
  if (n < 2) throw DegenerateProblem("spectral: need at least two nodes");
  const double scale = std::max(1.0, mean_laplacian.cwiseAbs().maxCoeff());
  if ((mean_laplacian - mean_laplacian.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw InvalidArgument("spectral: matrix is not symmetric");
  }
  if (mean_laplacian.rowwise().sum().cwiseAbs().maxCoeff() > 1e-10 * scale * n) {
    throw InvalidArgument("spectral: rows do not sum to zero");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(mean_laplacian,
                                                        Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw DegenerateProblem("spectral: eigensolver failed");
  const Eigen::VectorXd& ev = solver.eigenvalues();
  if (ev(0) < -1e-10 * scale * n) throw InvalidArgument("spectral: matrix is not PSD");
  if (ev(1) <= 1e-12) {
    throw DegenerateProblem("spectral: expected graph is disconnected (lambda_2 <= 1e-12)");
  }
  return {ev(1), ev(n - 1)};
}

namespace {

double max_abs_eigenvalue(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw DegenerateProblem("eigensolver failed");
  const Eigen::VectorXd& ev = solver.eigenvalues();
  return std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
}

}  // namespace

NoiseConstants certify_noise_constants(const ChainConfig& config,
                                       const Eigen::MatrixXd& mean_laplacian, int samples,
                                       Rng& rng) {
  if (samples < 1) throw InvalidArgument("noise certification: samples must be >= 1");
  const auto universe = make_universe(config);
  NoiseConstants out;
  out.sigma = 0.0;
  if (universe->non_base_ids().empty()) return out;

  out.analytic_bound = std::max(
      max_abs_eigenvalue(state_laplacian(GraphState::base_only(universe)) - mean_laplacian),
      max_abs_eigenvalue(state_laplacian(GraphState::saturated(universe)) - mean_laplacian));
  for (int s = 0; s < samples; ++s) {
    const GraphState z = sample_stationary(universe, config.flip_probability, rng);
    out.monte_carlo_max =
        std::max(out.monte_carlo_max, max_abs_eigenvalue(state_laplacian(z) - mean_laplacian));
  }
  out.delta = std::max(out.analytic_bound, out.monte_carlo_max);
  return out;
}

void ProblemConstants::validate() const {
  if (!(mu > 0.0)) throw InvalidArgument("constants: mu must be positive");
  if (!(L_smooth >= mu)) throw InvalidArgument("constants: L must be at least mu");
  if (!(delta >= 0.0)) throw InvalidArgument("constants: delta must be non-negative");
  if (!(sigma >= 0.0)) throw InvalidArgument("constants: sigma must be non-negative");
  if (tau < 1) throw InvalidArgument("constants: tau must be a positive integer");
}

MeanLaplacianOperator::MeanLaplacianOperator(const ChainConfig& config)
    : d_(config.d), p_(config.flip_probability), base_(config.base_edges) {}

Eigen::VectorXd MeanLaplacianOperator::operator()(const Eigen::VectorXd& y) const {
  Eigen::VectorXd base_part = Eigen::VectorXd::Zero(y.size());
  accumulate_laplacian_product(std::span<const EdgeId>(base_), y, base_part);
  return (1.0 - p_) * base_part + p_ * (d_ * y - Eigen::VectorXd::Constant(y.size(), y.sum()));
}

ConsensusProblem::ConsensusProblem(ChainConfig config, Eigen::VectorXd x0)
    : config_(std::move(config)),
      universe_(make_universe(config_)),
      x0_(std::move(x0)),
      mean_(stationary_mean_laplacian(config_)),
      mean_op_(config_) {
  if (x0_.size() != config_.d) throw InvalidArgument("consensus: x0 has the wrong dimension");
  x_star_ = Eigen::VectorXd::Constant(config_.d, x0_.mean());
}

double ConsensusProblem::objective_gap(const Eigen::VectorXd& x) const {
  const Eigen::VectorXd y = x - x_star_;
  return 0.5 * y.dot(mean_op_(y));
}

Eigen::VectorXd default_initial_point(int d, Rng& rng) {
  Eigen::VectorXd x(d);
  for (int i = 0; i < d; ++i) x(i) = rng.uniform(0.0, 10.0);
  return x;
}

}  // namespace magd
