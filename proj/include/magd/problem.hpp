#pragma once

#include <cstdint>
#include <memory>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "magd/chain.hpp"
#include "magd/graph.hpp"
#include "magd/random.hpp"

namespace magd {

enum class TopologyKind { kCycle, kStar, kCustom };

std::string_view to_string(TopologyKind kind);
TopologyKind parse_topology_kind(std::string_view text);

struct Topology {
  TopologyKind kind = TopologyKind::kCustom;
  int d = 0;
  std::vector<EdgeId> edges;
};

/// Edges (i, i+1 mod d); needs d >= 3.
Topology make_cycle(int d);
/// Edges (0, j) for 1 <= j < d; needs d >= 2.
Topology make_star(int d);
/// Validates the edge list and connectivity.
Topology make_custom(int d, std::vector<EdgeId> edges);
Topology make_topology(TopologyKind kind, int d);

/// grad F(x, z) = W_z x for the consensus objective 1/2 x^T W_z x.
class LaplacianOracle {
 public:
  Eigen::VectorXd operator()(const Eigen::VectorXd& x, const GraphState& state) const;
  /// out = W_state x without allocating.
  void apply(const Eigen::VectorXd& x, const GraphState& state, Eigen::VectorXd& out) const;
};

Eigen::VectorXd stochastic_gradient(const Eigen::VectorXd& x, const GraphState& state);

/// Dense Laplacian of base + extra edges of the state.
Eigen::MatrixXd state_laplacian(const GraphState& state);

struct SpectralConstants {
  double mu = 0.0;
  double L_smooth = 0.0;
};

/// mu = second-smallest eigenvalue (algebraic connectivity), L = largest.
/// Strong convexity is taken on the mean-preserving subspace, which every
/// consensus iterate stays in.
SpectralConstants spectral_constants(const Eigen::MatrixXd& mean_laplacian);

struct NoiseConstants {
  double sigma = 0.0;
  double delta = 0.0;
  double analytic_bound = 0.0;
  double monte_carlo_max = 0.0;
};

/// sigma is exactly zero (every W_z annihilates the consensus point). delta is
/// an estimate: the larger of |lambda|_max(W_z - E[W]) at the two extreme
/// states and over `samples` stationary draws.
NoiseConstants certify_noise_constants(const ChainConfig& config,
                                       const Eigen::MatrixXd& mean_laplacian, int samples,
                                       Rng& rng);

struct ProblemConstants {
  double mu = 0.0;
  double L_smooth = 0.0;
  double delta = 0.0;
  double sigma = 0.0;
  std::int64_t tau = 1;

  void validate() const;
};

/// E[W] y evaluated from its structure (1-p) L(base) + p L(K_d), O(d + |base|).
class MeanLaplacianOperator {
 public:
  explicit MeanLaplacianOperator(const ChainConfig& config);
  Eigen::VectorXd operator()(const Eigen::VectorXd& y) const;

 private:
  int d_;
  double p_;
  std::vector<EdgeId> base_;
};

/// Population objective f(x) = 1/2 x^T E[W] x over a Markov-varying graph.
class ConsensusProblem {
 public:
  ConsensusProblem(ChainConfig config, Eigen::VectorXd x0);

  const ChainConfig& chain_config() const { return config_; }
  const std::shared_ptr<const EdgeUniverse>& universe() const { return universe_; }
  int dimension() const { return config_.d; }
  const Eigen::VectorXd& x0() const { return x0_; }
  /// Every coordinate equal to mean(x0).
  const Eigen::VectorXd& x_star() const { return x_star_; }
  const Eigen::MatrixXd& mean_laplacian() const { return mean_; }
  const MeanLaplacianOperator& mean_operator() const { return mean_op_; }

  /// f(x) - f(x*), evaluated on x - x* for accuracy.
  double objective_gap(const Eigen::VectorXd& x) const;
  double dist_sq(const Eigen::VectorXd& x) const { return (x - x_star_).squaredNorm(); }

 private:
  ChainConfig config_;
  std::shared_ptr<const EdgeUniverse> universe_;
  Eigen::VectorXd x0_;
  Eigen::VectorXd x_star_;
  Eigen::MatrixXd mean_;
  MeanLaplacianOperator mean_op_;
};

/// Coordinates uniform on [0, 10].
Eigen::VectorXd default_initial_point(int d, Rng& rng);

ChainConfig chain_config_for(const Topology& topology, double flip_probability = 0.5);

}  // namespace magd
