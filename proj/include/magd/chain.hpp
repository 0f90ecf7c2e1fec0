#pragma once

#include <concepts>
#include <cstdint>
#include <memory>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "magd/graph.hpp"
#include "magd/random.hpp"

namespace magd {

/// Minimal contract shared by every finite-state chain the estimator can
/// drive: a current state and a one-step transition.
template <typename C>
concept MarkovChain = requires(C& chain, const C& cchain) {
  typename C::State;
  { cchain.state() } -> std::convertible_to<const typename C::State&>;
  chain.advance();
};

struct ChainConfig {
  int d = 0;
  std::vector<EdgeId> base_edges;
  /// Probability that a step proposes an insertion (otherwise a removal).
  double flip_probability = 0.5;

  void validate() const;
};

/// Immutable bookkeeping shared by all states of one chain: pair numbering,
/// base mask and the non-base pair list.
class EdgeUniverse {
 public:
  EdgeUniverse(int nodes, std::span<const EdgeId> base_edges);

  int nodes() const { return nodes_; }
  std::uint64_t pair_count() const { return pairs_; }
  std::uint32_t pair_id(const EdgeId& e) const;
  EdgeId edge(std::uint32_t id) const { return edges_[id]; }
  bool is_base(std::uint32_t id) const { return base_mask_[id] != 0; }
  const std::vector<EdgeId>& base_edges() const { return base_; }
  const std::vector<std::uint32_t>& non_base_ids() const { return non_base_; }
  /// Position of a non-base pair in non_base_ids(), or -1 for base pairs.
  std::int64_t non_base_index(std::uint32_t id) const { return non_base_pos_[id]; }

 private:
  int nodes_;
  std::uint64_t pairs_;
  std::vector<std::uint64_t> row_offset_;
  std::vector<EdgeId> edges_;
  std::vector<std::uint8_t> base_mask_;
  std::vector<EdgeId> base_;
  std::vector<std::uint32_t> non_base_;
  std::vector<std::int64_t> non_base_pos_;
};

std::shared_ptr<const EdgeUniverse> make_universe(const ChainConfig& config);

/// Communication graph = fixed base edges + mutable extra edges.
class GraphState {
 public:
  static GraphState base_only(std::shared_ptr<const EdgeUniverse> universe);
  /// Every non-base pair present.
  static GraphState saturated(std::shared_ptr<const EdgeUniverse> universe);
  static GraphState with_extra(std::shared_ptr<const EdgeUniverse> universe,
                               std::span<const EdgeId> extra);

  int nodes() const { return universe_->nodes(); }
  const EdgeUniverse& universe() const { return *universe_; }
  const std::shared_ptr<const EdgeUniverse>& universe_ptr() const { return universe_; }
  const std::vector<EdgeId>& base_edges() const { return universe_->base_edges(); }

  /// Extra edges in sorted order.
  std::vector<EdgeId> extra_edges() const;
  /// Extra pair ids in storage order (cheap).
  std::span<const std::uint32_t> extra_ids() const { return extra_; }
  std::size_t extra_count() const { return extra_.size(); }
  bool has_extra(std::uint32_t id) const { return mask_[id] != 0; }
  bool contains(const EdgeId& e) const;

  /// Both return whether the state changed; base pairs are never touched.
  bool add_extra(std::uint32_t id);
  bool remove_extra(std::uint32_t id);

  /// Same universe contents and same extra set.
  bool operator==(const GraphState& other) const;

 private:
  explicit GraphState(std::shared_ptr<const EdgeUniverse> universe);

  std::shared_ptr<const EdgeUniverse> universe_;
  std::vector<std::uint8_t> mask_;
  std::vector<std::uint32_t> extra_;
  std::vector<std::uint32_t> pos_;
};

struct Transition {
  std::uint32_t pair = 0;
  bool proposed_add = false;
  bool changed = false;
};

/// Applies a given coin outcome and proposed pair: an absent non-base pair is
/// added, a present extra pair is removed, anything else is a no-op.
Transition apply_proposal(GraphState& state, bool add, std::uint32_t pair);

/// One edge-flip transition in place. Draws the add/remove coin, then one
/// pair uniformly from all C(d,2) pairs.
Transition step(GraphState& state, double flip_probability, Rng& rng);

/// Value-returning form of step().
GraphState next_state(GraphState state, double flip_probability, Rng& rng);

/// Exact stationary draw: each non-base pair present independently with
/// probability flip_probability.
GraphState sample_stationary(std::shared_ptr<const EdgeUniverse> universe,
                             double flip_probability, Rng& rng);

/// A single trajectory of the edge-flip chain.
class EdgeFlipChain {
 public:
  using State = GraphState;

  EdgeFlipChain(GraphState initial, double flip_probability, Rng rng);

  const GraphState& state() const { return state_; }
  double flip_probability() const { return flip_probability_; }
  std::uint64_t steps() const { return steps_; }
  Transition advance();

 private:
  GraphState state_;
  double flip_probability_;
  Rng rng_;
  std::uint64_t steps_ = 0;
};

/// Stationary expectation of the Laplacian:
/// L(base) + p * sum over non-base pairs of the single-edge Laplacians.
Eigen::MatrixXd stationary_mean_laplacian(const ChainConfig& config);

enum class TvSurrogate { kPerEdgeMarginalMax };

struct MixingEstimate {
  std::int64_t tau = 1;
  /// Non-increasing envelope, one entry per step 0..horizon.
  std::vector<std::pair<std::int64_t, double>> tv_curve;
  /// False when the envelope never reached 1/4 within the horizon.
  bool reached = true;
  TvSurrogate surrogate = TvSurrogate::kPerEdgeMarginalMax;
};

inline constexpr double kMixingThreshold = 0.25;

/// Empirical mixing time from two replica ensembles started at the empty and
/// the saturated extra set. Distance at each step is the largest per-edge
/// marginal TV; tau is the first step where its non-increasing envelope is
/// at most 1/4.
MixingEstimate estimate_mixing_time(const ChainConfig& config, std::int64_t horizon,
                                    int replicas, Rng& rng);

/// (1 - 1/C(d,2))^k: per-edge marginal TV between the two extreme starts.
double analytic_edge_tv(int nodes, std::int64_t step);

}  // namespace magd
