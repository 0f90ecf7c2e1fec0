#include "magd/chain.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <string>

namespace magd {

void ChainConfig::validate() const {
  if (d < 1) throw InvalidArgument("chain: node count must be positive");
  if (!(flip_probability > 0.0 && flip_probability <= 1.0)) {
    throw InvalidArgument("chain: flip_probability must lie in (0, 1]");
  }
  for (const EdgeId& e : base_edges) check_edge(e, d);
}

EdgeUniverse::EdgeUniverse(int nodes, std::span<const EdgeId> base_edges)
    : nodes_(nodes),
      pairs_(static_cast<std::uint64_t>(nodes) * static_cast<std::uint64_t>(nodes - 1) / 2) {
  if (nodes < 1) throw InvalidArgument("universe: node count must be positive");
  if (pairs_ > 0xffffffffULL) throw InvalidArgument("universe: too many node pairs");
  row_offset_.resize(nodes);
  for (int i = 0; i < nodes; ++i) {
    const auto ii = static_cast<std::uint64_t>(i);
    row_offset_[i] = ii * static_cast<std::uint64_t>(nodes) - ii * (ii + 1) / 2;
  }
  edges_.reserve(pairs_);
  for (int i = 0; i < nodes; ++i) {
    for (int j = i + 1; j < nodes; ++j) edges_.push_back({i, j});
  }
  base_mask_.assign(pairs_, 0);
  for (const EdgeId& e : base_edges) {
    check_edge(e, nodes);
    const std::uint32_t id = pair_id(e);
    if (!base_mask_[id]) {
      base_mask_[id] = 1;
      base_.push_back(e);
    }
  }
  std::sort(base_.begin(), base_.end());
  non_base_pos_.assign(pairs_, -1);
  for (std::uint32_t id = 0; id < pairs_; ++id) {
    if (!base_mask_[id]) {
      non_base_pos_[id] = static_cast<std::int64_t>(non_base_.size());
      non_base_.push_back(id);
    }
  }
}

std::uint32_t EdgeUniverse::pair_id(const EdgeId& e) const {
  check_edge(e, nodes_);
  return static_cast<std::uint32_t>(row_offset_[e.i] + static_cast<std::uint64_t>(e.j - e.i - 1));
}

std::shared_ptr<const EdgeUniverse> make_universe(const ChainConfig& config) {
  config.validate();
  return std::make_shared<const EdgeUniverse>(config.d, config.base_edges);
}

GraphState::GraphState(std::shared_ptr<const EdgeUniverse> universe)
    : universe_(std::move(universe)) {
  if (!universe_) throw InvalidArgument("graph state: null universe");
  mask_.assign(universe_->pair_count(), 0);
  pos_.assign(universe_->pair_count(), 0);
}

GraphState GraphState::base_only(std::shared_ptr<const EdgeUniverse> universe) {
  return GraphState(std::move(universe));
}

GraphState GraphState::saturated(std::shared_ptr<const EdgeUniverse> universe) {
  GraphState s(std::move(universe));
  for (std::uint32_t id : s.universe_->non_base_ids()) s.add_extra(id);
  return s;
}

GraphState GraphState::with_extra(std::shared_ptr<const EdgeUniverse> universe,
                                  std::span<const EdgeId> extra) {
  GraphState s(std::move(universe));
  for (const EdgeId& e : extra) {
    const std::uint32_t id = s.universe_->pair_id(e);
    if (s.universe_->is_base(id)) {
      throw InvalidArgument("graph state: extra edge overlaps the base graph");
    }
    s.add_extra(id);
  }
  return s;
}

std::vector<EdgeId> GraphState::extra_edges() const {
  std::vector<EdgeId> out;
  out.reserve(extra_.size());
  for (std::uint32_t id : extra_) out.push_back(universe_->edge(id));
  std::sort(out.begin(), out.end());
  return out;
}

bool GraphState::contains(const EdgeId& e) const {
  const std::uint32_t id = universe_->pair_id(e);
  return universe_->is_base(id) || mask_[id] != 0;
}

bool GraphState::add_extra(std::uint32_t id) {
  if (universe_->is_base(id) || mask_[id]) return false;
  mask_[id] = 1;
  pos_[id] = static_cast<std::uint32_t>(extra_.size());
  extra_.push_back(id);
  return true;
}

bool GraphState::remove_extra(std::uint32_t id) {
  if (!mask_[id]) return false;
  mask_[id] = 0;
  const std::uint32_t slot = pos_[id];
  const std::uint32_t last = extra_.back();
  extra_[slot] = last;
  pos_[last] = slot;
  extra_.pop_back();
  return true;
}

bool GraphState::operator==(const GraphState& other) const {
  if (universe_ != other.universe_) {
    if (universe_->nodes() != other.universe_->nodes() ||
        universe_->base_edges() != other.universe_->base_edges()) {
      return false;
    }
  }
  return mask_ == other.mask_;
}

Transition apply_proposal(GraphState& state, bool add, std::uint32_t pair) {
  if (pair >= state.universe().pair_count()) throw InvalidArgument("chain: pair id out of range");
  return {pair, add, add ? state.add_extra(pair) : state.remove_extra(pair)};
}

Transition step(GraphState& state, double flip_probability, Rng& rng) {
  const bool add = rng.bernoulli(flip_probability);
  const auto pair = static_cast<std::uint32_t>(rng.index(state.universe().pair_count()));
  return apply_proposal(state, add, pair);
}

GraphState next_state(GraphState state, double flip_probability, Rng& rng) {
  step(state, flip_probability, rng);
  return state;
}

GraphState sample_stationary(std::shared_ptr<const EdgeUniverse> universe,
                             double flip_probability, Rng& rng) {
  GraphState s = GraphState::base_only(std::move(universe));
  for (std::uint32_t id : s.universe().non_base_ids()) {
    if (rng.bernoulli(flip_probability)) s.add_extra(id);
  }
  return s;
}

EdgeFlipChain::EdgeFlipChain(GraphState initial, double flip_probability, Rng rng)
    : state_(std::move(initial)), flip_probability_(flip_probability), rng_(rng) {
  if (!(flip_probability > 0.0 && flip_probability <= 1.0)) {
    throw InvalidArgument("chain: flip_probability must lie in (0, 1]");
  }
}

Transition EdgeFlipChain::advance() {
  ++steps_;
  return step(state_, flip_probability_, rng_);
}

Eigen::MatrixXd stationary_mean_laplacian(const ChainConfig& config) {
  config.validate();
  const std::vector<EdgeId> rest = complement_edges(config.d, config.base_edges);
  return laplacian(config.d, config.base_edges) +
         config.flip_probability * laplacian(config.d, rest);
}

double analytic_edge_tv(int nodes, std::int64_t step) {
  const double pairs = 0.5 * nodes * (nodes - 1.0);
  if (pairs <= 0.0) return 0.0;
  return std::pow(1.0 - 1.0 / pairs, static_cast<double>(step));
}

namespace {

/// Presence bits of one replica over the non-base pairs.
class ReplicaBits {
 public:
  explicit ReplicaBits(std::size_t n, bool full) : words_((n + 63) / 64, full ? ~0ULL : 0ULL) {
    if (full && n % 64 != 0) words_.back() = (1ULL << (n % 64)) - 1;
  }
  bool test(std::size_t k) const { return (words_[k >> 6] >> (k & 63)) & 1ULL; }
  void flip(std::size_t k) { words_[k >> 6] ^= 1ULL << (k & 63); }

 private:
  std::vector<std::uint64_t> words_;
};

/// Multiset of |count_a - count_b| over edges with O(1) updates and the
/// current maximum.
class DiffHistogram {
 public:
  DiffHistogram(int replicas, std::size_t edges, int initial)
      : hist_(replicas + 1, 0), max_(edges ? initial : 0) {
    hist_[initial] = edges;
  }
  void move(int from, int to) {
    --hist_[from];
    ++hist_[to];
    if (to > max_) max_ = to;
    while (max_ > 0 && hist_[max_] == 0) --max_;
  }
  int max() const { return max_; }

 private:
  std::vector<std::size_t> hist_;
  int max_;
};

}  // namespace

MixingEstimate estimate_mixing_time(const ChainConfig& config, std::int64_t horizon,
                                    int replicas, Rng& rng) {
  if (horizon < 1) throw InvalidArgument("mixing: horizon must be at least 1");
  if (replicas < 100) throw InvalidArgument("mixing: need at least 100 replicas");
  const auto universe = make_universe(config);
  const auto& non_base = universe->non_base_ids();
  const std::size_t edges = non_base.size();
  const std::uint64_t pairs = universe->pair_count();
  const double p = config.flip_probability;

  // Ensemble 0 starts empty, ensemble 1 saturated.
  std::vector<ReplicaBits> bits;
  std::vector<Rng> streams;
  const std::uint64_t base_seed = rng();
  for (int e = 0; e < 2; ++e) {
    for (int r = 0; r < replicas; ++r) {
      bits.emplace_back(edges, e == 1);
      streams.emplace_back(base_seed, StreamRole::kMixing,
                           static_cast<std::uint64_t>(e) * replicas + r);
    }
  }
  std::vector<int> diff(edges, -replicas);  // count_empty - count_saturated
  DiffHistogram hist(replicas, edges, replicas);

  std::vector<double> raw(static_cast<std::size_t>(horizon) + 1);
  raw[0] = static_cast<double>(hist.max()) / replicas;
  for (std::int64_t k = 1; k <= horizon; ++k) {
    for (int e = 0; e < 2; ++e) {
      const int sign = e == 0 ? 1 : -1;
      for (int r = 0; r < replicas; ++r) {
        const std::size_t slot = static_cast<std::size_t>(e) * replicas + r;
        Rng& g = streams[slot];
        const bool add = g.bernoulli(p);
        const auto id = static_cast<std::uint32_t>(g.index(pairs));
        const std::int64_t nb = universe->non_base_index(id);
        if (nb < 0) continue;
        const auto kk = static_cast<std::size_t>(nb);
        if (bits[slot].test(kk) == add) continue;
        bits[slot].flip(kk);
        const int before = std::abs(diff[kk]);
        diff[kk] += add ? sign : -sign;
        hist.move(before, std::abs(diff[kk]));
      }
    }
    raw[static_cast<std::size_t>(k)] = static_cast<double>(hist.max()) / replicas;
  }

  MixingEstimate out;
  out.tv_curve.resize(raw.size());
  double running = 0.0;
  for (std::size_t k = raw.size(); k-- > 0;) {
    running = std::max(running, raw[k]);
    out.tv_curve[k] = {static_cast<std::int64_t>(k), running};
  }
  out.reached = false;
  for (const auto& [k, tv] : out.tv_curve) {
    if (tv <= kMixingThreshold) {
      out.tau = std::max<std::int64_t>(1, k);
      out.reached = true;
      break;
    }
  }
  if (!out.reached) out.tau = horizon;
  return out;
}

}  // namespace magd
