#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "bapomcp/bandit.hpp"
#include "bapomcp/belief_gp.hpp"
#include "bapomcp/environments.hpp"

namespace bapomcp {

/// Root-level arm selection rule. Below the root the search always uses UCT.
enum class Explorer { kUct, kUGapEb, kSuccessiveRejects };

struct SearchConfig {
  double gamma = 0.95;
  int max_depth = 10;
  double obs_bin_width = 0.1;
  std::uint64_t rollout_policy_seed = 0;
  /// Fixed H_eps for UGapEb; unset uses the plug-in estimate.
  std::optional<double> h_eps;

  void validate() const {
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw std::invalid_argument("gamma must lie in [0, 1]");
    if (max_depth < 1) throw std::invalid_argument("max_depth must be >= 1");
    if (!(obs_bin_width > 0.0)) throw std::invalid_argument("obs_bin_width must be positive");
    if (h_eps && !(*h_eps > 0.0)) throw std::invalid_argument("h_eps must be positive");
  }
};

/// Extremes of the discounted returns seen so far in an episode. Their spread
/// is the confidence-bound multiplier b.
struct ReturnRange {
  static constexpr double kFloor = 1e-6;

  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();

  void add(double r) {
    lo = std::min(lo, r);
    hi = std::max(hi, r);
  }
  double spread() const { return hi > lo ? std::max(hi - lo, kFloor) : kFloor; }
};

inline std::int64_t discretize_observation(double value, double bin_width) {
  if (!(bin_width > 0.0)) throw std::invalid_argument("bin width must be positive");
  return static_cast<std::int64_t>(std::floor(value / bin_width));
}

using NodeId = std::uint32_t;
inline constexpr NodeId kNoNode = std::numeric_limits<NodeId>::max();

/// Observation nodes are decision points (children indexed by action); action
/// nodes branch on the discretized observation.
struct SearchNode {
  enum class Kind { kObservation, kAction };

  Kind kind = Kind::kObservation;
  int depth = 0;
  NodeId parent = kNoNode;
  std::size_t visits = 0;
  std::size_t terminations = 0;  // visits that ended here (cutoff or leaf rollout)
  ArmStats value;                // returns backed up through an action node
  std::vector<NodeId> action_children;
  std::map<std::int64_t, NodeId> observation_children;
};

class SearchTree {
 public:
  SearchTree() = default;
  explicit SearchTree(std::size_t root_actions) { add_observation_node(kNoNode, 0, root_actions); }

  NodeId root() const { return 0; }
  std::size_t size() const { return nodes_.size(); }
  const SearchNode& node(NodeId id) const { return nodes_.at(id); }
  std::span<const SearchNode> nodes() const { return nodes_; }

  /// Per-action stats at an observation node; unexpanded actions are empty.
  std::vector<ArmStats> action_stats(NodeId id) const {
    const auto& n = nodes_.at(id);
    if (n.kind != SearchNode::Kind::kObservation) {
      throw std::invalid_argument("action_stats needs an observation node");
    }
    std::vector<ArmStats> out(n.action_children.size());
    for (std::size_t a = 0; a < out.size(); ++a) {
      if (n.action_children[a] != kNoNode) out[a] = nodes_[n.action_children[a]].value;
    }
    return out;
  }

  std::vector<ArmStats> root_action_stats() const { return action_stats(root()); }

  NodeId action_child(NodeId obs_node, std::size_t action) const {
    const auto& n = nodes_.at(obs_node);
    return action < n.action_children.size() ? n.action_children[action] : kNoNode;
  }

  /// The observation child under (`from`, action, bin), if it was expanded.
  std::optional<NodeId> descend(NodeId from, std::size_t action, std::int64_t bin) const {
    const NodeId a = action_child(from, action);
    if (a == kNoNode) return std::nullopt;
    const auto& kids = nodes_[a].observation_children;
    const auto it = kids.find(bin);
    if (it == kids.end()) return std::nullopt;
    return it->second;
  }

  std::optional<NodeId> descend(std::size_t action, std::int64_t bin) const {
    return descend(root(), action, bin);
  }

  /// Most-visited observation bin below (`from`, action); ties keep the lower bin.
  std::optional<std::pair<std::int64_t, NodeId>> most_visited_observation(
      NodeId from, std::size_t action) const {
    const NodeId a = action_child(from, action);
    if (a == kNoNode) return std::nullopt;
    std::optional<std::pair<std::int64_t, NodeId>> best;
    for (const auto& [bin, id] : nodes_[a].observation_children) {
      if (!best || nodes_[id].visits > nodes_[best->second].visits) best = {bin, id};
    }
    return best;
  }

  // Mutation, used by the planner.
  NodeId add_observation_node(NodeId parent, int depth, std::size_t num_actions) {
    SearchNode n;
    n.kind = SearchNode::Kind::kObservation;
    n.depth = depth;
    n.parent = parent;
    n.action_children.assign(num_actions, kNoNode);
    nodes_.push_back(std::move(n));
    return static_cast<NodeId>(nodes_.size() - 1);
  }

  NodeId ensure_action_child(NodeId obs_node, std::size_t action) {
    NodeId& slot = nodes_.at(obs_node).action_children.at(action);
    if (slot != kNoNode) return slot;
    SearchNode n;
    n.kind = SearchNode::Kind::kAction;
    n.depth = nodes_[obs_node].depth + 1;
    n.parent = obs_node;
    nodes_.push_back(std::move(n));
    const auto id = static_cast<NodeId>(nodes_.size() - 1);
    nodes_[obs_node].action_children[action] = id;
    return id;
  }

  NodeId ensure_observation_child(NodeId action_node, std::int64_t bin, std::size_t num_actions) {
    auto& kids = nodes_.at(action_node).observation_children;
    if (auto it = kids.find(bin); it != kids.end()) return it->second;
    const NodeId id = add_observation_node(action_node, nodes_[action_node].depth + 1, num_actions);
    nodes_[action_node].observation_children.emplace(bin, id);
    return id;
  }

  SearchNode& mutable_node(NodeId id) { return nodes_.at(id); }

 private:
  std::vector<SearchNode> nodes_;
};

/// Immediate reward and sampled observation of one simulated move.
struct SimOutcome {
  double reward = 0.0;
  double observation = 0.0;
};

/// What the search needs from a world model. `sample` is called with the
/// post-move state, may draw from `rng`, and may update the simulation belief.
template <class M>
concept GenerativeModel = requires(const M& m, const typename M::State& s,
                                   typename M::Belief& belief, std::size_t a, Rng& rng) {
  { m.num_actions(s) } -> std::convertible_to<std::size_t>;
  { m.next_state(s, a) } -> std::same_as<typename M::State>;
  { m.terminal(s) } -> std::convertible_to<bool>;
  { m.sample(belief, s, rng) } -> std::same_as<SimOutcome>;
};

/// GP-backed generative model for adaptive sampling.
///
/// Rewards are mean + c * std of the simulation belief at the visited point,
/// with the mean clamped to the field's value range; the observation is a
/// posterior draw clamped to the same range, which is then added to the
/// simulation belief. Clamping keeps every simulated return bounded.
class BeliefModel {
 public:
  using State = AgentState;
  using Belief = SimBelief;

  BeliefModel(const Environment& env, double c) : env_(&env), c_(c) {
    std::tie(lo_, hi_) = env.truth.value_range();
  }

  std::size_t num_actions(const State& s) const { return env_->actions(s).size(); }

  State next_state(const State& s, std::size_t a) const {
    const auto legal = env_->actions(s);
    State next;
    next.position = displaced(s.position, legal.at(a));
    next.step_index = s.step_index + 1;
    return next;
  }

  bool terminal(const State& s) const { return env_->terminal(s); }

  SimOutcome sample(Belief& belief, const State& s, Rng& rng) const {
    const auto q = belief.query(env_->belief_point(s));
    const double mean = std::clamp(q.stats.mean, lo_, hi_);
    const double draw = q.stats.mean + q.stats.std * std::normal_distribution<double>()(rng);
    SimOutcome out;
    out.reward = objective_reward({mean, q.stats.std}, c_);
    out.observation = std::clamp(draw, lo_, hi_);
    belief.try_observe(q, out.observation);
    return out;
  }

  /// Per-step reward bounds implied by the clamping.
  std::pair<double, double> reward_bounds(double signal_variance) const {
    return {lo_, hi_ + c_ * std::sqrt(signal_variance)};
  }

  double c() const { return c_; }

 private:
  const Environment* env_;
  double c_;
  double lo_ = 0.0;
  double hi_ = 1.0;
};

/// One simulation's root action and discounted return.
struct RolloutRecord {
  std::size_t root_action = 0;
  double value = 0.0;
};

/// POMCP search with a pluggable root explorer.
///
/// Draw order per simulated move: the model's `sample` draws first; the
/// random leaf policy draws one uniform action index before each of its moves.
template <GenerativeModel Model>
class Planner {
 public:
  using State = typename Model::State;
  using Belief = typename Model::Belief;

  Planner(const Model& model, SearchConfig cfg, Explorer explorer)
      : model_(&model), cfg_(cfg), explorer_(explorer) {
    cfg_.validate();
  }

  const SearchConfig& config() const { return cfg_; }

  /// Runs exactly `n_rollouts` simulations from `state` under `belief`.
  /// `range` carries the episode's return extremes and is updated per rollout.
  SearchTree plan(const Belief& belief, const State& state, std::size_t n_rollouts, Rng& rng,
                  ReturnRange& range, std::vector<RolloutRecord>* log = nullptr) const {
    const std::size_t k = model_->num_actions(state);
    if (k == 0) throw std::invalid_argument("plan: no legal actions at the root");
    if (n_rollouts < k) throw std::invalid_argument("plan: fewer rollouts than root actions");
    SearchTree tree(k);
    Run run{&tree, &rng, &range, n_rollouts, {}};
    if (explorer_ == Explorer::kSuccessiveRejects && k >= 2 && n_rollouts > k) {
      run.sr.emplace(k, n_rollouts);
    }
    for (std::size_t i = 0; i < n_rollouts; ++i) {
      Sim sim{belief, state};
      std::size_t root_action = 0;
      const double ret = simulate(run, tree.root(), sim, 0, &root_action);
      range.add(ret);
      if (log) log->push_back({root_action, ret});
    }
    return tree;
  }

  /// Random-policy return from `state` to the depth cutoff; no tree nodes.
  double rollout(Belief& belief, State state, int depth, Rng& rng) const {
    double total = 0.0;
    double discount = 1.0;
    while (depth < cfg_.max_depth && !model_->terminal(state)) {
      const std::size_t k = model_->num_actions(state);
      const std::size_t a = std::uniform_int_distribution<std::size_t>(0, k - 1)(rng);
      state = model_->next_state(state, a);
      const SimOutcome out = model_->sample(belief, state, rng);
      total += discount * out.reward;
      discount *= cfg_.gamma;
      ++depth;
    }
    return total;
  }

 private:
  struct Sim {
    Belief belief;
    State state;
  };

  struct Run {
    SearchTree* tree;
    Rng* rng;
    ReturnRange* range;
    std::size_t budget;
    std::optional<SuccessiveRejects> sr;
  };

  std::size_t choose_root_action(Run& run, const std::vector<ArmStats>& arms) const {
    const std::size_t k = arms.size();
    if (k == 1) return 0;
    const double b = run.range->spread();
    auto fewest_pulls = [&] {
      std::size_t best = 0;
      for (std::size_t i = 1; i < k; ++i) {
        if (arms[i].count < arms[best].count) best = i;
      }
      return best;
    };
    switch (explorer_) {
      case Explorer::kUct:
        return uct_select(arms, run.tree->node(run.tree->root()).visits, b);
      case Explorer::kUGapEb: {
        for (std::size_t i = 0; i < k; ++i) {
          if (arms[i].count == 0) return i;
        }
        ExplorationConfig ec;
        ec.budget_n = run.budget;
        ec.b = b;
        ec.h_eps = cfg_.h_eps;
        return ugapeb_select(arms, ec);
      }
      case Explorer::kSuccessiveRejects: {
        // Budget == K cannot fund a schedule: one pull per action instead.
        if (!run.sr) return fewest_pulls();
        return run.sr->next(arms).arm;
      }
    }
    return 0;
  }

  double simulate(Run& run, NodeId id, Sim& sim, int depth, std::size_t* root_action) const {
    SearchTree& tree = *run.tree;
    if (depth >= cfg_.max_depth || model_->terminal(sim.state)) {
      auto& n = tree.mutable_node(id);
      ++n.visits;
      ++n.terminations;
      return 0.0;
    }
    if (id != tree.root() && tree.node(id).visits == 0) {
      auto& n = tree.mutable_node(id);
      ++n.visits;
      ++n.terminations;
      return rollout(sim.belief, sim.state, depth, *run.rng);
    }

    const auto arms = tree.action_stats(id);
    const std::size_t a = id == tree.root()
                              ? choose_root_action(run, arms)
                              : uct_select(arms, tree.node(id).visits, run.range->spread());
    if (root_action && id == tree.root()) *root_action = a;

    const NodeId action_node = tree.ensure_action_child(id, a);
    sim.state = model_->next_state(sim.state, a);
    const SimOutcome out = model_->sample(sim.belief, sim.state, *run.rng);
    const std::int64_t bin = discretize_observation(out.observation, cfg_.obs_bin_width);
    const NodeId child =
        tree.ensure_observation_child(action_node, bin, model_->num_actions(sim.state));

    const double ret = out.reward + cfg_.gamma * simulate(run, child, sim, depth + 1, nullptr);

    auto& an = tree.mutable_node(action_node);
    an.value.add(ret);
    ++an.visits;
    ++tree.mutable_node(id).visits;
    return ret;
  }

  const Model* model_;
  SearchConfig cfg_;
  Explorer explorer_;
};

}  // namespace bapomcp
