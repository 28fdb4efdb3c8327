#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "bapomcp/bandit.hpp"
#include "bapomcp/pomcp.hpp"

namespace bapomcp {

/// How many actions to take from one search tree before replanning.
struct CommitmentPolicy {
  enum class Kind { kSingle, kFixedK, kWelch, kUGapEc };

  Kind kind = Kind::kSingle;
  std::size_t k = 1;
  double p_threshold = 0.05;
  double delta = 0.05;
  double epsilon = 0.0;
  std::size_t max_commit = 5;

  static CommitmentPolicy single() { return {}; }
  static CommitmentPolicy fixed_k(std::size_t k) {
    CommitmentPolicy p;
    p.kind = Kind::kFixedK;
    p.k = k;
    return p;
  }
  static CommitmentPolicy welch(double p_threshold) {
    CommitmentPolicy p;
    p.kind = Kind::kWelch;
    p.p_threshold = p_threshold;
    return p;
  }
  static CommitmentPolicy ugapec(double delta, double epsilon) {
    CommitmentPolicy p;
    p.kind = Kind::kUGapEc;
    p.delta = delta;
    p.epsilon = epsilon;
    return p;
  }

  void validate() const {
    if (max_commit < 1) throw std::invalid_argument("max_commit must be >= 1");
    if (kind == Kind::kFixedK && k < 1) throw std::invalid_argument("fixed_k needs k >= 1");
    if (kind == Kind::kWelch && !(p_threshold > 0.0 && p_threshold < 1.0)) {
      throw std::invalid_argument("p_threshold must lie in (0, 1)");
    }
    if (kind == Kind::kUGapEc && (!(delta > 0.0 && delta < 1.0) || !(epsilon >= 0.0))) {
      throw std::invalid_argument("ugapec needs delta in (0, 1) and epsilon >= 0");
    }
  }
};

enum class StopReason { kFirstActionDefault, kTestFailed, kMissingBranch, kCapReached };

inline std::string_view to_string(StopReason r) {
  switch (r) {
    case StopReason::kFirstActionDefault: return "first-action-default";
    case StopReason::kTestFailed: return "test-failed";
    case StopReason::kMissingBranch: return "missing-branch";
    case StopReason::kCapReached: return "cap-reached";
  }
  return "?";
}

struct CommittedPlan {
  std::vector<std::size_t> actions;
  /// Observation bin assumed between actions[i] and actions[i + 1].
  std::vector<std::int64_t> expected_bins;
  std::size_t levels_tested = 0;
  StopReason stop_reason = StopReason::kFirstActionDefault;
};

/// Welch test between the two highest-mean arms with at least two samples.
/// True iff the two-tailed p-value is below the threshold.
inline bool welch_commit_check(std::span<const ArmStats> arms, double p_threshold) {
  std::size_t first = arms.size(), second = arms.size();
  for (std::size_t i = 0; i < arms.size(); ++i) {
    if (arms[i].count < 2) continue;
    if (first == arms.size() || arms[i].mean > arms[first].mean) {
      second = first;
      first = i;
    } else if (second == arms.size() || arms[i].mean > arms[second].mean) {
      second = i;
    }
  }
  if (second == arms.size()) return false;
  const auto w = welch_t(arms[first], arms[second]);
  return welch_p(w.t, w.dof) < p_threshold;
}

inline bool ugapec_commit_check(std::span<const ArmStats> arms, double delta, double epsilon,
                                double b) {
  if (arms.size() < 2) return false;
  for (const auto& a : arms) {
    if (a.count == 0) return false;
  }
  ExplorationConfig cfg;
  cfg.b = b;
  cfg.delta = delta;
  cfg.epsilon = epsilon;
  return ugapec_confident(arms, cfg);
}

/// Extracts the committed action sequence from a finished tree.
///
/// The root's best arm is always taken. Other policies then descend through the
/// last committed action's most-visited observation bin and commit that node's
/// best arm only if its test passes. `b` is the confidence multiplier used by
/// the UGapEc test.
inline CommittedPlan extract_plan(const SearchTree& tree, const CommitmentPolicy& policy,
                                  double b = 1.0) {
  policy.validate();
  CommittedPlan plan;
  NodeId node = tree.root();
  plan.actions.push_back(best_arm(tree.action_stats(node)));
  if (policy.kind == CommitmentPolicy::Kind::kSingle) {
    plan.stop_reason = StopReason::kFirstActionDefault;
    return plan;
  }

  const std::size_t cap = policy.kind == CommitmentPolicy::Kind::kFixedK
                              ? std::min(policy.k, policy.max_commit)
                              : policy.max_commit;
  auto passes = [&](const std::vector<ArmStats>& stats) {
    switch (policy.kind) {
      case CommitmentPolicy::Kind::kFixedK: return true;
      case CommitmentPolicy::Kind::kWelch:
        ++plan.levels_tested;
        return welch_commit_check(stats, policy.p_threshold);
      case CommitmentPolicy::Kind::kUGapEc:
        ++plan.levels_tested;
        return ugapec_commit_check(stats, policy.delta, policy.epsilon, b);
      case CommitmentPolicy::Kind::kSingle: break;
    }
    return false;
  };

  while (true) {
    if (plan.actions.size() >= cap) {
      plan.stop_reason = StopReason::kCapReached;
      return plan;
    }
    const auto next = tree.most_visited_observation(node, plan.actions.back());
    if (!next) {
      plan.stop_reason = StopReason::kMissingBranch;
      return plan;
    }
    const auto stats = tree.action_stats(next->second);
    const bool any_visited =
        std::any_of(stats.begin(), stats.end(), [](const ArmStats& s) { return s.count > 0; });
    if (!any_visited) {
      plan.stop_reason = StopReason::kMissingBranch;
      return plan;
    }
    if (!passes(stats)) {
      plan.stop_reason = StopReason::kTestFailed;
      return plan;
    }
    node = next->second;
    plan.expected_bins.push_back(next->first);
    plan.actions.push_back(best_arm(stats));
  }
}

}  // namespace bapomcp
