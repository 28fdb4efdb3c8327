#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "bapomcp/special.hpp"

namespace bapomcp {

/// Running sample moments of one arm (Welford).
struct ArmStats {
  std::size_t count = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double sample) {
    ++count;
    const double delta = sample - mean;
    mean += delta / static_cast<double>(count);
    m2 += delta * (sample - mean);
    if (m2 < 0.0) m2 = 0.0;
  }

  /// Unbiased sample variance; requires count >= 2.
  double variance() const {
    if (count < 2) throw std::domain_error("sample variance needs at least two samples");
    return m2 / static_cast<double>(count - 1);
  }
};

[[nodiscard]] inline ArmStats update(ArmStats stats, double sample) {
  stats.add(sample);
  return stats;
}

/// Parameters shared by the confidence-bound explorers.
struct ExplorationConfig {
  std::size_t budget_n = 1;
  double b = 1.0;
  /// Fixed H_eps; unset selects the plug-in estimate from empirical gaps.
  std::optional<double> h_eps;
  double delta = 0.05;
  double epsilon = 0.0;
};

/// Argmax of the empirical means; unpulled arms only count when every arm is
/// unpulled (then 0). Ties go to the lower index.
inline std::size_t best_arm(std::span<const ArmStats> arms) {
  if (arms.empty()) throw std::invalid_argument("best_arm: empty arm list");
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < arms.size(); ++i) {
    if (arms[i].count == 0) continue;
    if (!best || arms[i].mean > arms[*best].mean) best = i;
  }
  return best.value_or(0);
}

/// UCB1 selection with exploration multiplier `b`. Unvisited arms first;
/// ties break on fewer pulls, then lower index.
inline std::size_t uct_select(std::span<const ArmStats> arms, std::size_t parent_count, double b) {
  if (arms.empty()) throw std::invalid_argument("uct_select: empty arm list");
  for (std::size_t i = 0; i < arms.size(); ++i) {
    if (arms[i].count == 0) return i;
  }
  const double log_parent = std::log(static_cast<double>(std::max<std::size_t>(parent_count, 1)));
  std::size_t best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < arms.size(); ++i) {
    const double score =
        arms[i].mean + b * std::sqrt(log_parent / static_cast<double>(arms[i].count));
    if (score > best_score || (score == best_score && arms[i].count < arms[best].count)) {
      best = i;
      best_score = score;
    }
  }
  return best;
}

namespace detail {

inline void require_pulled(std::span<const ArmStats> arms, const char* who) {
  for (const auto& a : arms) {
    if (a.count == 0) throw std::invalid_argument(std::string(who) + ": every arm needs a pull");
  }
}

/// B_i = max_{j != i} (mu_j + beta_j) - (mu_i - beta_i).
inline std::vector<double> gap_indices(std::span<const ArmStats> arms,
                                       std::span<const double> half_width) {
  const std::size_t k = arms.size();
  std::size_t top = 0, second = k > 1 ? 1 : 0;
  auto ucb = [&](std::size_t i) { return arms[i].mean + half_width[i]; };
  if (k > 1 && ucb(second) > ucb(top)) std::swap(top, second);
  for (std::size_t i = 2; i < k; ++i) {
    if (ucb(i) > ucb(top)) {
      second = top;
      top = i;
    } else if (ucb(i) > ucb(second)) {
      second = i;
    }
  }
  std::vector<double> out(k);
  for (std::size_t i = 0; i < k; ++i) {
    const double rival = ucb(i == top ? second : top);
    out[i] = rival - (arms[i].mean - half_width[i]);
  }
  return out;
}

}  // namespace detail

/// Plug-in H_eps = sum_i (b / max(gap_i, 0.01 b))^2 from empirical gaps.
/// The best arm's gap is its lead over the runner-up.
inline double plugin_hardness(std::span<const ArmStats> arms, double b) {
  const std::size_t k = arms.size();
  const std::size_t top = best_arm(arms);
  double runner_up = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < k; ++i) {
    if (i != top) runner_up = std::max(runner_up, arms[i].mean);
  }
  const double floor = 0.01 * b;
  double h = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    const double gap = i == top ? arms[i].mean - runner_up : arms[top].mean - arms[i].mean;
    const double g = std::max(gap, floor);
    h += (b / g) * (b / g);
  }
  return h;
}

/// UGapE fixed-budget arm choice. Half-widths are b * sqrt(a / N_i) with
/// a = (budget_n - K) / H_eps. Pulls whichever of the candidate best arm
/// (min gap index) and its challenger (max upper bound among the rest) is less
/// certain.
inline std::size_t ugapeb_select(std::span<const ArmStats> arms, const ExplorationConfig& cfg,
                                 std::size_t /*pulls_so_far*/ = 0) {
  if (arms.empty()) throw std::invalid_argument("ugapeb_select: empty arm list");
  detail::require_pulled(arms, "ugapeb_select");
  const std::size_t k = arms.size();
  if (k == 1) return 0;
  const double h = cfg.h_eps ? *cfg.h_eps : plugin_hardness(arms, cfg.b);
  if (!(h > 0.0)) throw std::invalid_argument("ugapeb_select: H_eps must be positive");
  const double remaining =
      cfg.budget_n > k ? static_cast<double>(cfg.budget_n - k) : 0.0;
  const double rate = remaining / h;
  std::vector<double> beta(k);
  for (std::size_t i = 0; i < k; ++i) {
    beta[i] = cfg.b * std::sqrt(rate / static_cast<double>(arms[i].count));
  }
  const auto gaps = detail::gap_indices(arms, beta);
  std::size_t candidate = 0;
  for (std::size_t i = 1; i < k; ++i) {
    if (gaps[i] < gaps[candidate]) candidate = i;
  }
  std::optional<std::size_t> challenger;
  for (std::size_t i = 0; i < k; ++i) {
    if (i == candidate) continue;
    if (!challenger || arms[i].mean + beta[i] > arms[*challenger].mean + beta[*challenger]) {
      challenger = i;
    }
  }
  const std::size_t lo = std::min(candidate, *challenger);
  const std::size_t hi = std::max(candidate, *challenger);
  if (beta[hi] > beta[lo]) return hi;
  if (beta[lo] > beta[hi]) return lo;
  if (arms[hi].count < arms[lo].count) return hi;
  return lo;
}

/// Cumulative per-arm pull targets n_1..n_{K-1} of Successive Rejects:
/// n_k = ceil((n - K) / (logbar(K) (K + 1 - k))), logbar(K) = 1/2 + sum_{i=2..K} 1/i.
inline std::vector<std::size_t> sr_schedule(std::size_t k, std::size_t n) {
  if (k < 2) throw std::invalid_argument("sr_schedule: need at least two arms");
  if (n < k) throw std::invalid_argument("sr_schedule: budget smaller than the number of arms");
  double logbar = 0.5;
  for (std::size_t i = 2; i <= k; ++i) logbar += 1.0 / static_cast<double>(i);
  std::vector<std::size_t> targets;
  targets.reserve(k - 1);
  for (std::size_t phase = 1; phase < k; ++phase) {
    const double exact = static_cast<double>(n - k) / (logbar * static_cast<double>(k + 1 - phase));
    // Guard against ceil() promoting an integer that picked up rounding error.
    targets.push_back(static_cast<std::size_t>(std::ceil(exact - 1e-9)));
  }
  return targets;
}

/// Total pulls implied by a Successive Rejects schedule.
inline std::size_t sr_total_pulls(std::span<const std::size_t> targets) {
  std::size_t total = 0;
  for (auto t : targets) total += t;
  return targets.empty() ? 0 : total + targets.back();
}

/// Successive Rejects as a pull-by-pull state machine over externally held
/// arm statistics.
class SuccessiveRejects {
 public:
  struct Step {
    bool finished = false;
    std::size_t arm = 0;  // arm to pull, or the winner when finished
  };

  SuccessiveRejects(std::size_t k, std::size_t n) : targets_(sr_schedule(k, n)) {
    survivors_.reserve(k);
    for (std::size_t i = 0; i < k; ++i) survivors_.push_back(i);
  }

  std::span<const std::size_t> survivors() const { return survivors_; }
  std::span<const std::size_t> targets() const { return targets_; }
  std::size_t phase() const { return phase_; }
  std::size_t rejections() const { return rejections_; }

  /// Next pull given current arm statistics. Pulls go round-robin (fewest
  /// pulls first) to survivors below the phase target; once all reach it the
  /// lowest-mean survivor is rejected (ties reject the higher index).
  Step next(std::span<const ArmStats> arms) {
    if (arms.size() < targets_.size() + 1) {
      throw std::invalid_argument("SuccessiveRejects: arm list shorter than the schedule");
    }
    while (survivors_.size() > 1) {
      const std::size_t target = targets_[phase_];
      std::optional<std::size_t> pull;
      for (auto a : survivors_) {
        if (arms[a].count < target && (!pull || arms[a].count < arms[*pull].count)) pull = a;
      }
      if (pull) return {false, *pull};
      auto worst = survivors_.begin();
      for (auto it = survivors_.begin(); it != survivors_.end(); ++it) {
        if (arms[*it].mean <= arms[*worst].mean) worst = it;
      }
      survivors_.erase(worst);
      ++rejections_;
      ++phase_;
    }
    return {true, survivors_.front()};
  }

 private:
  std::vector<std::size_t> targets_;
  std::vector<std::size_t> survivors_;
  std::size_t phase_ = 0;
  std::size_t rejections_ = 0;
};

/// Fixed-confidence UGapE stopping rule: with half-widths
/// b * sqrt(ln(4 K N_i^3 / delta) / (2 N_i)), true iff the gap index of the
/// empirical best arm is at most epsilon.
inline bool ugapec_confident(std::span<const ArmStats> arms, const ExplorationConfig& cfg) {
  if (arms.size() < 2) throw std::invalid_argument("ugapec_confident: need at least two arms");
  detail::require_pulled(arms, "ugapec_confident");
  if (!(cfg.delta > 0.0 && cfg.delta < 1.0)) {
    throw std::invalid_argument("ugapec_confident: delta must lie in (0, 1)");
  }
  const double k = static_cast<double>(arms.size());
  std::vector<double> beta(arms.size());
  for (std::size_t i = 0; i < arms.size(); ++i) {
    const double n = static_cast<double>(arms[i].count);
    beta[i] = cfg.b * std::sqrt(std::log(4.0 * k * n * n * n / cfg.delta) / (2.0 * n));
  }
  const auto gaps = detail::gap_indices(arms, beta);
  const double b_best = gaps[best_arm(arms)];
  // Relative slack so that a boundary constructed as B == epsilon is accepted.
  return b_best <= cfg.epsilon + 1e-12 * std::max(1.0, std::fabs(cfg.epsilon));
}

struct WelchResult {
  double t = 0.0;
  double dof = 0.0;
};

class InsufficientSamples : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Welch's unequal-variance t statistic and Welch-Satterthwaite degrees of
/// freedom. Zero-variance pairs: equal means give t = 0, otherwise t = +-inf;
/// dof is then the largest finite double.
inline WelchResult welch_t(const ArmStats& a, const ArmStats& b) {
  if (a.count < 2 || b.count < 2) {
    throw InsufficientSamples("welch_t: each arm needs at least two samples");
  }
  const double na = static_cast<double>(a.count);
  const double nb = static_cast<double>(b.count);
  const double sa = a.variance() / na;
  const double sb = b.variance() / nb;
  const double se2 = sa + sb;
  const double diff = a.mean - b.mean;
  if (se2 == 0.0) {
    const double t = diff == 0.0 ? 0.0
                                 : std::copysign(std::numeric_limits<double>::infinity(), diff);
    return {t, std::numeric_limits<double>::max()};
  }
  const double dof = se2 * se2 / (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
  return {diff / std::sqrt(se2), dof};
}

/// Two-tailed p-value of a t statistic with `dof` degrees of freedom.
inline double welch_p(double t, double dof) {
  if (!(dof > 0.0)) throw std::domain_error("welch_p: degrees of freedom must be positive");
  return std::clamp(special::student_t_two_tailed(t, dof), 0.0, 1.0);
}

}  // namespace bapomcp
