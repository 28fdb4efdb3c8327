#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "bapomcp/special.hpp"

namespace bapomcp {

/// Shape of the per-step rollout allocation: an even split or the increments
/// of a cumulative Beta(alpha, beta) distribution over normalized episode time.
struct AllocationCurve {
  enum class Kind { kFixed, kBeta };

  Kind kind = Kind::kFixed;
  double alpha = 1.0;
  double beta = 1.0;

  static AllocationCurve fixed() { return {}; }
  static AllocationCurve beta_curve(double alpha, double beta) {
    return {Kind::kBeta, alpha, beta};
  }

  void validate() const {
    if (kind == Kind::kBeta && !(alpha > 0.0 && beta > 0.0)) {
      throw std::invalid_argument("beta allocation curve needs alpha > 0 and beta > 0");
    }
  }

  friend bool operator==(const AllocationCurve&, const AllocationCurve&) = default;
};

struct RolloutSchedule {
  std::vector<std::size_t> per_step;   // after the floor is applied
  std::vector<std::size_t> unclamped;  // largest-remainder rounding, sums to the budget
  std::size_t nominal_budget = 0;
  std::size_t floor = 1;

  std::size_t total() const {
    return std::accumulate(per_step.begin(), per_step.end(), std::size_t{0});
  }
};

/// Beta(alpha, beta) distribution function.
inline double beta_cdf(double x, double alpha, double beta) {
  return special::regularized_incomplete_beta(x, alpha, beta);
}

/// Splits `budget` rollouts over `steps` environment steps.
///
/// Fixed: floor(B/T) each, the remainder handed out one per step from the last
/// step backwards. Beta: B times the CDF increment of each step, rounded by
/// largest remainder (ties favour later steps) so the rounded values sum to B.
/// Every entry is then raised to `min_per_step`; the realized total may exceed B.
inline RolloutSchedule build_schedule(const AllocationCurve& curve, std::size_t budget,
                                      std::size_t steps, std::size_t min_per_step) {
  curve.validate();
  if (steps < 1) throw std::invalid_argument("build_schedule: need at least one step");
  if (min_per_step < 1) throw std::invalid_argument("build_schedule: floor must be >= 1");
  if (budget < steps) throw std::invalid_argument("build_schedule: budget smaller than step count");

  RolloutSchedule s;
  s.nominal_budget = budget;
  s.floor = min_per_step;
  s.unclamped.assign(steps, 0);

  if (curve.kind == AllocationCurve::Kind::kFixed) {
    const std::size_t base = budget / steps;
    std::size_t extra = budget % steps;
    for (std::size_t i = steps; i-- > 0;) {
      s.unclamped[i] = base + (extra > 0 ? 1 : 0);
      if (extra > 0) --extra;
    }
  } else {
    std::vector<double> remainder(steps);
    std::size_t assigned = 0;
    double prev = 0.0;
    for (std::size_t i = 0; i < steps; ++i) {
      const double x = i + 1 == steps ? 1.0 : static_cast<double>(i + 1) / static_cast<double>(steps);
      const double cdf = beta_cdf(x, curve.alpha, curve.beta);
      const double raw = std::max(0.0, static_cast<double>(budget) * (cdf - prev));
      prev = cdf;
      const double whole = std::floor(raw);
      s.unclamped[i] = static_cast<std::size_t>(whole);
      remainder[i] = raw - whole;
      assigned += s.unclamped[i];
    }
    // Floors never sum above the budget; the deficit is below `steps`.
    std::vector<std::size_t> order(steps);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (remainder[a] != remainder[b]) return remainder[a] > remainder[b];
      return a > b;
    });
    for (std::size_t r = 0; assigned < budget; r = (r + 1) % steps) {
      ++s.unclamped[order[r]];
      ++assigned;
    }
  }

  s.per_step.resize(steps);
  std::transform(s.unclamped.begin(), s.unclamped.end(), s.per_step.begin(),
                 [&](std::size_t v) { return std::max(v, min_per_step); });
  return s;
}

/// The 7 x 7 grid of Beta curves, alpha-major.
inline std::vector<AllocationCurve> grid_candidates() {
  static constexpr double kValues[] = {0.75, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0};
  std::vector<AllocationCurve> out;
  out.reserve(49);
  for (double a : kValues) {
    for (double b : kValues) out.push_back(AllocationCurve::beta_curve(a, b));
  }
  return out;
}

}  // namespace bapomcp
