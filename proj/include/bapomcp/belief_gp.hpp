#pragma once

#include <algorithm>
#include <cmath>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace bapomcp {

/// A workspace location. Unused coordinates stay at zero: the dynamic field is
/// (x, y, t), grid datasets are (x, y, z) with z as depth.
struct Point {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double t = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

/// Axis-aligned box over all four coordinates; infinite by default.
struct Bounds {
  Point lo{-kInf, -kInf, -kInf, -kInf};
  Point hi{kInf, kInf, kInf, kInf};

  static constexpr double kInf = std::numeric_limits<double>::infinity();
  static constexpr double kTolerance = 1e-9;

  bool contains(const Point& p) const {
    auto in = [](double v, double lo, double hi) {
      return std::isfinite(v) && v >= lo - kTolerance && v <= hi + kTolerance;
    };
    return in(p.x, lo.x, hi.x) && in(p.y, lo.y, hi.y) && in(p.z, lo.z, hi.z) &&
           in(p.t, lo.t, hi.t);
  }
};

/// Squared-exponential kernel hyperparameters.
///
/// `lengthscale` applies to the horizontal axes. A zero `depth_lengthscale`
/// shares the horizontal value; a zero `time_lengthscale` drops the time
/// coordinate from the kernel (static fields).
struct KernelParams {
  double lengthscale = 1.0;
  double signal_variance = 1.0;
  double noise_variance = 0.0;
  double depth_lengthscale = 0.0;
  double time_lengthscale = 0.0;

  void validate() const {
    if (!(lengthscale > 0.0)) throw std::invalid_argument("kernel lengthscale must be positive");
    if (!(signal_variance > 0.0)) {
      throw std::invalid_argument("kernel signal_variance must be positive");
    }
    if (!(noise_variance >= 0.0)) {
      throw std::invalid_argument("kernel noise_variance must be non-negative");
    }
    if (!(depth_lengthscale >= 0.0) || !(time_lengthscale >= 0.0)) {
      throw std::invalid_argument("kernel depth/time lengthscales must be non-negative");
    }
  }

  double operator()(const Point& a, const Point& b) const {
    const double dx = a.x - b.x;
    const double dy = a.y - b.y;
    const double dz = a.z - b.z;
    const double lz = depth_lengthscale > 0.0 ? depth_lengthscale : lengthscale;
    double r2 = (dx * dx + dy * dy) / (lengthscale * lengthscale) + dz * dz / (lz * lz);
    if (time_lengthscale > 0.0) {
      const double dt = a.t - b.t;
      r2 += dt * dt / (time_lengthscale * time_lengthscale);
    }
    return signal_variance * std::exp(-0.5 * r2);
  }
};

/// Posterior mean and standard deviation of the latent field at one point.
struct PosteriorStats {
  double mean = 0.0;
  double std = 0.0;
};

/// Sampling objective mean + c * std.
inline double objective_reward(const PosteriorStats& stats, double c) {
  return stats.mean + c * stats.std;
}

/// Raised when a new input makes the Gram matrix numerically singular, which in
/// practice means a duplicate point under a noiseless kernel.
class ConditioningError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Gaussian-process belief with zero prior mean.
///
/// The lower Cholesky factor of the Gram matrix (plus noise on the diagonal) is
/// kept in packed row-major form and extended one row per observation, together
/// with the whitened targets L^{-1} y, so both updates and queries are O(n^2).
/// Copies are independent values; `fork` is an explicit copy for simulations.
class GpBelief {
 public:
  /// Smallest accepted squared pivot, relative to the signal variance.
  static constexpr double kPivotTolerance = 1e-8;

  /// A point with its forward-solved kernel vector, reusable for the posterior
  /// and for appending the point as an observation.
  struct Query {
    Point point;
    std::vector<double> whitened_cov;  // L^{-1} k(X, point)
    PosteriorStats stats;
    double squared_pivot = 0.0;        // k(p,p) + noise - |L^{-1} k|^2
  };

  explicit GpBelief(KernelParams kernel, Bounds bounds = {})
      : kernel_(kernel), bounds_(bounds) {
    kernel_.validate();
  }

  std::size_t size() const { return targets_.size(); }
  bool empty() const { return targets_.empty(); }
  const KernelParams& kernel() const { return kernel_; }
  const Bounds& bounds() const { return bounds_; }
  std::span<const Point> inputs() const { return inputs_; }
  std::span<const double> targets() const { return targets_; }

  GpBelief fork() const { return *this; }

  Query query(const Point& p) const {
    check_domain(p);
    Query q;
    q.point = p;
    const double prior = kernel_(p, p);
    const std::size_t n = size();
    q.whitened_cov.resize(n);
    double mean = 0.0;
    double explained = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double* row = chol_.data() + i * (i + 1) / 2;
      double acc = kernel_(inputs_[i], p);
      for (std::size_t j = 0; j < i; ++j) acc -= row[j] * q.whitened_cov[j];
      const double v = acc / row[i];
      q.whitened_cov[i] = v;
      mean += v * whitened_targets_[i];
      explained += v * v;
    }
    const double var = std::max(prior - explained, 0.0);
    q.stats = {mean, std::sqrt(var)};
    q.squared_pivot = prior + kernel_.noise_variance - explained;
    return q;
  }

  PosteriorStats posterior(const Point& p) const { return query(p).stats; }

  /// Value-returning update; `*this` is left untouched.
  [[nodiscard]] GpBelief add_observation(const Point& p, double value) const {
    GpBelief next = *this;
    next.observe(p, value);
    return next;
  }

  void observe(const Point& p, double value) { observe(query(p), value); }

  /// Appends a prepared point. The query must come from this belief in its
  /// current state.
  void observe(const Query& q, double value) {
    if (!try_observe(q, value)) {
      throw ConditioningError("gram matrix is numerically singular (duplicate input with "
                              "zero noise?)");
    }
  }

  /// Like observe, but leaves the belief unchanged and returns false when the
  /// point would make the factorization singular.
  bool try_observe(const Query& q, double value) {
    if (q.whitened_cov.size() != size()) {
      throw std::logic_error("stale GP query: belief changed since the query was made");
    }
    if (!std::isfinite(value)) throw std::domain_error("GP observation value must be finite");
    if (!(q.squared_pivot > kPivotTolerance * kernel_.signal_variance)) return false;
    const double pivot = std::sqrt(q.squared_pivot);
    double projected = 0.0;
    for (std::size_t j = 0; j < q.whitened_cov.size(); ++j) {
      projected += q.whitened_cov[j] * whitened_targets_[j];
    }
    chol_.insert(chol_.end(), q.whitened_cov.begin(), q.whitened_cov.end());
    chol_.push_back(pivot);
    whitened_targets_.push_back((value - projected) / pivot);
    inputs_.push_back(q.point);
    targets_.push_back(value);
    return true;
  }

  bool try_observe(const Point& p, double value) { return try_observe(query(p), value); }

  /// Dense copy of the lower Cholesky factor, row-major n x n.
  std::vector<double> cholesky_dense() const {
    const std::size_t n = size();
    std::vector<double> dense(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j <= i; ++j) dense[i * n + j] = chol_[i * (i + 1) / 2 + j];
    }
    return dense;
  }

 private:
  void check_domain(const Point& p) const {
    if (!bounds_.contains(p)) throw std::domain_error("GP point outside workspace bounds");
  }

  KernelParams kernel_;
  Bounds bounds_;
  std::vector<Point> inputs_;
  std::vector<double> targets_;
  std::vector<double> chol_;
  std::vector<double> whitened_targets_;
};

/// Memoized queries against a fixed belief. One cache serves every simulation
/// of a planning call; the belief must outlive the cache and stay unchanged.
class QueryCache {
 public:
  explicit QueryCache(const GpBelief& base) : base_(&base) {}

  const GpBelief& base() const { return *base_; }
  std::size_t size() const { return entries_.size(); }

  const GpBelief::Query& get(const Point& p) {
    if (const auto it = entries_.find(p); it != entries_.end()) return it->second;
    return entries_.emplace(p, base_->query(p)).first->second;
  }

 private:
  struct Hash {
    std::size_t operator()(const Point& p) const {
      std::uint64_t h = 0xcbf29ce484222325ULL;
      for (double v : {p.x, p.y, p.z, p.t}) {
        h ^= std::bit_cast<std::uint64_t>(v + 0.0);  // +0.0 folds -0.0 into 0.0
        h *= 0x100000001b3ULL;
      }
      return static_cast<std::size_t>(h);
    }
  };

  const GpBelief* base_;
  std::unordered_map<Point, GpBelief::Query, Hash> entries_;
};

/// A fixed belief plus a handful of simulated observations.
///
/// The base factor and its query cache are shared; only the observations added
/// on top are owned, so copies are cheap. Results equal a GpBelief holding the
/// same observations.
class SimBelief {
 public:
  struct Query {
    const GpBelief::Query* base = nullptr;
    std::vector<double> overlay_cov;  // whitened covariance against the added points
    PosteriorStats stats;
    double squared_pivot = 0.0;
  };

  explicit SimBelief(std::shared_ptr<QueryCache> cache) : cache_(std::move(cache)) {}

  const GpBelief& base() const { return cache_->base(); }
  std::size_t size() const { return base().size() + added_.size(); }
  std::size_t added() const { return added_.size(); }

  Query query(const Point& p) const {
    const KernelParams& k = base().kernel();
    Query q;
    q.base = &cache_->get(p);
    const auto& v = q.base->whitened_cov;
    const std::size_t m = added_.size();
    q.overlay_cov.resize(m);
    double mean = q.base->stats.mean;
    double explained = 0.0;
    for (double x : v) explained += x * x;
    for (std::size_t i = 0; i < m; ++i) {
      const auto& vi = added_[i]->whitened_cov;
      double acc = k(added_[i]->point, p);
      for (std::size_t j = 0; j < v.size(); ++j) acc -= vi[j] * v[j];
      const double* row = chol_.data() + i * (i + 1) / 2;
      for (std::size_t j = 0; j < i; ++j) acc -= row[j] * q.overlay_cov[j];
      const double u = acc / row[i];
      q.overlay_cov[i] = u;
      mean += u * whitened_targets_[i];
      explained += u * u;
    }
    const double prior = k(p, p);
    q.stats = {mean, std::sqrt(std::max(prior - explained, 0.0))};
    q.squared_pivot = prior + k.noise_variance - explained;
    return q;
  }

  PosteriorStats posterior(const Point& p) const { return query(p).stats; }

  /// Same contract as GpBelief::try_observe.
  bool try_observe(const Query& q, double value) {
    if (q.overlay_cov.size() != added_.size()) {
      throw std::logic_error("stale GP query: belief changed since the query was made");
    }
    if (!std::isfinite(value)) throw std::domain_error("GP observation value must be finite");
    if (!(q.squared_pivot > GpBelief::kPivotTolerance * base().kernel().signal_variance)) {
      return false;
    }
    const double pivot = std::sqrt(q.squared_pivot);
    chol_.insert(chol_.end(), q.overlay_cov.begin(), q.overlay_cov.end());
    chol_.push_back(pivot);
    whitened_targets_.push_back((value - q.stats.mean) / pivot);
    added_.push_back(q.base);
    return true;
  }

  bool try_observe(const Point& p, double value) { return try_observe(query(p), value); }

 private:
  std::shared_ptr<QueryCache> cache_;
  std::vector<const GpBelief::Query*> added_;
  std::vector<double> chol_;  // packed lower factor of the added block
  std::vector<double> whitened_targets_;
};

}  // namespace bapomcp
