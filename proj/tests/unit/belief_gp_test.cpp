#include <cmath>
#include <memory>
#include <random>
#include <vector>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "bapomcp/belief_gp.hpp"

namespace bapomcp {
namespace {

KernelParams unit_kernel(double noise = 0.0) {
  KernelParams k;
  k.lengthscale = 1.0;
  k.signal_variance = 1.0;
  k.noise_variance = noise;
  return k;
}

// Independent dense GP solve used as the oracle.
PosteriorStats dense_posterior(const KernelParams& k, const std::vector<Point>& xs,
                               const std::vector<double>& ys, const Point& q) {
  const auto n = static_cast<Eigen::Index>(xs.size());
  Eigen::MatrixXd gram(n, n);
  Eigen::VectorXd kq(n), y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) gram(i, j) = k(xs[i], xs[j]);
    gram(i, i) += k.noise_variance;
    kq(i) = k(xs[i], q);
    y(i) = ys[i];
  }
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
  const double mean = kq.dot(ldlt.solve(y));
  const double var = k(q, q) - kq.dot(ldlt.solve(kq));
  return {mean, std::sqrt(std::max(var, 0.0))};
}

TEST(GpBelief, EmptyBeliefReturnsPrior) {
  KernelParams k = unit_kernel();
  k.signal_variance = 2.5;
  const GpBelief belief(k);
  const auto s = belief.posterior({1.0, 2.0});
  EXPECT_EQ(s.mean, 0.0);
  EXPECT_EQ(s.std, std::sqrt(2.5));
}

TEST(GpBelief, AddObservationGrowsByOneAndLeavesOriginal) {
  const GpBelief empty(unit_kernel());
  const GpBelief one = empty.add_observation({0.0, 0.0}, 1.0);
  const GpBelief two = one.add_observation({1.0, 0.0}, 2.0);
  EXPECT_EQ(empty.size(), 0u);
  EXPECT_EQ(one.size(), 1u);
  EXPECT_EQ(two.size(), 2u);
  EXPECT_EQ(one.posterior({1.0, 0.0}).mean, std::exp(-0.5));
}

TEST(GpBelief, NoiselessTrainingPointIsInterpolated) {
  const GpBelief belief = GpBelief(unit_kernel()).add_observation({0.3, 0.4}, 1.0);
  const auto s = belief.posterior({0.3, 0.4});
  EXPECT_NEAR(s.mean, 1.0, 1e-9);
  EXPECT_NEAR(s.std, 0.0, 1e-9);
}

TEST(GpBelief, SinglePointClosedFormAtUnitDistance) {
  const GpBelief belief = GpBelief(unit_kernel()).add_observation({0.0, 0.0}, 1.0);
  const auto s = belief.posterior({1.0, 0.0});
  EXPECT_NEAR(s.mean, std::exp(-0.5), 1e-9);
  EXPECT_NEAR(s.std * s.std, 1.0 - std::exp(-1.0), 1e-9);
}

TEST(GpBelief, DuplicatePointWithoutNoiseIsSingular) {
  const GpBelief one = GpBelief(unit_kernel()).add_observation({1.0, 1.0}, 0.5);
  // Rank check of the 2x2 Gram matrix [[1, 1], [1, 1]]: determinant zero.
  const KernelParams k = unit_kernel();
  const double det = k({1, 1}, {1, 1}) * k({1, 1}, {1, 1}) - k({1, 1}, {1, 1}) * k({1, 1}, {1, 1});
  ASSERT_EQ(det, 0.0);
  EXPECT_THROW((void)one.add_observation({1.0, 1.0}, 0.7), ConditioningError);

  GpBelief copy = one;
  EXPECT_FALSE(copy.try_observe(Point{1.0, 1.0}, 0.7));
  EXPECT_EQ(copy.size(), 1u);
}

TEST(GpBelief, DuplicatePointWithNoiseIsFine) {
  const GpBelief one = GpBelief(unit_kernel(0.01)).add_observation({1.0, 1.0}, 0.5);
  EXPECT_NO_THROW((void)one.add_observation({1.0, 1.0}, 0.7));
}

TEST(GpBelief, OutOfBoundsIsDomainError) {
  Bounds box;
  box.lo = {0, 0, 0, 0};
  box.hi = {5, 5, 0, 1};
  const GpBelief belief(unit_kernel(), box);
  EXPECT_THROW((void)belief.posterior({6.0, 1.0}), std::domain_error);
  EXPECT_THROW((void)belief.add_observation({-0.5, 1.0}, 1.0), std::domain_error);
  EXPECT_NO_THROW((void)belief.posterior({5.0, 5.0, 0.0, 1.0}));
}

TEST(GpBelief, InvalidKernelRejected) {
  KernelParams k = unit_kernel();
  k.lengthscale = 0.0;
  EXPECT_THROW(GpBelief{k}, std::invalid_argument);
  k = unit_kernel();
  k.noise_variance = -1.0;
  EXPECT_THROW(GpBelief{k}, std::invalid_argument);
}

TEST(GpBelief, ForkIsolation) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 5.0);
  GpBelief original(unit_kernel(1e-3));
  for (int i = 0; i < 12; ++i) original.observe(Point{u(rng), u(rng)}, u(rng));

  std::vector<Point> probes;
  std::vector<PosteriorStats> before;
  for (int i = 0; i < 10; ++i) {
    probes.push_back({u(rng), u(rng)});
    before.push_back(original.posterior(probes.back()));
  }
  GpBelief fork = original.fork();
  EXPECT_EQ(fork.posterior(probes[0]).mean, before[0].mean);
  for (int i = 0; i < 25; ++i) fork.observe(Point{u(rng), u(rng)}, u(rng));
  ASSERT_EQ(original.size(), 12u);
  for (std::size_t i = 0; i < probes.size(); ++i) {
    const auto after = original.posterior(probes[i]);
    EXPECT_EQ(after.mean, before[i].mean);
    EXPECT_EQ(after.std, before[i].std);
  }
  EXPECT_EQ(GpBelief(unit_kernel()).fork().size(), 0u);
}

TEST(GpBelief, SinglePointPropertyAgainstClosedForm) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> dist(0.0, 3.0), val(-5.0, 5.0), noise(0.0, 0.5);
  for (int trial = 0; trial < 100; ++trial) {
    const double d = dist(rng), y = val(rng), sn = noise(rng);
    const GpBelief b = GpBelief(unit_kernel(sn)).add_observation({0.0, 0.0}, y);
    const auto s = b.posterior({d, 0.0});
    const double kd = std::exp(-0.5 * d * d);
    EXPECT_NEAR(s.mean, kd / (1.0 + sn) * y, 1e-9);
    EXPECT_NEAR(s.std * s.std, 1.0 - kd * kd / (1.0 + sn), 1e-9);
  }
}

TEST(GpBelief, StdNonIncreasingAsObservationsAccumulate) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 5.0);
  const Point q{2.0, 2.0};
  GpBelief b(unit_kernel());
  double last = b.posterior(q).std;
  for (int i = 0; i < 15; ++i) {
    b.try_observe(Point{u(rng), u(rng)}, u(rng));
    const double now = b.posterior(q).std;
    EXPECT_LE(now, last + 1e-12);
    last = now;
  }
  b.try_observe(q, 1.0);
  EXPECT_NEAR(b.posterior(q).std, 0.0, 1e-6);
}

TEST(GpBelief, MatchesDenseSolveAndRefactorization) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 5.0);
  KernelParams k = unit_kernel(0.05);
  k.time_lengthscale = 0.3;
  GpBelief b(k);
  std::vector<Point> xs;
  std::vector<double> ys;
  for (int i = 0; i < 40; ++i) {
    const Point p{u(rng), u(rng), 0.0, u(rng) / 5.0};
    const double y = std::sin(p.x) + p.t;
    b.observe(p, y);
    xs.push_back(p);
    ys.push_back(y);
  }
  for (int i = 0; i < 20; ++i) {
    const Point q{u(rng), u(rng), 0.0, u(rng) / 5.0};
    const auto got = b.posterior(q);
    const auto want = dense_posterior(k, xs, ys, q);
    EXPECT_NEAR(got.mean, want.mean, 1e-8);
    EXPECT_NEAR(got.std, want.std, 1e-7);
  }
}

TEST(GpBelief, IncrementalMatchesRefactorizationEveryUpdate) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, 5.0), val(-1.0, 1.0);
  KernelParams k = unit_kernel(1e-3);
  k.lengthscale = 0.8;
  GpBelief b(k);
  std::vector<Point> xs;
  std::vector<double> ys;
  std::vector<Point> probes;
  for (int i = 0; i < 5; ++i) probes.push_back({u(rng), u(rng)});
  for (int i = 0; i < 100; ++i) {
    const Point p{u(rng), u(rng)};
    const double y = val(rng);
    ASSERT_TRUE(b.try_observe(p, y));
    xs.push_back(p);
    ys.push_back(y);
    for (const auto& q : probes) {
      const auto got = b.posterior(q);
      const auto want = dense_posterior(k, xs, ys, q);
      ASSERT_NEAR(got.mean, want.mean, 1e-8) << "update " << i;
      ASSERT_NEAR(got.std * got.std, want.std * want.std, 1e-8) << "update " << i;
    }
  }
}

TEST(SimBelief, MatchesFullBelief) {
  std::mt19937_64 rng(19);
  std::uniform_real_distribution<double> u(0.0, 5.0), val(0.0, 1.0);
  KernelParams k = unit_kernel(1e-4);
  k.time_lengthscale = 0.2;
  GpBelief base(k);
  for (int i = 0; i < 25; ++i) base.observe(Point{u(rng), u(rng), 0.0, u(rng) / 5.0}, val(rng));
  const auto cache = std::make_shared<QueryCache>(base);

  SimBelief sim(cache);
  GpBelief full = base.fork();
  for (int i = 0; i < 12; ++i) {
    const Point p{u(rng), u(rng), 0.0, u(rng) / 5.0};
    const double y = val(rng);
    const auto q = sim.query(p);
    const auto want = full.posterior(p);
    EXPECT_NEAR(q.stats.mean, want.mean, 1e-9);
    EXPECT_NEAR(q.stats.std, want.std, 1e-9);
    ASSERT_EQ(sim.try_observe(q, y), full.try_observe(p, y));
  }
  EXPECT_EQ(sim.size(), full.size());
  EXPECT_EQ(sim.added(), 12u);
  for (int i = 0; i < 10; ++i) {
    const Point q{u(rng), u(rng), 0.0, u(rng) / 5.0};
    EXPECT_NEAR(sim.posterior(q).mean, full.posterior(q).mean, 1e-9);
    EXPECT_NEAR(sim.posterior(q).std, full.posterior(q).std, 1e-9);
  }

  // Copies are independent; the shared cache is not mutated by overlays.
  SimBelief copy = sim;
  copy.try_observe(Point{1.0, 1.0, 0.0, 0.5}, 0.3);
  EXPECT_EQ(copy.added(), 13u);
  EXPECT_EQ(sim.added(), 12u);
  EXPECT_EQ(cache->base().size(), 25u);
}

TEST(SimBelief, RejectsDuplicateWithoutNoise) {
  const GpBelief base = GpBelief(unit_kernel()).add_observation({1.0, 1.0}, 0.5);
  SimBelief sim(std::make_shared<QueryCache>(base));
  EXPECT_FALSE(sim.try_observe(Point{1.0, 1.0}, 0.7));
  EXPECT_TRUE(sim.try_observe(Point{2.0, 1.0}, 0.7));
  EXPECT_FALSE(sim.try_observe(Point{2.0, 1.0}, 0.1));
  EXPECT_EQ(sim.added(), 1u);
}

TEST(GpBelief, TimeCoordinateIgnoredWithoutTimeLengthscale) {
  const KernelParams k = unit_kernel();
  EXPECT_EQ(k({1.0, 2.0, 0.0, 0.0}, {1.0, 2.0, 0.0, 0.9}), 1.0);
  KernelParams kt = k;
  kt.time_lengthscale = 0.1;
  EXPECT_LT(kt({1.0, 2.0, 0.0, 0.0}, {1.0, 2.0, 0.0, 0.9}), 1e-10);
}

TEST(ObjectiveReward, Formula) {
  EXPECT_DOUBLE_EQ(objective_reward({0.5, 0.2}, 10.0), 2.5);
  EXPECT_EQ(objective_reward({1.0, 0.0}, 100.0), 1.0);
  EXPECT_EQ(objective_reward({0.0, 1.0}, 0.0), 0.0);
}

}  // namespace
}  // namespace bapomcp
