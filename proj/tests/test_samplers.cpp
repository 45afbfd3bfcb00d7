#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "gapfill/markov.hpp"
#include "gapfill/renewal.hpp"
#include "gapfill/samplers.hpp"
#include "sampler_checks.hpp"
#include "test_util.hpp"

namespace gapfill {
namespace {

using testing::random_config;
using testing::rel_err;

struct RandomInstance {
  ErlangModel model;
  BrokenWindow window;
  OrderedConfig left;
  OrderedConfig right;
};

RandomInstance random_instance(Rng& rng, int shape) {
  const double T = uniform(rng, 2.0, 5.0);
  const double t1 = uniform(rng, 0.2, 0.6 * T);
  const double t2 = uniform(rng, t1 + 0.05, 0.95 * T);
  const BrokenWindow w(t1, t2, T);
  const ErlangModel m(uniform(rng, 0.5, 8.0), shape, T);
  std::uniform_int_distribution<int> count(0, 3);
  return {m, w, random_config(rng, 0.0, t1, count(rng)), random_config(rng, t2, T, count(rng))};
}

TEST(GapTargets, RenewalIntensityIsConditionalPapangelou) {
  Rng rng(31);
  for (int trial = 0; trial < 200; ++trial) {
    const auto inst = random_instance(rng, 1 + trial % 3);
    const RenewalGapTarget target(inst.model, inst.window, inst.left, inst.right);
    const auto gap = random_config(rng, inst.window.t1(), inst.window.t2(), trial % 4);
    const double t = uniform(rng, inst.window.t1(), inst.window.t2());
    const auto pos = gap.insertion_index(t);
    EXPECT_LT(rel_err(target.intensity(gap.view(), pos, t),
                      conditional_papangelou(inst.model, inst.window, inst.left, inst.right, gap.view(), t)),
              1e-13);
  }
}

TEST(GapTargets, PairwiseIntensityIsFullPapangelou) {
  Rng rng(32);
  const BrokenWindow w(1.0, 2.0, 3.0);
  for (int trial = 0; trial < 200; ++trial) {
    const PairwiseModel m(uniform(rng, 0.5, 4.0), uniform(rng, 0.0, 1.0), uniform(rng, 0.05, 0.6), 3.0);
    const auto left = random_config(rng, 0.0, 1.0, trial % 4);
    const auto right = random_config(rng, 2.0, 3.0, trial % 3);
    const auto gap = random_config(rng, 1.0, 2.0, trial % 5);
    const PairwiseGapTarget target(m, w, left, right);
    const double t = uniform(rng, 1.0, 2.0);
    EXPECT_LT(rel_err(target.intensity(gap.view(), gap.insertion_index(t), t),
                      papangelou(m, concat(left, gap.view(), right), t)),
              1e-13);
  }
}

TEST(GapTargets, ObservedPointsMustLieInTheirSegments) {
  const ErlangModel m(2.0, 2, 3.0);
  EXPECT_THROW(RenewalGapTarget(m, BrokenWindow(1, 2, 3), OrderedConfig{1.5}, {}), DomainError);
  EXPECT_THROW(RenewalGapTarget(m, BrokenWindow(1, 2, 4), {}, {}), DomainError);
}

// pi(x) q(x -> x') a(x -> x') = pi(x') q(x' -> x) a(x' -> x) for the birth of
// t and its reverse death, with pi the full density of the completed pattern.
TEST(MhChain, DetailedBalanceAlgebra) {
  Rng rng(33);
  for (int trial = 0; trial < 500; ++trial) {
    const auto inst = random_instance(rng, 1 + trial % 3);
    const RenewalGapTarget target(inst.model, inst.window, inst.left, inst.right);
    const auto gap = random_config(rng, inst.window.t1(), inst.window.t2(), trial % 5);
    const double t = uniform(rng, inst.window.t1(), inst.window.t2());
    const auto pos = gap.insertion_index(t);
    const auto grown = gap.with_point(t);
    const double L = inst.window.gap_length();
    const double n = static_cast<double>(gap.size());

    const double log_pi = log_density(inst.model, concat(inst.left, gap.view(), inst.right));
    const double log_pi_grown = log_density(inst.model, concat(inst.left, grown.view(), inst.right));
    const double forward = 0.5 / L * std::min(1.0, mh_birth_ratio(target, gap.view(), pos, t));
    const double backward = 0.5 / (n + 1.0) * std::min(1.0, mh_death_ratio(target, grown.view(), pos));
    EXPECT_LT(rel_err(std::exp(log_pi - log_pi_grown) * forward, backward), 1e-10);
  }
}

TEST(MhChain, RatiosAreReciprocal) {
  const ErlangModel m(3.0, 2, 3.0);
  const BrokenWindow w(1.0, 2.0, 3.0);
  const RenewalGapTarget target(m, w, OrderedConfig{0.4}, OrderedConfig{2.2});
  const OrderedConfig gap{1.2, 1.7};
  const double b = mh_birth_ratio(target, gap.view(), 1, 1.5);
  const double d = mh_death_ratio(target, gap.with_point(1.5).view(), 1);
  EXPECT_LT(rel_err(b * d, 1.0), 1e-14);
}

TEST(MhChain, HardCoreNeverEntersZeroDensity) {
  const PairwiseModel m(6.0, 0.0, 0.15, 3.0);
  const BrokenWindow w(0.5, 2.5, 3.0);
  const OrderedConfig left{0.1, 0.4}, right{2.6};
  const PairwiseGapTarget target(m, w, left, right);
  ChainConfig chain;
  chain.burn_in = 100;
  chain.thin = 10;
  chain.n_samples = 2000;
  chain.seed = 5;
  std::size_t max_points = 0;
  run_mh(target, chain, [&](std::size_t, std::span<const double> gap) {
    const auto full = concat(left, gap, right);
    ASSERT_EQ(close_pairs(full, 0.15), 0u);
    max_points = std::max(max_points, gap.size());
  });
  EXPECT_GT(max_points, 3u);
}

TEST(MhChain, SeedDeterminism) {
  const ErlangModel m(3.0, 2, 3.0);
  const RenewalGapTarget target(m, BrokenWindow(1, 2, 3), {}, {});
  ChainConfig chain;
  chain.burn_in = 50;
  chain.thin = 7;
  chain.n_samples = 30;
  chain.seed = 9;
  EXPECT_EQ(run_mh(target, chain), run_mh(target, chain));
  chain.seed = 10;
  const auto other = run_mh(target, chain);
  chain.seed = 9;
  EXPECT_NE(run_mh(target, chain), other);
}

TEST(MhChain, RejectsZeroThin) {
  const RenewalGapTarget target(ErlangModel(3.0, 2, 3.0), BrokenWindow(1, 2, 3), {}, {});
  ChainConfig chain;
  chain.thin = 0;
  EXPECT_THROW(run_mh(target, chain), DomainError);
}

TEST(MhChain, GewekeStationarity) {
  const ErlangModel m(10.0, 2, 4.0);
  const BrokenWindow w(1.0, 2.0, 4.0);
  const RenewalGapTarget target(m, w, OrderedConfig{0.3, 0.55, 0.9}, OrderedConfig{2.1, 2.4});
  ChainConfig chain;
  chain.burn_in = 1000;
  chain.thin = 20;
  chain.n_samples = 5000;
  chain.seed = 17;
  std::vector<double> trace;
  run_mh(target, chain, [&](std::size_t, std::span<const double> gap) {
    trace.push_back(static_cast<double>(gap.size()));
  });
  EXPECT_LT(std::abs(testing::geweke_z(trace)), 3.0);
}

TEST(LocalBound, ExponentialBoundIsRate) {
  const ErlangModel m(3.5, 1, 3.0);
  const auto bound = erlang_local_bound(m, BrokenWindow(1, 2, 3), OrderedConfig{0.5}, {});
  const std::vector<double> gap{1.2, 1.5};
  for (std::size_t cell = 0; cell <= gap.size(); ++cell) EXPECT_EQ(bound.cell_bound(gap, cell), 3.5);
}

TEST(LocalBound, FlankedCellAttainedAtMidpoint) {
  const ErlangModel m(3.0, 2, 3.0);
  const BrokenWindow w(1.0, 2.0, 3.0);
  const OrderedConfig left{0.8}, right{2.3};
  const auto bound = erlang_local_bound(m, w, left, right);
  const std::vector<double> gap{1.2, 1.9};
  const double mid = 0.5 * (1.2 + 1.9);
  EXPECT_LT(rel_err(bound.cell_bound(gap, 1),
                    conditional_papangelou(m, w, left, right, std::vector<double>{1.2, 1.9}, mid)),
            1e-13);
}

TEST(LocalBound, DominatesOnRandomInstances) {
  Rng rng(34);
  std::size_t violations = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto inst = random_instance(rng, 1 + trial % 4);
    const auto bound = erlang_local_bound(inst.model, inst.window, inst.left, inst.right);
    const auto gap = testing::random_points(rng, inst.window.t1(), inst.window.t2(), trial % 4);
    for (std::size_t cell = 0; cell <= gap.size(); ++cell) {
      const double lo = cell == 0 ? inst.window.t1() : gap[cell - 1];
      const double hi = cell == gap.size() ? inst.window.t2() : gap[cell];
      const double g = bound.cell_bound(gap, cell);
      for (int k = 1; k < 200; ++k) {
        const double t = lo + (hi - lo) * k / 200.0;
        const double lambda = conditional_papangelou(inst.model, inst.window, inst.left, inst.right, gap, t);
        if (lambda > g * (1.0 + 1e-12)) ++violations;
      }
    }
  }
  EXPECT_EQ(violations, 0u);
}

TEST(BdProcess, ViolatedBoundIsReported) {
  const ErlangModel m(3.0, 2, 3.0);
  const RenewalGapTarget target(m, BrokenWindow(1, 2, 3), OrderedConfig{0.2}, {});
  const ConstantBound tiny(1e-3);
  BdSchedule schedule;
  schedule.n_samples = 100;
  EXPECT_THROW(run_bd(target, tiny, schedule), BoundViolation);
}

TEST(BdProcess, SeedDeterminism) {
  const ErlangModel m(3.0, 2, 3.0);
  const BrokenWindow w(1, 2, 3);
  const RenewalGapTarget target(m, w, {}, {});
  const auto bound = erlang_local_bound(m, w, {}, {});
  BdSchedule schedule;
  schedule.n_samples = 40;
  schedule.seed = 3;
  EXPECT_EQ(run_bd(target, bound, schedule), run_bd(target, bound, schedule));
}

class Equivalence : public ::testing::TestWithParam<std::size_t> {};

TEST_P(Equivalence, SamplersMatchOracleAndEachOther) {
  const auto cases = testing::equivalence_cases();
  const auto& c = cases[GetParam()];
  const auto r = testing::check_equivalence(c, 10000, 100 + GetParam());
  EXPECT_GT(r.p_mh, 0.01) << c.name;
  EXPECT_GT(r.p_bd, 0.01) << c.name;
  EXPECT_GT(r.p_between, 0.01) << c.name;
}

INSTANTIATE_TEST_SUITE_P(Models, Equivalence, ::testing::Range<std::size_t>(0, 4));

}  // namespace
}  // namespace gapfill
