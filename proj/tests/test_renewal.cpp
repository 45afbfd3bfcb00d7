#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "gapfill/renewal.hpp"
#include "test_util.hpp"

namespace gapfill {
namespace {

using testing::random_config;
using testing::log_err;
using testing::rel_err;

TEST(Erlang, ReferenceValues) {
  const ErlangModel m(2.0, 2, 10.0);
  EXPECT_LT(rel_err(erlang_pdf(m, 1.0), 0.5413411329464508), 1e-14);
  EXPECT_LT(rel_err(erlang_survival(m, 1.0), 0.4060058497098381), 1e-14);
  EXPECT_NEAR(erlang_cdf(m, 1.0) + erlang_survival(m, 1.0), 1.0, 1e-15);
  EXPECT_DOUBLE_EQ(erlang_survival(m, 0.0), 1.0);
  EXPECT_THROW(erlang_pdf(m, -1e-9), DomainError);
}

TEST(Erlang, LogSurvivalIsStableFarInTheTail) {
  const ErlangModel m(40.0, 3, 10.0);
  const double x = 30.0;
  const double expected = -40.0 * x + std::log(1.0 + 40.0 * x + 0.5 * 1600.0 * x * x);
  EXPECT_LT(log_err(erlang_log_survival(m, x), expected), 1e-13);
  EXPECT_EQ(erlang_survival(m, x), 0.0);
}

TEST(Erlang, RejectsBadParameters) {
  EXPECT_THROW(ErlangModel(0.0, 2, 1.0), DomainError);
  EXPECT_THROW(ErlangModel(1.0, 0, 1.0), DomainError);
  EXPECT_THROW(ErlangModel(1.0, 1, -1.0), DomainError);
}

TEST(RenewalDensity, EmptyPatternIsSurvivalOfTheHorizon) {
  const ErlangModel m(3.0, 2, 2.0);
  EXPECT_LT(log_err(log_density(m, {}), 2.0 + erlang_log_survival(m, 2.0)), 1e-14);
}

TEST(RenewalDensity, ExponentialCaseIsPoisson) {
  const ErlangModel m(1.7, 1, 3.0);
  const OrderedConfig c{0.2, 1.1, 2.5};
  EXPECT_LT(log_err(log_density(m, c), 3.0 * std::log(1.7) + 3.0 - 1.7 * 3.0), 1e-14);
}

// f(x) = f(empty) * prod of Papangelou intensities along any insertion order.
TEST(RenewalDensity, FactorisesThroughPapangelou) {
  Rng rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    const int shape = 1 + trial % 3;
    const ErlangModel m(uniform(rng, 0.5, 5.0), shape, uniform(rng, 1.0, 4.0));
    const OrderedConfig target = random_config(rng, 0.0, m.horizon(), 1 + trial % 6);
    std::vector<double> order = target.times();
    std::shuffle(order.begin(), order.end(), rng);
    OrderedConfig current;
    double acc = log_density(m, current);
    for (double t : order) {
      acc += std::log(papangelou(m, current, t));
      current = current.with_point(t);
    }
    EXPECT_LT(log_err(acc, log_density(m, target)), 1e-10);
  }
}

TEST(RenewalDensity, PapangelouIsDensityRatio) {
  Rng rng(2);
  for (int trial = 0; trial < 300; ++trial) {
    const ErlangModel m(uniform(rng, 0.5, 5.0), 1 + trial % 4, uniform(rng, 1.0, 4.0));
    const OrderedConfig c = random_config(rng, 0.0, m.horizon(), trial % 7);
    const double t = uniform(rng, 0.0, m.horizon());
    const double ratio = std::exp(log_density(m, c.with_point(t)) - log_density(m, c));
    EXPECT_LT(rel_err(papangelou(m, c, t), ratio), 1e-10);
  }
}

TEST(RenewalDensity, PapangelouDependsOnlyOnNeighbours) {
  const ErlangModel m(2.0, 2, 5.0);
  const OrderedConfig a{0.5, 1.0, 2.0, 3.0, 4.5};
  const OrderedConfig b{0.7, 1.0, 2.0, 3.9};
  EXPECT_DOUBLE_EQ(papangelou(m, a, 1.4), papangelou(m, b, 1.4));
}

TEST(RenewalDensity, InsertionOutsideCarrierRejected) {
  const ErlangModel m(2.0, 2, 5.0);
  EXPECT_THROW(papangelou(m, {}, 5.5), DomainError);
  EXPECT_THROW(papangelou(m, OrderedConfig{1.0}, 1.0), DomainError);
  EXPECT_THROW(log_density(m, OrderedConfig{1.0, 6.0}), DomainError);
}

TEST(ConditionalPapangelou, MatchesFullDensityRatio) {
  Rng rng(3);
  for (int trial = 0; trial < 300; ++trial) {
    const ErlangModel m(uniform(rng, 0.5, 5.0), 1 + trial % 3, 4.0);
    const double t1 = uniform(rng, 0.5, 2.0);
    const double t2 = uniform(rng, t1 + 0.1, 3.5);
    const BrokenWindow w(t1, t2, 4.0);
    const auto left = random_config(rng, 0.0, t1, trial % 3);
    const auto right = random_config(rng, t2, 4.0, (trial / 3) % 3);
    const auto gap = random_config(rng, t1, t2, trial % 4);
    const double t = uniform(rng, t1, t2);
    const auto full = concat(left, gap.view(), right);
    const double ratio = std::exp(log_density(m, full.with_point(t)) - log_density(m, full));
    EXPECT_LT(rel_err(conditional_papangelou(m, w, left, right, gap.view(), t), ratio), 1e-10);
  }
}

TEST(ConditionalPapangelou, SurvivalFormWithoutSuccessor) {
  const ErlangModel m(2.0, 2, 3.0);
  const double p = 0.5, t = 1.5;
  const double expected = erlang_pdf(m, t - p) * erlang_survival(m, 3.0 - t) / erlang_survival(m, 3.0 - p);
  EXPECT_LT(rel_err(flanked_intensity(m, p, nullptr, t), expected), 1e-13);
  const double q = 2.5;
  const double flanked = erlang_pdf(m, t - p) * erlang_pdf(m, q - t) / erlang_pdf(m, q - p);
  EXPECT_LT(rel_err(flanked_intensity(m, p, &q, t), flanked), 1e-13);
}

TEST(ConditionalPapangelou, ExponentialIsConstant) {
  const ErlangModel m(3.25, 1, 3.0);
  const double q = 2.0;
  EXPECT_EQ(flanked_intensity(m, 0.1, &q, 1.0), 3.25);
  EXPECT_EQ(flanked_intensity(m, 0.1, nullptr, 2.9), 3.25);
}

TEST(SufficientStats, LikelihoodRatioIsLogDensityDifference) {
  Rng rng(4);
  for (int trial = 0; trial < 300; ++trial) {
    const int shape = 1 + trial % 4;
    const double T = uniform(rng, 1.0, 4.0);
    const ErlangModel ref(uniform(rng, 1.0, 60.0), shape, T);
    const ErlangModel alt = ref.with_rate(uniform(rng, 1.0, 60.0));
    const auto c = random_config(rng, 0.0, T, trial % 40);
    const double direct = log_density(alt, c) - log_density(ref, c);
    EXPECT_LT(log_err(log_likelihood_ratio(alt, ref, c), direct), 1e-10);
    const auto stats = sufficient_stats(c, T);
    EXPECT_EQ(stats.n, c.size());
    EXPECT_LT(log_err(log_likelihood_ratio(alt.rate(), ref.rate(), shape, T, stats), direct), 1e-10);
  }
}

TEST(SufficientStats, EmptyPatternRecurrenceIsHorizon) {
  const auto s = sufficient_stats({}, 2.5);
  EXPECT_EQ(s.n, 0u);
  EXPECT_DOUBLE_EQ(s.backward_recurrence, 2.5);
}

TEST(Simulate, FirstArrivalIsErlang) {
  const ErlangModel m(3.0, 2, 50.0);
  Rng rng(5);
  std::vector<double> first;
  for (int i = 0; i < 4000; ++i) {
    const auto c = simulate(m, rng);
    ASSERT_FALSE(c.empty());
    first.push_back(c.front());
  }
  const double p = testing::ks_pvalue(first, [&](double x) { return erlang_cdf(m, x); });
  EXPECT_GT(p, 1e-3);
}

TEST(Simulate, CountMeanMatchesRenewalTheory) {
  const ErlangModel m(40.0, 2, 4.0);
  Rng rng(6);
  double total = 0.0;
  const int reps = 4000;
  for (int i = 0; i < reps; ++i) total += static_cast<double>(simulate(m, rng).size());
  // E N(T) = rate T / 2 - (1 - exp(-2 rate T)) / 4 for Erlang-2.
  const double expected = 40.0 * 4.0 / 2.0 - (1.0 - std::exp(-2.0 * 160.0)) / 4.0;
  EXPECT_NEAR(total / reps, expected, 0.5);
}

TEST(Simulate, SeedDeterminism) {
  const ErlangModel m(4.0, 2, 10.0);
  EXPECT_EQ(simulate(m, 42), simulate(m, 42));
  EXPECT_NE(simulate(m, 42), simulate(m, 43));
}

}  // namespace
}  // namespace gapfill
