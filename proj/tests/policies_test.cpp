#include "flowsample/policies.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "flowsample/analysis.hpp"
#include "flowsample/indices.hpp"

namespace flowsample {
namespace {

CounterState counters(std::initializer_list<std::int64_t> values) {
  CounterState s(static_cast<Index>(values.size()));
  Index i = 0;
  for (auto v : values) s(i++) = v;
  return s;
}

template <class Draw>
Eigen::ArrayXd frequencies(Index M, int draws, Draw draw) {
  Eigen::ArrayXd f = Eigen::ArrayXd::Zero(M);
  for (int k = 0; k < draws; ++k) f(draw().index) += 1.0;
  return f / draws;
}

TEST(Uniform, SingleDeviceAndSupport) {
  Rng rng(1);
  for (int k = 0; k < 100; ++k) EXPECT_EQ(choose_uniform(1, rng).index, 0);
  const Eigen::ArrayXd f = frequencies(3, 30000, [&] { return choose_uniform(3, rng); });
  EXPECT_TRUE((f > 0.0).all());
}

TEST(Uniform, Frequencies) {
  Rng rng(2);
  const Eigen::ArrayXd f = frequencies(4, 1'000'000, [&] { return choose_uniform(4, rng); });
  EXPECT_LT((f - 0.25).abs().maxCoeff(), 0.005);
}

TEST(OrderStatistic, Probabilities) {
  const Eigen::ArrayXd q = order_statistic_probabilities(3, 2);
  EXPECT_NEAR(q(0), 1.0 / 9, 1e-15);
  EXPECT_NEAR(q(1), 3.0 / 9, 1e-15);
  EXPECT_NEAR(q(2), 5.0 / 9, 1e-15);
  EXPECT_LT((order_statistic_probabilities(7, 1) - 1.0 / 7).abs().maxCoeff(), 1e-15);
}

// Enumerate all M^G ordered tuples and count which maximum occurs.
TEST(OrderStatistic, MatchesEnumeration) {
  for (Index M = 1; M <= 5; ++M) {
    for (int G = 1; G <= 4; ++G) {
      Eigen::ArrayXd count = Eigen::ArrayXd::Zero(M);
      const int total = static_cast<int>(std::pow(M, G));
      for (int code = 0; code < total; ++code) {
        int c = code;
        Index best = 0;
        for (int g = 0; g < G; ++g) {
          best = std::max<Index>(best, c % M);
          c /= static_cast<int>(M);
        }
        count(best) += 1.0;
      }
      EXPECT_LT((order_statistic_probabilities(M, G) - count / total).abs().maxCoeff(), 1e-14)
          << "M=" << M << " G=" << G;
    }
  }
  const Eigen::ArrayXd q = order_statistic_probabilities(2, 3);
  EXPECT_NEAR(q(0), 1.0 / 8, 1e-15);
  EXPECT_NEAR(q(1), 7.0 / 8, 1e-15);
}

TEST(OrderStatistic, EmpiricalWithinTotalVariation) {
  Rng rng(3);
  for (const Index M : {2, 5, 10}) {
    for (const int G : {1, 2, 4}) {
      const Eigen::ArrayXd f = frequencies(M, 1'000'000, [&] { return choose_order_statistic(M, G, rng); });
      EXPECT_LT(0.5 * (f - order_statistic_probabilities(M, G)).abs().sum(), 0.01);
    }
  }
}

TEST(Weighted, DegenerateAndBalanced) {
  Rng rng(4);
  Eigen::ArrayXd w(3);
  w << 1.0, 0.0, 0.0;
  for (int k = 0; k < 1000; ++k) EXPECT_EQ(choose_weighted(w, rng).index, 0);
  Eigen::ArrayXd half(2);
  half << 0.5, 0.5;
  const Eigen::ArrayXd f = frequencies(2, 1'000'000, [&] { return choose_weighted(half, rng); });
  EXPECT_LT((f - 0.5).abs().maxCoeff(), 0.005);
}

TEST(Weighted, WaterFillingRates) {
  const PathConfig cfg = PathConfig::homogeneous(10, 0.8, 0.1);
  const SamplingPolicy policy(WeightedPolicy{}, cfg);
  const Eigen::ArrayXd w = water_filling(cfg).weights;
  EXPECT_LT((policy.weights() - w).abs().maxCoeff(), 1e-15);
  Rng rng(5);
  const Eigen::ArrayXd f = frequencies(10, 1'000'000, [&] { return policy.choose(zero_state(10), rng); });
  EXPECT_LT((f - w).abs().maxCoeff(), 0.01);
}

TEST(Weighted, RejectsBadWeights) {
  Eigen::ArrayXd w(2);
  w << 0.7, 0.4;
  EXPECT_THROW(check_weights(w), std::invalid_argument);
  w << 1.1, -0.1;
  EXPECT_THROW(check_weights(w), std::invalid_argument);
  const PathConfig cfg = PathConfig::homogeneous(3, 0.8, 0.1);
  EXPECT_THROW(SamplingPolicy(WeightedPolicy{Eigen::ArrayXd::Constant(2, 0.5)}, cfg), std::invalid_argument);
}

TEST(WhittleIndex, Examples) {
  for (const double p : {0.05, 0.3, 0.9}) {
    EXPECT_NEAR(whittle_index(0, 0.7, p), 0.7 * (1.0 - p), 1e-12);
  }
  EXPECT_NEAR(whittle_index(1, 1.0, 0.5), 1.25, 1e-12);
  EXPECT_NEAR(whittle_index(1, 1.0, 1e-12), 3.0, 1e-9);
  EXPECT_EQ(whittle_index(5, 0.8, 1.0), 0.0);
  EXPECT_EQ(whittle_index(5, 0.0, 0.3), 0.0);
}

// Long-double evaluation of the closed form as an independent reference.
long double whittle_reference(std::int64_t n, long double phi, long double p) {
  const long double m = static_cast<long double>(n + 2);
  return phi * (1 - p) / (p * p) * (std::pow(1 - p, m) + m * p - 1);
}

TEST(WhittleIndex, StableAcrossRegimes) {
  for (const double p : {1e-6, 1e-4, 1e-3, 0.01, 0.2, 0.7}) {
    for (std::int64_t n = 0; n <= 60; ++n) {
      const long double ref = whittle_reference(n, 0.9L, static_cast<long double>(p));
      // long double still loses about log10(1/p^2) digits
      const double tol = p < 1e-3 ? 1e-6 : 1e-10;
      EXPECT_NEAR(whittle_index(n, 0.9, p) / static_cast<double>(ref), 1.0, tol) << "n=" << n << " p=" << p;
    }
  }
}

TEST(WhittleIndex, MonotoneInCounter) {
  Rng rng(6);
  std::uniform_real_distribution<double> u(0.01, 0.99);
  for (int k = 0; k < 50; ++k) {
    const double phi = u(rng);
    const double p = u(rng);
    for (std::int64_t n = 0; n < 200; ++n) {
      const double lo = whittle_index(n, phi, p);
      const double hi = whittle_index(n + 1, phi, p);
      EXPECT_GT(hi, lo);
      EXPECT_GE(lo, 0.0);
      // c*(n+1) - c*(n) = phi (1-p)/p [1 - (1-p)^(n+2)]
      const double gap = phi * (1 - p) / p * (1 - std::pow(1 - p, static_cast<double>(n + 2)));
      EXPECT_NEAR(hi - lo, gap, 1e-9 * std::max(1.0, hi));
    }
  }
}

TEST(SecondOrderIndex, Examples) {
  EXPECT_DOUBLE_EQ(second_order_index(0, 1.0), 1.0);
  EXPECT_NEAR(second_order_index(3, 0.8), 8.0, 1e-12);
}

// At p = 1e-4 the relative gap to the limit is about p (n + 3) / 3, so it
// stays below 1e-3 only up to n = 26; beyond that the gap is checked against
// the expansion itself.
TEST(SecondOrderIndex, LimitOfWhittle) {
  const double p = 1e-4;
  for (std::int64_t n = 0; n <= 50; ++n) {
    const double rel = std::abs(whittle_index(n, 1.0, p) / second_order_index(n, 1.0) - 1.0);
    if (n <= 26) EXPECT_LT(rel, 1e-3) << "n=" << n;
    EXPECT_NEAR(rel, p * static_cast<double>(n + 3) / 3.0, 1e-5) << "n=" << n;
  }
}

TEST(FirstOrderIndex, Examples) {
  EXPECT_DOUBLE_EQ(first_order_index(0, 1.0), 1.0);
  EXPECT_DOUBLE_EQ(first_order_index(9, 0.5), 5.0);
  for (std::int64_t n = 0; n <= 10; ++n) {
    const double scaled = whittle_index(n, 0.6, 0.999) / (1 - 0.999);
    EXPECT_NEAR(scaled / first_order_index(n, 0.6), 1.0, 1e-2);
  }
}

TEST(Heuristic, SwitchesOnThreshold) {
  const IndexRule rule{IndexKind::Heuristic, 0.3};
  EXPECT_EQ(device_index(rule, 4, {0.8, 0.1}), second_order_index(4, 0.8));
  EXPECT_EQ(device_index(rule, 4, {0.8, 0.5}), first_order_index(4, 0.8));
}

TEST(ChooseByIndex, Examples) {
  const PathConfig three(geometric_accuracy_profile(3, 0.8), Eigen::ArrayXd::Constant(3, 0.2));
  EXPECT_EQ(choose_by_index(zero_state(3), three, {}).index, 2);

  const PathConfig two(Eigen::ArrayXd::Ones(2), Eigen::ArrayXd::Constant(2, 0.1));
  EXPECT_EQ(choose_by_index(counters({5, 0}), two, {}).index, 0);

  const PathConfig tied(Eigen::ArrayXd::Constant(2, 0.8), Eigen::ArrayXd::Constant(2, 0.1));
  EXPECT_EQ(choose_by_index(counters({2, 2}), tied, {}).index, 0);
}

// Equal index values: larger phi wins, then larger counter, then lower index.
TEST(ChooseByIndex, TieBreakOrder) {
  Eigen::ArrayXd phi(3), p(3);
  phi << 0.5, 1.0, 1.0;
  p << 0.0, 0.0, 0.0;
  const PathConfig cfg(phi, p);
  const IndexRule first{IndexKind::FirstOrder};
  // indices: 0.5*4 = 2, 1*2 = 2, 1*2 = 2
  EXPECT_EQ(choose_by_index(counters({3, 1, 1}), cfg, first).index, 1);
  // phi 0.5 vs 1 at equal index: 0.5*(3+1)=2 vs 1*(1+1)=2 -> device 2 by phi
  EXPECT_EQ(choose_by_index(counters({3, 1, 0}), cfg, first).index, 1);
  Eigen::ArrayXd phi2(2);
  phi2 << 1.0, 0.5;
  const PathConfig cfg2(phi2, Eigen::ArrayXd::Zero(2));
  EXPECT_EQ(choose_by_index(counters({1, 3}), cfg2, first).index, 0);
}

TEST(ChooseByIndex, InvariantUnderCommonScaling) {
  Rng rng(8);
  std::uniform_real_distribution<double> u(0.05, 0.95);
  std::uniform_int_distribution<std::int64_t> n(0, 30);
  for (int k = 0; k < 300; ++k) {
    const Index M = 2 + k % 6;
    Eigen::ArrayXd phi(M), p(M);
    CounterState s(M);
    for (Index i = 0; i < M; ++i) {
      phi(i) = u(rng);
      p(i) = u(rng);
      s(i) = n(rng);
    }
    const double scale = 0.1 + 0.9 * u(rng);
    const PathConfig base(phi, p);
    const PathConfig scaled(phi * scale, p);
    for (const auto kind : {IndexKind::Whittle, IndexKind::SecondOrder, IndexKind::FirstOrder, IndexKind::Heuristic}) {
      EXPECT_EQ(choose_by_index(s, base, {kind}).index, choose_by_index(s, scaled, {kind}).index);
    }
  }
}

TEST(ChooseByIndex, SecondOrderAgreesWithWhittleAsPVanishes) {
  Rng rng(9);
  std::uniform_int_distribution<std::int64_t> n(0, 12);
  const PathConfig whittle_cfg(geometric_accuracy_profile(5, 0.8), Eigen::ArrayXd::Constant(5, 1e-8));
  for (int k = 0; k < 2000; ++k) {
    CounterState s(5);
    for (Index i = 0; i < 5; ++i) s(i) = n(rng);
    // Exact ties of the limit index (e.g. 0.8 * 90 = 72) are decided by O(p) terms.
    std::vector<double> limit(5);
    for (Index i = 0; i < 5; ++i) limit[static_cast<std::size_t>(i)] = second_order_index(s(i), whittle_cfg.phi()(i));
    std::sort(limit.rbegin(), limit.rend());
    if (limit[0] - limit[1] <= 1e-9 * limit[0]) continue;
    EXPECT_EQ(choose_by_index(s, whittle_cfg, {IndexKind::Whittle}).index,
              choose_by_index(s, whittle_cfg, {IndexKind::SecondOrder}).index);
  }
}

TEST(SamplingPolicy, IndexTableMatchesDirectEvaluation) {
  const PathConfig cfg(geometric_accuracy_profile(6, 0.7), Eigen::ArrayXd::LinSpaced(6, 0.05, 0.6));
  const SamplingPolicy policy(WhittlePolicy{}, cfg);
  Rng rng(10);
  std::uniform_int_distribution<std::int64_t> n(0, 400);
  for (int k = 0; k < 3000; ++k) {
    CounterState s(6);
    for (Index i = 0; i < 6; ++i) s(i) = n(rng);
    EXPECT_EQ(policy.choose(s, rng).index, choose_by_index(s, cfg, {IndexKind::Whittle}).index);
  }
}

TEST(PolicyName, CliNames) {
  EXPECT_EQ(policy_name(UniformPolicy{}), "uniform");
  EXPECT_EQ(policy_name(OrderStatisticPolicy{}), "order-statistic");
  EXPECT_EQ(policy_name(WeightedPolicy{}), "weighted");
  EXPECT_EQ(policy_name(WhittlePolicy{}), "whittle");
  EXPECT_EQ(policy_name(SecondOrderPolicy{}), "second-order");
  EXPECT_EQ(policy_name(FirstOrderPolicy{}), "first-order");
  EXPECT_EQ(policy_name(HeuristicPolicy{}), "heuristic");
  EXPECT_EQ(policy_name(TablePolicy{}), "optimal");
}

}  // namespace
}  // namespace flowsample
