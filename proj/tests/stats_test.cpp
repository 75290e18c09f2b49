#include "cas/stats.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "support/oracles.hpp"

namespace cas::stats {
namespace {

TEST(MidRanks, NoTies) {
  std::vector<double> v = {3.0, 1.0, 2.0};
  auto r = mid_ranks(v);
  EXPECT_EQ(r, (std::vector<double>{3.0, 1.0, 2.0}));
}

TEST(MidRanks, TiesGetAverageRank) {
  std::vector<double> v = {1.0, 2.0, 2.0, 5.0};
  auto r = mid_ranks(v);
  EXPECT_EQ(r, (std::vector<double>{1.0, 2.5, 2.5, 4.0}));
}

TEST(Friedman, IdenticalValuesWithinBlocks) {
  BlockedSample s;
  s.values = {{1.0, 1.0, 1.0}, {4.0, 4.0, 4.0}, {2.0, 2.0, 2.0}};
  auto r = friedman(s);
  EXPECT_DOUBLE_EQ(r.statistic, 0.0);
  EXPECT_DOUBLE_EQ(r.p_value, 1.0);
  EXPECT_EQ(r.df, 2);
}

TEST(Friedman, SingleBlockIsDegenerate) {
  BlockedSample s;
  s.values = {{1.0, 2.0, 3.0}};
  EXPECT_THROW(friedman(s), DegenerateSample);
}

TEST(Friedman, SingleTreatmentIsDegenerate) {
  BlockedSample s;
  s.values = {{1.0}, {2.0}};
  EXPECT_THROW(friedman(s), DegenerateSample);
}

TEST(Friedman, PlantedEffectMatchesRankFormulaOracle) {
  BlockedSample s;
  s.values = {
      {-1.423825, 2.063728, 0.729338, 2.140827},
      {-0.075343, 0.059115, 0.232207, 3.048893},
      {0.361058, -1.152863, 3.947410, 3.368497},
      {-0.759387, 1.702198, 1.133047, 2.339310},
      {0.788844, -0.456668, 2.175858, 3.798979},
      {1.322298, 0.500301, 2.502919, 0.778417},
      {-0.158189, 1.249484, 0.256399, 2.318312},
      {1.724740, 3.418159, 2.377361, 3.228633},
      {-0.958988, -0.409388, 0.187708, 2.941547},
      {0.751939, 0.141240, 0.371325, 2.657558},
  };
  auto r = friedman(s);
  EXPECT_NEAR(r.statistic, cas::testing::friedman_rank_formula(s.values), 1e-9);
  // independently computed reference: chi2 = 13.32, p = 0.0039933
  EXPECT_NEAR(r.statistic, 13.32, 1e-9);
  EXPECT_NEAR(r.p_value, 0.003993295308193393, 1e-12);
  EXPECT_EQ(r.df, 3);
}

TEST(Friedman, TieCorrectionMatchesOracle) {
  BlockedSample s;
  s.values = {
      {3, 2, 2, 3}, {2, 3, 3, 0}, {0, 1, 1, 3}, {3, 0, 1, 3}, {0, 3, 0, 1},
      {3, 1, 1, 1}, {2, 1, 3, 1}, {1, 2, 2, 2}, {2, 3, 3, 3}, {2, 2, 1, 3},
  };
  auto r = friedman(s);
  EXPECT_NEAR(r.statistic, cas::testing::friedman_rank_formula(s.values), 1e-9);
  // independently computed reference: chi2 = 1.3125, p = 0.72617
  EXPECT_NEAR(r.statistic, 1.3125, 1e-9);
  EXPECT_NEAR(r.p_value, 0.7261669894627791, 1e-12);
}

TEST(Friedman, InvariantUnderMonotoneTransform) {
  std::mt19937 rng(5);
  std::normal_distribution<double> d(0.0, 1.0);
  for (int rep = 0; rep < 50; ++rep) {
    BlockedSample s;
    s.values.assign(6, std::vector<double>(4));
    for (auto& row : s.values)
      for (auto& v : row) v = d(rng);
    BlockedSample t = s;
    for (auto& row : t.values)
      for (auto& v : row) v = std::exp(2.0 * v) + 7.0;  // strictly increasing
    EXPECT_NEAR(friedman(s).statistic, friedman(t).statistic, 1e-9);
  }
}

TEST(Wilcoxon, AllZeroDifferencesThrows) {
  std::vector<double> x = {1.0, 2.0, 3.0};
  EXPECT_THROW(wilcoxon_signed_rank(x, x), AllZeroDifferences);
}

TEST(Wilcoxon, ExactSixPositiveDifferences) {
  std::vector<double> x = {1, 2, 3, 4, 5, 6};
  std::vector<double> y = {0, 0, 0, 0, 0, 0};
  auto r = wilcoxon_signed_rank(x, y);
  EXPECT_DOUBLE_EQ(r.statistic, 0.0);           // W- = 0
  EXPECT_DOUBLE_EQ(r.p_value, 2.0 / 64.0);      // = 0.03125 exactly
  EXPECT_EQ(r.method, "wilcoxon signed-rank (exact)");
}

TEST(Wilcoxon, ExactMixedSignsMatchesReference) {
  // independently computed: statistic 3, p = 0.0390625
  std::vector<double> x = {1.5, -0.5, 2, 3, -1, 4, 5, 6};
  std::vector<double> y(8, 0.0);
  auto r = wilcoxon_signed_rank(x, y);
  EXPECT_DOUBLE_EQ(r.statistic, 3.0);
  EXPECT_DOUBLE_EQ(r.p_value, 0.0390625);
}

TEST(Wilcoxon, ZeroDifferencesDropped) {
  std::vector<double> x = {5, 5, 1, 2, 3, 4, 5, 6};
  std::vector<double> y = {5, 5, 0, 0, 0, 0, 0, 0};
  auto r = wilcoxon_signed_rank(x, y);
  EXPECT_DOUBLE_EQ(r.p_value, 0.03125);  // same as the n=6 case
}

TEST(Wilcoxon, ShiftInvariance) {
  std::mt19937 rng(17);
  std::normal_distribution<double> d(0.0, 2.0);
  for (int rep = 0; rep < 30; ++rep) {
    std::vector<double> x(9), y(9), xs(9), ys(9);
    for (int i = 0; i < 9; ++i) {
      x[i] = d(rng);
      y[i] = d(rng);
      xs[i] = x[i] + 100.25;
      ys[i] = y[i] + 100.25;
    }
    auto a = wilcoxon_signed_rank(x, y);
    auto b = wilcoxon_signed_rank(xs, ys);
    EXPECT_DOUBLE_EQ(a.p_value, b.p_value);
    EXPECT_DOUBLE_EQ(a.statistic, b.statistic);
  }
}

TEST(Wilcoxon, SignSymmetricSampleHasLargeP) {
  std::vector<double> x = {-3, -2, -1, 1, 2, 3};
  auto r = wilcoxon_one_sample(x, 0.0);
  EXPECT_GE(r.p_value, 0.5);
}

TEST(Wilcoxon, OneSampleAllAboveReferencePoint) {
  std::vector<double> x = {0.6, 0.7, 0.55, 0.9, 0.51, 0.8};
  auto r = wilcoxon_one_sample(x, 0.5);
  EXPECT_DOUBLE_EQ(r.p_value, 0.03125);  // same extreme tail as the n=6 paired case
}

TEST(Wilcoxon, ExactAndApproxAgreeAtBoundary) {
  // At n = 12 (the exact/approx switchover) the normal approximation with
  // continuity correction sits within 0.02 of the exact enumeration.
  std::mt19937 rng(31);
  std::normal_distribution<double> noise(0.0, 1.0);
  for (int rep = 0; rep < 30; ++rep) {
    std::vector<double> x(12), y(12);
    for (int i = 0; i < 12; ++i) {
      x[i] = noise(rng) + 0.4;
      y[i] = noise(rng);
    }
    auto exact = wilcoxon_signed_rank(x, y);  // n=12 picks the exact path
    ASSERT_EQ(exact.method, "wilcoxon signed-rank (exact)");
    auto approx = wilcoxon_signed_rank(x, y, WilcoxonMode::Approximate);
    EXPECT_NEAR(exact.p_value, approx.p_value, 0.02);
  }
}

TEST(Wilcoxon, AutoSwitchesToApproximationAboveTwelve) {
  std::mt19937 rng(41);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<double> x(13), y(13);
  for (int i = 0; i < 13; ++i) {
    x[i] = noise(rng) + 1.0;
    y[i] = noise(rng);
  }
  EXPECT_EQ(wilcoxon_signed_rank(x, y).method, "wilcoxon signed-rank (normal approximation)");
}

TEST(Wilcoxon, EnumerationDistributionSumsToOne) {
  std::vector<double> ranks = {1.0, 2.5, 2.5, 4.0, 5.0};
  auto dist = exact_signed_rank_distribution(ranks);
  std::uint64_t total = 0;
  for (const auto& [w, c] : dist) total += c;
  EXPECT_EQ(total, 32u);
  // symmetric around the mean n(n+1)/4
  double mean = 0.0;
  std::uint64_t weight = 0;
  for (const auto& [w, c] : dist) {
    mean += w * static_cast<double>(c);
    weight += c;
  }
  EXPECT_DOUBLE_EQ(mean / static_cast<double>(weight), 5.0 * 6.0 / 4.0);
}

TEST(Wilcoxon, OneSampleMatchesPairedAgainstConstant) {
  std::vector<double> x = {0.2, 0.5, 0.9, 1.4, -0.3, 0.7, 1.1};
  std::vector<double> mu(x.size(), 0.25);
  auto a = wilcoxon_one_sample(x, 0.25);
  auto b = wilcoxon_signed_rank(x, mu);
  EXPECT_DOUBLE_EQ(a.p_value, b.p_value);
  EXPECT_DOUBLE_EQ(a.statistic, b.statistic);
}

TEST(Wilcoxon, OneSampleAllEqualThrows) {
  std::vector<double> x = {0.5, 0.5, 0.5};
  EXPECT_THROW(wilcoxon_one_sample(x, 0.5), AllZeroDifferences);
}

TEST(Bonferroni, SixComparisonCorrectionExact) {
  EXPECT_EQ(bonferroni(0.004, 6), 0.024);
  EXPECT_EQ(bonferroni(0.5, 6), 1.0);
  EXPECT_EQ(bonferroni(0.123, 1), 0.123);
}

TEST(Bonferroni, MonotoneAndBounded) {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 500; ++i) {
    double p1 = u(rng), p2 = u(rng);
    if (p1 > p2) std::swap(p1, p2);
    int m = 1 + static_cast<int>(rng() % 10);
    EXPECT_LE(bonferroni(p1, m), bonferroni(p2, m));
    EXPECT_LE(bonferroni(p1, m), bonferroni(p1, m + 1));
    EXPECT_GE(bonferroni(p1, m), 0.0);
    EXPECT_LE(bonferroni(p1, m), 1.0);
  }
}

TEST(Bonferroni, DomainChecks) {
  EXPECT_THROW(bonferroni(-0.1, 6), Error);
  EXPECT_THROW(bonferroni(1.1, 6), Error);
  EXPECT_THROW(bonferroni(0.5, 0), Error);
}

TEST(ChiSquaredSf, ReferenceValues) {
  // cross-checked against an independent implementation
  EXPECT_NEAR(chi_squared_sf(6.75, 3), 0.080308, 1e-6);
  EXPECT_NEAR(chi_squared_sf(7.93, 3), 0.047481, 1e-6);
  EXPECT_NEAR(chi_squared_sf(21.8, 3), 7.2e-5, 1e-6);
  // df=2 has the closed form exp(-x/2)
  for (double x : {0.5, 1.0, 3.7, 10.0})
    EXPECT_NEAR(chi_squared_sf(x, 2), std::exp(-x / 2.0), 1e-12);
  EXPECT_DOUBLE_EQ(chi_squared_sf(0.0, 3), 1.0);
}

TEST(NormalSf, ReferenceValues) {
  EXPECT_DOUBLE_EQ(normal_sf(0.0), 0.5);
  EXPECT_NEAR(normal_sf(1.959963984540054), 0.025, 1e-12);
  EXPECT_NEAR(normal_sf(-1.0) + normal_sf(1.0), 1.0, 1e-15);
}

}  // namespace
}  // namespace cas::stats
