#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "aggpred/random.hpp"
#include "aggpred/roc.hpp"

using namespace aggpred;

namespace {

// Pair counting straight from the definition.
double brute_auc(const std::vector<double>& s, const std::vector<std::uint8_t>& y) {
  double wins = 0, pairs = 0;
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = 0; j < s.size(); ++j)
      if (y[i] && !y[j]) {
        pairs += 1;
        wins += s[i] > s[j] ? 1.0 : s[i] == s[j] ? 0.5 : 0.0;
      }
  return wins / pairs;
}

RocCurve curve_of(std::vector<RocPoint> pts) {
  RocCurve c;
  c.points = std::move(pts);
  return c;
}

}  // namespace

TEST(Auc, Examples) {
  EXPECT_EQ(auc(std::vector<double>{0.9, 0.8, 0.2, 0.1}, std::vector<std::uint8_t>{1, 1, 0, 0}), 1.0);
  EXPECT_EQ(auc(std::vector<double>{0.3, 0.3, 0.3, 0.3}, std::vector<std::uint8_t>{1, 0, 1, 0}), 0.5);
  EXPECT_EQ(auc(std::vector<double>{0.9, 0.4, 0.6, 0.1}, std::vector<std::uint8_t>{1, 0, 1, 0}), 1.0);
  EXPECT_EQ(auc(std::vector<double>{0.9, 0.4, 0.6, 0.1}, std::vector<std::uint8_t>{1, 0, 0, 1}), 0.5);
  EXPECT_EQ(auc(std::vector<double>{0.1, 0.2}, std::vector<std::uint8_t>{1, 0}), 0.0);
}

TEST(Auc, SingleClassIsUndefined) {
  EXPECT_THROW(auc(std::vector<double>{0.1, 0.2}, std::vector<std::uint8_t>{1, 1}), UndefinedAucError);
  EXPECT_THROW(roc_curve(std::vector<double>{0.1, 0.2}, std::vector<std::uint8_t>{0, 0}), UndefinedAucError);
  EXPECT_THROW(auc(std::vector<double>{0.1}, std::vector<std::uint8_t>{1, 0}), DataError);
}

TEST(Auc, MatchesPairCountingAndTrapezoid) {
  Rng rng(5);
  for (int trial = 0; trial < 400; ++trial) {
    const std::size_t n = 2 + rng.below(199);
    std::vector<double> s(n);
    std::vector<std::uint8_t> y(n);
    // Coarse scores give plenty of ties.
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = rng.bernoulli(0.3) ? 1 : 0;
      s[i] = std::round((y[i] * 0.7 + rng.normal()) * 4.0) / 4.0;
    }
    y[0] = 1;
    y[1] = 0;
    const double a = auc(s, y);
    EXPECT_NEAR(a, brute_auc(s, y), 1e-12);
    EXPECT_NEAR(trapezoid_area(roc_curve(s, y)), a, 1e-12);
    EXPECT_GE(a, 0.0);
    EXPECT_LE(a, 1.0);
  }
}

TEST(RocCurve, ShapeInvariants) {
  Rng rng(6);
  std::vector<double> s(50);
  std::vector<std::uint8_t> y(50);
  for (std::size_t i = 0; i < 50; ++i) {
    y[i] = i % 3 == 0;
    s[i] = rng.normal() + y[i];
  }
  const auto c = roc_curve(s, y);
  EXPECT_EQ(c.points.front(), (RocPoint{0, 0}));
  EXPECT_EQ(c.points.back(), (RocPoint{1, 1}));
  EXPECT_EQ(c.samples, 50u);
  EXPECT_EQ(c.positives, 17u);
  for (std::size_t i = 1; i < c.points.size(); ++i) {
    EXPECT_GE(c.points[i].fpr, c.points[i - 1].fpr);
    EXPECT_GE(c.points[i].tpr, c.points[i - 1].tpr);
  }
}

TEST(RocCurve, PerfectAndTied) {
  const auto perfect = roc_curve(std::vector<double>{0.9, 0.8, 0.2, 0.1}, std::vector<std::uint8_t>{1, 1, 0, 0});
  EXPECT_NE(std::find(perfect.points.begin(), perfect.points.end(), RocPoint{0, 1}), perfect.points.end());
  const auto tied = roc_curve(std::vector<double>{0.5, 0.5, 0.5}, std::vector<std::uint8_t>{1, 0, 0});
  ASSERT_EQ(tied.points.size(), 2u);
  EXPECT_EQ(trapezoid_area(tied), 0.5);
}

TEST(TprAt, InterpolatesAndTakesTopOfVerticalRuns) {
  const auto c = curve_of({{0, 0}, {0, 0.5}, {0.5, 0.5}, {1, 1}});
  EXPECT_EQ(tpr_at(c, 0.0), 0.5);
  EXPECT_EQ(tpr_at(c, 0.25), 0.5);
  EXPECT_EQ(tpr_at(c, 0.75), 0.75);
  EXPECT_EQ(tpr_at(c, 1.0), 1.0);
}

TEST(Band, NormalQuantile) {
  EXPECT_NEAR(normal_quantile_two_sided(0.90), 1.6448536269514722, 1e-9);
  EXPECT_NEAR(normal_quantile_two_sided(0.95), 1.959963984540054, 1e-9);
  EXPECT_THROW(normal_quantile_two_sided(1.0), ConfigError);
}

TEST(Band, IdenticalCurvesGiveZeroWidth) {
  const auto c = curve_of({{0, 0}, {0.2, 0.6}, {1, 1}});
  const std::vector<RocCurve> curves{c, c, c};
  const auto b = roc_band(curves);
  ASSERT_EQ(b.fpr.size(), 101u);
  for (std::size_t g = 0; g < b.fpr.size(); ++g) {
    EXPECT_EQ(b.lower[g], b.mean[g]);
    EXPECT_EQ(b.upper[g], b.mean[g]);
    EXPECT_DOUBLE_EQ(b.mean[g], tpr_at(c, b.fpr[g]));
  }
  const std::vector<RocCurve> single{c};
  EXPECT_EQ(roc_band(single).upper, roc_band(single).mean);
  EXPECT_THROW(roc_band(std::vector<RocCurve>{}), DataError);
}

TEST(Band, SymmetricCurvesAverageToDiagonal) {
  // Reflections of each other through y = x in the vertical direction.
  const auto lo = curve_of({{0, 0}, {0.2, 0}, {0.5, 0.2}, {1, 1}});
  const auto hi = curve_of({{0, 0}, {0.2, 0.4}, {0.5, 0.8}, {1, 1}});
  const std::vector<RocCurve> pair{lo, hi};
  const auto b = roc_band(pair);
  for (std::size_t g = 0; g < b.fpr.size(); ++g) EXPECT_NEAR(b.mean[g], b.fpr[g], 1e-12) << b.fpr[g];
}

TEST(Band, ContainsMeanAndMatchesFormula) {
  Rng rng(7);
  std::vector<RocCurve> curves;
  for (int r = 0; r < 5; ++r) {
    std::vector<double> s(80);
    std::vector<std::uint8_t> y(80);
    for (std::size_t i = 0; i < 80; ++i) {
      y[i] = i % 4 == 0;
      s[i] = rng.normal() + 1.2 * y[i];
    }
    curves.push_back(roc_curve(s, y));
  }
  const auto b = roc_band(curves, 0.9);
  for (std::size_t g = 0; g < b.fpr.size(); ++g) {
    EXPECT_LE(b.lower[g], b.mean[g]);
    EXPECT_GE(b.upper[g], b.mean[g]);
    EXPECT_GE(b.lower[g], 0.0);
    EXPECT_LE(b.upper[g], 1.0);
    std::vector<double> ys;
    double m = 0;
    for (const auto& c : curves) {
      ys.push_back(tpr_at(c, b.fpr[g]));
      m += ys.back();
    }
    m /= 5;
    double ss = 0;
    for (double y : ys) ss += (y - m) * (y - m);
    const double sd = std::sqrt(ss / 4);
    EXPECT_NEAR(b.mean[g], m, 1e-12);
    EXPECT_NEAR(b.upper[g], std::min(1.0, m + 1.6448536269514722 * sd), 1e-9);
    EXPECT_NEAR(b.lower[g], std::max(0.0, m - 1.6448536269514722 * sd), 1e-9);
  }
}
