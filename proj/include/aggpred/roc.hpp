#pragma once

// ROC curves, AUC and vertically averaged confidence bands.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "aggpred/error.hpp"

namespace aggpred {

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
  friend bool operator==(const RocPoint&, const RocPoint&) = default;
};

struct RocCurve {
  std::vector<RocPoint> points;  // from (0, 0) to (1, 1), both coordinates non-decreasing
  std::size_t samples = 0;
  std::size_t positives = 0;
  friend bool operator==(const RocCurve&, const RocCurve&) = default;
};

namespace detail {

struct ClassCounts {
  std::size_t pos = 0, neg = 0;
};

inline ClassCounts count_classes(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  if (scores.size() != labels.size()) throw DataError("scores and labels differ in length");
  ClassCounts c;
  for (auto l : labels) (l ? c.pos : c.neg)++;
  if (c.pos == 0 || c.neg == 0) throw UndefinedAucError("AUC undefined: labels contain a single class");
  return c;
}

// Indices sorted by descending score (index order within ties).
inline std::vector<std::size_t> descending_order(std::span<const double> scores) {
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return idx;
}

}  // namespace detail

// Mann-Whitney statistic: P(score_pos > score_neg) + 0.5 P(tie).
inline double auc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  const auto counts = detail::count_classes(scores, labels);
  const auto order = detail::descending_order(scores);
  // Walking from the top, every positive beats the negatives not yet seen.
  double wins = 0.0;
  double neg_seen = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    double pos = 0.0, neg = 0.0;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      (labels[order[j]] ? pos : neg) += 1.0;
      ++j;
    }
    wins += pos * (static_cast<double>(counts.neg) - neg_seen - neg) + 0.5 * pos * neg;
    neg_seen += neg;
    i = j;
  }
  return wins / (static_cast<double>(counts.pos) * static_cast<double>(counts.neg));
}

// Threshold sweep over the unique scores, anchored at (0,0) and (1,1).
inline RocCurve roc_curve(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  const auto counts = detail::count_classes(scores, labels);
  const auto order = detail::descending_order(scores);
  RocCurve c;
  c.samples = scores.size();
  c.positives = counts.pos;
  c.points.push_back({0.0, 0.0});
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      (labels[order[j]] ? tp : fp)++;
      ++j;
    }
    c.points.push_back({static_cast<double>(fp) / static_cast<double>(counts.neg),
                        static_cast<double>(tp) / static_cast<double>(counts.pos)});
    i = j;
  }
  return c;
}

inline double trapezoid_area(const RocCurve& c) {
  double a = 0.0;
  for (std::size_t i = 1; i < c.points.size(); ++i)
    a += (c.points[i].fpr - c.points[i - 1].fpr) * (c.points[i].tpr + c.points[i - 1].tpr) * 0.5;
  return a;
}

// TPR at `fpr` by linear interpolation; on a vertical run the top point wins.
inline double tpr_at(const RocCurve& c, double fpr) {
  const auto& p = c.points;
  const auto it = std::upper_bound(p.begin(), p.end(), fpr, [](double x, const RocPoint& q) { return x < q.fpr; });
  if (it == p.begin()) return p.front().tpr;
  if (it == p.end()) return p.back().tpr;
  const RocPoint& a = *(it - 1);
  const RocPoint& b = *it;
  return a.tpr + (b.tpr - a.tpr) * (fpr - a.fpr) / (b.fpr - a.fpr);
}

// Two-sided standard-normal quantile for a central coverage `level`.
inline double normal_quantile_two_sided(double level) {
  if (!(level > 0.0 && level < 1.0)) throw ConfigError("band level must be in (0, 1)");
  const double target = 0.5 * (1.0 + level);
  double lo = 0.0, hi = 10.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (0.5 * std::erfc(-mid / std::sqrt(2.0)) < target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

struct RocBand {
  std::vector<double> fpr;
  std::vector<double> mean;
  std::vector<double> lower;
  std::vector<double> upper;
  double level = 0.9;
  friend bool operator==(const RocBand&, const RocBand&) = default;
};

// Vertical averaging on an FPR grid of step 0.01: mean TPR +/- z * sample SD
// across curves, clipped to [0, 1]. A single curve gives a zero-width band.
inline RocBand roc_band(std::span<const RocCurve> curves, double level = 0.90) {
  if (curves.empty()) throw DataError("roc_band needs at least one curve");
  const double z = normal_quantile_two_sided(level);
  RocBand band;
  band.level = level;
  constexpr int kSteps = 100;
  for (int g = 0; g <= kSteps; ++g) {
    const double x = static_cast<double>(g) / kSteps;
    double sum = 0.0;
    std::vector<double> ys;
    for (const auto& c : curves) ys.push_back(tpr_at(c, x));
    for (double y : ys) sum += y;
    const bool agree = std::all_of(ys.begin(), ys.end(), [&](double y) { return y == ys.front(); });
    const double m = agree ? ys.front() : sum / static_cast<double>(ys.size());
    double sd = 0.0;
    if (!agree) {
      double ss = 0.0;
      for (double y : ys) ss += (y - m) * (y - m);
      sd = std::sqrt(ss / static_cast<double>(ys.size() - 1));
    }
    band.fpr.push_back(x);
    band.mean.push_back(m);
    band.lower.push_back(std::clamp(m - z * sd, 0.0, 1.0));
    band.upper.push_back(std::clamp(m + z * sd, 0.0, 1.0));
  }
  return band;
}

}  // namespace aggpred
