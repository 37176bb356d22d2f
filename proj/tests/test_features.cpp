#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <vector>

#include "aggpred/dataset.hpp"
#include "aggpred/features.hpp"
#include "aggpred/random.hpp"
#include "helpers.hpp"

using namespace aggpred;

namespace {

std::vector<double> stats_vec(std::initializer_list<double> v) {
  const std::vector<double> x(v);
  const auto a = bin_statistics(x)->values();
  return std::vector<double>(a.begin(), a.end());
}

// Straightforward two-pass statistics, written independently of the library.
std::array<double, 10> naive_stats(const std::vector<double>& x) {
  const double n = static_cast<double>(x.size());
  double mx = x[0], mn = x[0], sum = 0;
  for (double v : x) {
    mx = std::max(mx, v);
    mn = std::min(mn, v);
    sum += v;
  }
  const double mean = sum / n;
  double ss = 0;
  for (double v : x) ss += (v - mean) * (v - mean);
  std::vector<double> s = x;
  std::sort(s.begin(), s.end());
  const double med = x.size() % 2 ? s[x.size() / 2] : (s[x.size() / 2 - 1] + s[x.size() / 2]) / 2;
  const double uniq = static_cast<double>(std::set<double>(x.begin(), x.end()).size());
  return {x.front(), x.back(), mx, mn, mean, med, uniq, sum, std::sqrt(ss / n), ss / n};
}

Session with_ibi(Session s, std::vector<double> times, std::vector<double> values) {
  auto channels = s.channels();
  channels[1] = SignalChannel::events(ChannelId::IBI, std::move(times), std::move(values));
  return Session(s.participant_id(), s.session_id(), s.duration(), channels,
                 std::vector<AggressionEpisode>(s.episodes().begin(), s.episodes().end()));
}

}  // namespace

TEST(BinStatistics, HandComputedExample) {
  const std::vector<double> x{1, 2, 3, 4};
  const auto s = *bin_statistics(x);
  EXPECT_EQ(s.first, 1);
  EXPECT_EQ(s.last, 4);
  EXPECT_EQ(s.maximum, 4);
  EXPECT_EQ(s.minimum, 1);
  EXPECT_EQ(s.mean, 2.5);
  EXPECT_EQ(s.median, 2.5);
  EXPECT_EQ(s.n_unique, 4);
  EXPECT_EQ(s.sum, 10);
  EXPECT_DOUBLE_EQ(s.variance, 1.25);
  EXPECT_NEAR(s.std, 1.118033988749895, 1e-12);
}

TEST(BinStatistics, ConstantAndSingleton) {
  EXPECT_EQ(stats_vec({5, 5, 5}), (std::vector<double>{5, 5, 5, 5, 5, 5, 1, 15, 0, 0}));
  EXPECT_EQ(stats_vec({7}), (std::vector<double>{7, 7, 7, 7, 7, 7, 1, 7, 0, 0}));
}

TEST(BinStatistics, EmptyIsSignalledNotNaN) { EXPECT_FALSE(bin_statistics(std::vector<double>{}).has_value()); }

TEST(BinStatistics, MatchesNaiveOracleAndInvariants) {
  Rng rng(99);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 1 + rng.below(40);
    std::vector<double> x(n);
    // Rounded values produce repeats so n_unique is exercised.
    for (double& v : x) v = std::round(rng.normal(0.0, 3.0) * 4.0) / 4.0;
    const auto s = *bin_statistics(x);
    const auto o = naive_stats(x);
    const auto got = s.values();
    for (std::size_t k = 0; k < 10; ++k) EXPECT_NEAR(got[k], o[k], 1e-9) << kStatNames[k] << " n=" << n;
    EXPECT_LE(s.minimum, s.mean);
    EXPECT_LE(s.mean, s.maximum);
    EXPECT_DOUBLE_EQ(s.variance, s.std * s.std);
    EXPECT_GE(s.n_unique, 1);
    EXPECT_EQ(*bin_statistics(x), s);
  }
}

TEST(TemporalFeatures, Examples) {
  const std::vector<AggressionEpisode> e{{100, 130}};
  auto tf = temporal_features(e, 160);
  EXPECT_EQ(tf.tpa, 30);
  EXPECT_EQ(tf.aof, 1);
  tf = temporal_features(e, 115);
  EXPECT_EQ(tf.tpa, 0);
  EXPECT_EQ(tf.aof, 1);
  tf = temporal_features({}, 200);
  EXPECT_EQ(tf.tpa, 200);
  EXPECT_EQ(tf.aof, 0);
  tf = temporal_features(e, 100);
  EXPECT_EQ(tf.tpa, 0);
  EXPECT_EQ(tf.aof, 1);
  tf = temporal_features(e, 130);
  EXPECT_EQ(tf.tpa, 0);
  EXPECT_EQ(tf.aof, 1);
}

TEST(Layout, DimensionFormula) {
  EXPECT_EQ(feature_dimension(60, FeatureSubset::All), 310u);
  EXPECT_EQ(feature_dimension(60, FeatureSubset::Temporal), 10u);
  EXPECT_EQ(feature_dimension(60, FeatureSubset::Physical), 150u);
  EXPECT_EQ(feature_dimension(60, FeatureSubset::Physiological), 150u);
  EXPECT_EQ(feature_dimension(60, FeatureSubset::PhysicalPhysiological), 300u);
  for (int tp = 15; tp <= 300; tp += 15)
    for (auto sub : kAllSubsets) {
      const FeatureLayout L(tp, sub);
      const std::size_t c = L.channels().size();
      EXPECT_EQ(L.size(), (10 * c + (L.has_temporal() ? 2 : 0)) * static_cast<std::size_t>(tp / 15 + 1));
      const auto names = L.names();
      EXPECT_EQ(std::set<std::string>(names.begin(), names.end()).size(), names.size());
      EXPECT_EQ(L.fingerprint(), FeatureLayout(tp, sub).fingerprint());
    }
  EXPECT_NE(FeatureLayout(60, FeatureSubset::All).fingerprint(), FeatureLayout(75, FeatureSubset::All).fingerprint());
  EXPECT_THROW(FeatureLayout(50, FeatureSubset::All), ConfigError);
  EXPECT_THROW(FeatureLayout(0, FeatureSubset::All), ConfigError);
}

TEST(Layout, NamesAndGroups) {
  const FeatureLayout L(60, FeatureSubset::All);
  EXPECT_EQ(L[0].name, "BVP.first@b0");
  EXPECT_TRUE(L.index_of("TPA@std").has_value());
  EXPECT_TRUE(L.index_of("ACC_Z.var@b3").has_value());
  EXPECT_FALSE(L.index_of("ACC_Z.var@b4").has_value());
  for (const auto& f : L.features()) {
    if (f.source == "TPA" || f.source == "AOF")
      EXPECT_EQ(f.group, FeatureGroup::Temporal);
    else if (f.source.rfind("ACC", 0) == 0)
      EXPECT_EQ(f.group, FeatureGroup::Physical);
    else
      EXPECT_EQ(f.group, FeatureGroup::Physiological);
  }
  EXPECT_EQ(parse_subset("phys+physio"), FeatureSubset::PhysicalPhysiological);
  EXPECT_THROW(parse_subset("EMG"), ConfigError);
}

TEST(Assemble, LengthAndBinContents) {
  const auto s = testutil::noise_session(600, {{100, 130}}, 4);
  const FeatureLayout L(60, FeatureSubset::All);
  const auto v = assemble(s, 300, L);
  ASSERT_EQ(v.values.size(), 310u);
  const auto eda = *bin_statistics(channel_slice(s.channel(ChannelId::EDA), 255, 270));
  EXPECT_EQ(v.values[*L.index_of("EDA.mean@b1")], eda.mean);
  EXPECT_EQ(v.values[*L.index_of("EDA.n_unique@b1")], eda.n_unique);
  EXPECT_EQ(v.values[*L.index_of("TPA@b3")], 300 - 130);
  EXPECT_EQ(v.values[*L.index_of("AOF@b0")], 1);
  for (double x : v.values) EXPECT_TRUE(std::isfinite(x));
}

TEST(Assemble, AcrossBinStdIsPopulationStdOfBinValues) {
  const auto s = testutil::noise_session(600, {{100, 130}}, 5);
  const FeatureLayout L(60, FeatureSubset::All);
  const auto v = assemble(s, 300, L);
  for (std::string feat : {"BVP.max", "IBI.mean", "ACC_Y.median", "TPA", "AOF"}) {
    std::vector<double> per_bin;
    for (int b = 0; b < 4; ++b) {
      per_bin.push_back(v.values[*L.index_of(feat + "@b" + std::to_string(b))]);
    }
    EXPECT_NEAR(v.values[*L.index_of(feat + "@std")], naive_stats(per_bin)[8], 1e-9) << feat;
  }
}

TEST(Assemble, SingleBinStdIsZero) {
  const auto s = testutil::noise_session(300, {{100, 130}}, 6);
  const FeatureLayout L(15, FeatureSubset::All);
  const auto v = assemble(s, 150, L);
  for (std::size_t i = 0; i < L.size(); ++i)
    if (L[i].bin < 0) {
      EXPECT_EQ(v.values[i], 0.0) << L[i].name;
    }
}

TEST(Assemble, IsCausal) {
  const auto base = testutil::noise_session(600, {{100, 130}}, 7);
  const FeatureLayout L(60, FeatureSubset::All);
  const double t = 300;
  const auto ref = assemble(base, t, L).values;
  auto ch = base.channels();
  // Perturb every sample at or after t on every uniform channel and later episodes.
  for (std::size_t c : {0u, 2u, 3u, 4u, 5u}) {
    std::vector<double> v(ch[c].samples().begin(), ch[c].samples().end());
    for (std::size_t i = 0; i < v.size(); ++i)
      if (ch[c].time_of(i) >= t) v[i] += 1000.0;
    ch[c] = SignalChannel::uniform(ch[c].id(), ch[c].sample_rate(), ch[c].start_offset(), v);
  }
  std::vector<double> times(ch[1].event_times().begin(), ch[1].event_times().end());
  std::vector<double> vals(ch[1].samples().begin(), ch[1].samples().end());
  for (std::size_t i = 0; i < times.size(); ++i)
    if (times[i] >= t) vals[i] = 1.4;
  ch[1] = SignalChannel::events(ChannelId::IBI, times, vals);
  const Session changed(base.participant_id(), base.session_id(), base.duration(), ch, {{100, 130}, {310, 350}});
  EXPECT_EQ(assemble(changed, t, L).values, ref);
}

TEST(Label, Examples) {
  const auto s = testutil::noise_session(600, {{100, 130}});
  EXPECT_TRUE(label(s, 60, 60));
  EXPECT_FALSE(label(s, 130, 60));
  EXPECT_TRUE(label(s, 129, 60));
  EXPECT_FALSE(label(s, 30, 60));
  // Onset exactly at t + tau_f: the episode starts after the window closes.
  EXPECT_FALSE(label(s, 40, 60));
  EXPECT_TRUE(label(s, 41, 60));
  EXPECT_FALSE(label(testutil::noise_session(600), 60, 60));
  EXPECT_THROW(label(s, 560, 60), InvalidRangeError);
}

TEST(Label, IgnoresSignalValues) {
  const auto a = testutil::noise_session(600, {{100, 130}, {400, 420}}, 1);
  const auto b = testutil::noise_session(600, {{100, 130}, {400, 420}}, 2);
  for (double t = 60; t + 60 <= 600; t += 15) EXPECT_EQ(label(a, t, 60), label(b, t, 60));
}

TEST(Imputation, EmptyIbiBinsCarryLastValue) {
  // Beats at 10 s (0.7) and 70 s (0.9): bins [15,30), [30,45), [45,60) are empty.
  const auto s = with_ibi(testutil::noise_session(300), {10, 70}, {0.7, 0.9});
  const FeatureLayout L(60, FeatureSubset::Physiological);
  const auto v = assemble(s, 75, L);
  for (int b = 0; b < 3; ++b) {
    const std::string bin = "@b" + std::to_string(b);
    EXPECT_EQ(v.values[*L.index_of("IBI.first" + bin)], 0.7);
    EXPECT_EQ(v.values[*L.index_of("IBI.n_unique" + bin)], 1);
    EXPECT_EQ(v.values[*L.index_of("IBI.sum" + bin)], 0.7);
    EXPECT_EQ(v.values[*L.index_of("IBI.std" + bin)], 0);
  }
  EXPECT_EQ(v.values[*L.index_of("IBI.mean@b3")], 0.9);
}

TEST(Imputation, LeadingGapUsesFirstObservedValueOnlyWhenCausal) {
  const auto s = with_ibi(testutil::noise_session(300), {50, 200}, {0.6, 0.8});
  const FeatureLayout L(60, FeatureSubset::Physiological);
  // Window [0, 60): bins 0..2 empty, first beat at 50 lies before t = 60.
  const auto v = assemble(s, 60, L);
  EXPECT_EQ(v.values[*L.index_of("IBI.mean@b0")], 0.6);
  EXPECT_EQ(v.values[*L.index_of("IBI.mean@b3")], 0.6);
  // No beat at all before the decision instant: the bins fall back to 0.
  const auto empty = with_ibi(testutil::noise_session(300), {}, {});
  const auto w = assemble(empty, 60, L);
  EXPECT_EQ(w.values[*L.index_of("IBI.mean@b1")], 0.0);
  for (double x : w.values) EXPECT_TRUE(std::isfinite(x));
}

TEST(Extract, CountsAndOrdering) {
  const auto s = testutil::noise_session(3600, {{100, 130}}, 3);
  const std::vector<Session> one{s};
  const auto v = extract_dataset(one, {60, 60}, FeatureSubset::All);
  EXPECT_EQ(v.size(), 233u);
  const std::vector<Session> two{testutil::noise_session(3600, {{100, 130}}, 3, "P02", "S01"), s};
  const auto w = extract_dataset(two, {60, 60}, FeatureSubset::All);
  ASSERT_EQ(w.size(), 466u);
  EXPECT_EQ(w.front().participant_id, "P01");
  for (std::size_t i = 0; i < 233; ++i) {
    EXPECT_EQ(w[i].values, w[i + 233].values);
    EXPECT_EQ(w[i].label, w[i + 233].label);
  }
  for (std::size_t i = 1; i < 233; ++i) EXPECT_GT(w[i].t, w[i - 1].t);
}

TEST(Extract, MatchesAssembleAndLabel) {
  const auto s = with_ibi(testutil::noise_session(900, {{100, 130}, {400, 460}}, 9), {5, 20, 21, 200, 890},
                          {0.8, 0.9, 0.7, 0.6, 0.85});
  const std::vector<Session> one{s};
  for (int tp : {15, 45, 60}) {
    const Horizon h{tp, 30};
    const auto v = extract_dataset(one, h, FeatureSubset::All);
    const auto pts = decision_points(s, h);
    ASSERT_EQ(v.size(), pts.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
      EXPECT_EQ(v[i].values, assemble(s, pts[i].t, tp, FeatureSubset::All).values) << "t=" << pts[i].t;
      EXPECT_EQ(*v[i].label, label(s, pts[i].t, h.future_s));
    }
  }
}

TEST(Extract, ProjectionProperty) {
  const std::vector<Session> one{testutil::noise_session(900, {{100, 130}}, 12)};
  const Horizon h{60, 60};
  const FeatureLayout all(60, FeatureSubset::All);
  const auto full = make_dataset(all, extract_dataset(one, h, FeatureSubset::All));
  for (auto sub : kAllSubsets) {
    const FeatureLayout narrow(60, sub);
    const auto direct = make_dataset(narrow, extract_dataset(one, h, sub));
    EXPECT_EQ(full.project(narrow).X, direct.X) << subset_name(sub);
  }
}

TEST(Extract, ExcludeOngoing) {
  const std::vector<Session> one{testutil::noise_session(900, {{100, 160}}, 13)};
  ExtractOptions o;
  o.exclude_ongoing = true;
  const auto all = extract_dataset(one, {60, 60}, FeatureSubset::Temporal);
  const auto kept = extract_dataset(one, {60, 60}, FeatureSubset::Temporal, o);
  // t = 105, 120, 135, 150 lie inside [100, 160).
  EXPECT_EQ(all.size() - kept.size(), 4u);
  for (const auto& v : kept) EXPECT_FALSE(v.t >= 100 && v.t < 160);
}

TEST(Dataset, CsvHasLayoutHeader) {
  const std::vector<Session> one{testutil::noise_session(300, {{100, 130}}, 14)};
  const FeatureLayout L(60, FeatureSubset::Temporal);
  const auto ds = make_dataset(L, extract_dataset(one, {60, 60}, FeatureSubset::Temporal));
  std::ostringstream out;
  write_dataset_csv(out, ds);
  std::istringstream in(out.str());
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "TPA@b0,AOF@b0,TPA@b1,AOF@b1,TPA@b2,AOF@b2,TPA@b3,AOF@b3,TPA@std,AOF@std,label,participant,session,t");
  std::size_t rows = 0;
  for (std::string line; std::getline(in, line);) ++rows;
  EXPECT_EQ(rows, ds.size());
}

TEST(Dataset, RejectsMismatchedLayout) {
  const std::vector<Session> one{testutil::noise_session(300, {}, 15)};
  const auto v = extract_dataset(one, {60, 60}, FeatureSubset::Temporal);
  EXPECT_THROW(make_dataset(FeatureLayout(60, FeatureSubset::All), v), LayoutError);
}
