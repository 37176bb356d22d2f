#pragma once

// Predictor vectors for a decision point.
//
// The past window [t - past, t) is cut into B = past / 15 bins. Each bin
// contributes ten statistics per included channel and, when the temporal
// group is included, (TPA, AOF) evaluated at the bin end. A second block
// holds the population standard deviation of every per-bin feature across
// the B bins, so d = f * (B + 1) with f = 10 * channels + 2 * temporal.

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "aggpred/error.hpp"
#include "aggpred/timeline.hpp"

namespace aggpred {

enum class FeatureSubset { Temporal, Physical, Physiological, PhysicalPhysiological, All };

inline constexpr std::array<FeatureSubset, 5> kAllSubsets = {
    FeatureSubset::Temporal, FeatureSubset::Physical, FeatureSubset::Physiological,
    FeatureSubset::PhysicalPhysiological, FeatureSubset::All};

constexpr std::string_view subset_name(FeatureSubset s) noexcept {
  switch (s) {
    case FeatureSubset::Temporal: return "TEMPORAL";
    case FeatureSubset::Physical: return "PHYSICAL";
    case FeatureSubset::Physiological: return "PHYSIOLOGICAL";
    case FeatureSubset::PhysicalPhysiological: return "PHYSICAL+PHYSIOLOGICAL";
    case FeatureSubset::All: return "ALL";
  }
  return "?";
}

inline FeatureSubset parse_subset(std::string_view s) {
  std::string u(s);
  for (char& c : u) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  for (auto sub : kAllSubsets)
    if (u == subset_name(sub)) return sub;
  if (u == "PHYS+PHYSIO" || u == "PHYSICAL_PHYSIOLOGICAL") return FeatureSubset::PhysicalPhysiological;
  throw ConfigError("unknown feature subset '" + std::string(s) + "'");
}

enum class FeatureGroup { Physiological, Physical, Temporal };

constexpr std::string_view group_name(FeatureGroup g) noexcept {
  switch (g) {
    case FeatureGroup::Physiological: return "physiological";
    case FeatureGroup::Physical: return "physical";
    case FeatureGroup::Temporal: return "temporal";
  }
  return "?";
}

constexpr FeatureGroup channel_group(ChannelId id) noexcept {
  return (id == ChannelId::ACC_X || id == ChannelId::ACC_Y || id == ChannelId::ACC_Z) ? FeatureGroup::Physical
                                                                                      : FeatureGroup::Physiological;
}

inline std::vector<ChannelId> subset_channels(FeatureSubset s) {
  std::vector<ChannelId> out;
  for (auto id : kAllChannels) {
    const auto g = channel_group(id);
    const bool take = (s == FeatureSubset::All || s == FeatureSubset::PhysicalPhysiological) ||
                      (s == FeatureSubset::Physical && g == FeatureGroup::Physical) ||
                      (s == FeatureSubset::Physiological && g == FeatureGroup::Physiological);
    if (take) out.push_back(id);
  }
  return out;
}

constexpr bool subset_has_temporal(FeatureSubset s) noexcept {
  return s == FeatureSubset::Temporal || s == FeatureSubset::All;
}

// ---- bin statistics ----

inline constexpr std::size_t kStatCount = 10;

inline constexpr std::array<std::string_view, kStatCount> kStatNames = {
    "first", "last", "max", "min", "mean", "median", "n_unique", "sum", "std", "var"};

struct BinStats {
  double first = 0, last = 0, maximum = 0, minimum = 0, mean = 0, median = 0;
  double n_unique = 0, sum = 0, std = 0, variance = 0;

  std::array<double, kStatCount> values() const noexcept {
    return {first, last, maximum, minimum, mean, median, n_unique, sum, std, variance};
  }

  friend bool operator==(const BinStats&, const BinStats&) = default;
};

// The ten per-bin statistics with population (divide-by-n) spread; nullopt
// for an empty bin. Median of an even count averages the two middle values.
inline std::optional<BinStats> bin_statistics(std::span<const double> values) {
  if (values.empty()) return std::nullopt;
  const std::size_t n = values.size();
  BinStats s;
  s.first = values.front();
  s.last = values.back();
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  s.minimum = sorted.front();
  s.maximum = sorted.back();
  s.median = n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  s.n_unique = static_cast<double>(std::unique(sorted.begin(), sorted.end()) - sorted.begin());
  double sum = 0.0;
  for (double v : values) sum += v;
  s.sum = sum;
  s.mean = std::clamp(sum / static_cast<double>(n), s.minimum, s.maximum);
  double ss = 0.0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  s.variance = ss / static_cast<double>(n);
  s.std = std::sqrt(s.variance);
  return s;
}

inline BinStats singleton_stats(double v) { return *bin_statistics(std::span<const double>(&v, 1)); }

// Statistics of `channel` over [t0, t1) for a decision at `t_decision`.
//
// An empty bin (sensor dropout) is filled with a singleton: the last value
// observed before t0, else the channel's first value if it was recorded
// before the decision instant, else 0.
inline BinStats channel_bin(const SignalChannel& channel, double t0, double t1, double t_decision) {
  if (auto s = bin_statistics(channel_slice(channel, t0, t1))) return *s;
  const std::size_t before = channel.lower_index(t0);
  if (before > 0) return singleton_stats(channel.samples()[before - 1]);
  if (!channel.empty() && channel.time_of(0) < t_decision) return singleton_stats(channel.samples()[0]);
  return singleton_stats(0.0);
}

// ---- temporal features ----

struct TemporalFeatures {
  double tpa = 0.0;  // seconds since the most recent episode ended (0 while one is ongoing)
  double aof = 0.0;  // 1 once any episode has started in this session
};

// TPA/AOF at `t_eval`. With no episode yet, TPA is the elapsed session time
// and AOF = 0 disambiguates it.
inline TemporalFeatures temporal_features(std::span<const AggressionEpisode> episodes, double t_eval) {
  TemporalFeatures f{t_eval, 0.0};
  std::optional<double> last_end;
  for (const auto& e : episodes) {
    if (e.start > t_eval) continue;
    f.aof = 1.0;
    if (e.end > t_eval) return {0.0, 1.0};
    if (!last_end || e.end > *last_end) last_end = e.end;
  }
  if (last_end) f.tpa = t_eval - *last_end;
  return f;
}

// ---- layout ----

struct FeatureDescriptor {
  std::string source;     // channel name, "TPA" or "AOF"
  std::string statistic;  // one of kStatNames, or "value" for temporal features
  int bin = 0;            // bin index within the past window; -1 for the across-bins std
  FeatureGroup group = FeatureGroup::Physiological;
  std::string name;
};

// Ordered predictor descriptors for (past window, subset).
class FeatureLayout {
 public:
  FeatureLayout(int past_s, FeatureSubset subset) : past_s_(past_s), subset_(subset) {
    if (past_s <= 0 || past_s % kStrideSeconds != 0)
      throw ConfigError("past window must be a positive multiple of 15 s");
    channels_ = subset_channels(subset);
    temporal_ = subset_has_temporal(subset);
    bins_ = past_s / kStrideSeconds;
    per_bin_ = kStatCount * channels_.size() + (temporal_ ? 2 : 0);

    auto block = [&](int bin) {
      const std::string suffix = bin < 0 ? "@std" : "@b" + std::to_string(bin);
      for (auto id : channels_)
        for (auto stat : kStatNames)
          features_.push_back({std::string(channel_name(id)), std::string(stat), bin, channel_group(id),
                               std::string(channel_name(id)) + "." + std::string(stat) + suffix});
      if (temporal_) {
        features_.push_back({"TPA", "value", bin, FeatureGroup::Temporal, "TPA" + suffix});
        features_.push_back({"AOF", "value", bin, FeatureGroup::Temporal, "AOF" + suffix});
      }
    };
    for (int b = 0; b < bins_; ++b) block(b);
    block(-1);

    std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a over the ordered names
    for (const auto& f : features_) {
      for (char c : f.name) h = (h ^ static_cast<unsigned char>(c)) * 0x100000001b3ULL;
      h = (h ^ '\n') * 0x100000001b3ULL;
    }
    static constexpr char kHex[] = "0123456789abcdef";
    std::string hex(16, '0');
    for (int i = 15; i >= 0; --i, h >>= 4) hex[static_cast<std::size_t>(i)] = kHex[h & 0xf];
    fingerprint_ = "layout-" + hex;
  }

  int past_seconds() const noexcept { return past_s_; }
  FeatureSubset subset() const noexcept { return subset_; }
  int bins() const noexcept { return bins_; }
  std::size_t per_bin_width() const noexcept { return per_bin_; }
  std::size_t size() const noexcept { return features_.size(); }
  const std::vector<ChannelId>& channels() const noexcept { return channels_; }
  bool has_temporal() const noexcept { return temporal_; }
  const std::vector<FeatureDescriptor>& features() const noexcept { return features_; }
  const FeatureDescriptor& operator[](std::size_t i) const { return features_.at(i); }
  const std::string& fingerprint() const noexcept { return fingerprint_; }

  std::vector<std::string> names() const {
    std::vector<std::string> out;
    out.reserve(features_.size());
    for (const auto& f : features_) out.push_back(f.name);
    return out;
  }

  std::optional<std::size_t> index_of(std::string_view name) const {
    for (std::size_t i = 0; i < features_.size(); ++i)
      if (features_[i].name == name) return i;
    return std::nullopt;
  }

  // Positions in `wider` of every feature of this layout (same past window).
  std::vector<std::size_t> projection_from(const FeatureLayout& wider) const {
    if (wider.past_s_ != past_s_) throw LayoutError("projection requires the same past window");
    std::map<std::string_view, std::size_t> pos;
    for (std::size_t i = 0; i < wider.features_.size(); ++i) pos.emplace(wider.features_[i].name, i);
    std::vector<std::size_t> out;
    out.reserve(features_.size());
    for (const auto& f : features_) {
      const auto it = pos.find(f.name);
      if (it == pos.end()) throw LayoutError("feature " + f.name + " absent from the wider layout");
      out.push_back(it->second);
    }
    return out;
  }

 private:
  int past_s_;
  FeatureSubset subset_;
  std::vector<ChannelId> channels_;
  bool temporal_ = false;
  int bins_ = 0;
  std::size_t per_bin_ = 0;
  std::vector<FeatureDescriptor> features_;
  std::string fingerprint_;
};

inline std::size_t feature_dimension(int past_s, FeatureSubset subset) {
  return FeatureLayout(past_s, subset).size();
}

struct FeatureVector {
  std::vector<double> values;
  std::string layout_fingerprint;
  std::optional<bool> label;
  std::string participant_id;
  std::string session_id;
  double t = 0.0;
};

// ---- assembly ----

namespace detail {

// Fills the per-bin block and the across-bins std block. `bin_stats(c, b)`
// yields channel c's BinStats for bin b; `temporal(b)` the (TPA, AOF) pair.
template <class BinFn, class TemporalFn>
std::vector<double> fill_layout(const FeatureLayout& layout, BinFn&& bin_stats, TemporalFn&& temporal) {
  const std::size_t f = layout.per_bin_width();
  const auto B = static_cast<std::size_t>(layout.bins());
  std::vector<double> out(layout.size(), 0.0);
  for (std::size_t b = 0; b < B; ++b) {
    std::size_t k = b * f;
    for (std::size_t c = 0; c < layout.channels().size(); ++c) {
      const auto vals = bin_stats(c, b).values();
      for (double v : vals) out[k++] = v;
    }
    if (layout.has_temporal()) {
      const TemporalFeatures tf = temporal(b);
      out[k++] = tf.tpa;
      out[k++] = tf.aof;
    }
  }
  const std::size_t base = B * f;
  for (std::size_t j = 0; j < f; ++j) {
    double mean = 0.0;
    for (std::size_t b = 0; b < B; ++b) mean += out[b * f + j];
    mean /= static_cast<double>(B);
    double ss = 0.0;
    for (std::size_t b = 0; b < B; ++b) ss += (out[b * f + j] - mean) * (out[b * f + j] - mean);
    out[base + j] = std::sqrt(ss / static_cast<double>(B));
  }
  return out;
}

inline void check_decision(const Session& s, double t, int past_s) {
  if (!(t - past_s >= 0.0) || !(t <= s.duration()))
    throw InvalidRangeError("decision instant " + std::to_string(t) + " does not fit a " +
                            std::to_string(past_s) + " s past window in session " + s.session_id());
}

}  // namespace detail

inline FeatureVector assemble(const Session& session, double t, const FeatureLayout& layout) {
  detail::check_decision(session, t, layout.past_seconds());
  const double w0 = t - layout.past_seconds();
  auto bins = [&](std::size_t c, std::size_t b) {
    const double t0 = w0 + kStrideSeconds * static_cast<double>(b);
    return channel_bin(session.channel(layout.channels()[c]), t0, t0 + kStrideSeconds, t);
  };
  auto temporal = [&](std::size_t b) {
    return temporal_features(session.episodes(), w0 + kStrideSeconds * static_cast<double>(b + 1));
  };
  FeatureVector v;
  v.values = detail::fill_layout(layout, bins, temporal);
  v.layout_fingerprint = layout.fingerprint();
  v.participant_id = session.participant_id();
  v.session_id = session.session_id();
  v.t = t;
  return v;
}

// Unlabeled predictor vector for decision instant t over [t - past, t).
inline FeatureVector assemble(const Session& session, double t, int past_s, FeatureSubset subset) {
  return assemble(session, t, FeatureLayout(past_s, subset));
}

// True iff an episode intersects (t, t + future].
inline bool label(const Session& session, double t, int future_s) {
  if (t + future_s > session.duration())
    throw InvalidRangeError("label window runs past the end of session " + session.session_id());
  return episode_overlaps(session.episodes(), t, t + future_s);
}

// Whether an episode is in progress at t (start <= t < end).
inline bool episode_ongoing(const Session& session, double t) {
  const auto eps = session.episodes();
  return std::any_of(eps.begin(), eps.end(), [&](const auto& e) { return e.start <= t && t < e.end; });
}

struct ExtractOptions {
  // Drop decision points that fall inside an ongoing episode.
  bool exclude_ongoing = false;
};

// Per-session cache of grid-aligned bins; every decision window on the
// 15 s grid reuses them. Produces the same values as assemble().
class SessionBins {
 public:
  SessionBins(const Session& session, const std::vector<ChannelId>& channels) : session_(session) {
    const auto n_bins = static_cast<std::size_t>(std::floor(session.duration() / kStrideSeconds));
    for (auto id : channels) {
      const auto& ch = session.channel(id);
      Column col;
      col.id = id;
      col.direct.reserve(n_bins);
      col.before.reserve(n_bins);
      for (std::size_t m = 0; m < n_bins; ++m) {
        const double t0 = kStrideSeconds * static_cast<double>(m);
        col.direct.push_back(bin_statistics(channel_slice(ch, t0, t0 + kStrideSeconds)));
        const std::size_t before = ch.lower_index(t0);
        col.before.push_back(before > 0 ? std::optional<double>(ch.samples()[before - 1]) : std::nullopt);
      }
      columns_.push_back(std::move(col));
    }
  }

  // Same resolution rule as channel_bin().
  BinStats get(std::size_t column, std::size_t grid_bin, double t_decision) const {
    const Column& col = columns_[column];
    if (col.direct[grid_bin]) return *col.direct[grid_bin];
    if (col.before[grid_bin]) return singleton_stats(*col.before[grid_bin]);
    const auto& ch = session_.channel(col.id);
    if (!ch.empty() && ch.time_of(0) < t_decision) return singleton_stats(ch.samples()[0]);
    return singleton_stats(0.0);
  }

 private:
  struct Column {
    ChannelId id;
    std::vector<std::optional<BinStats>> direct;
    std::vector<std::optional<double>> before;
  };
  const Session& session_;
  std::vector<Column> columns_;
};

// One labeled vector per decision point per session, ordered by
// (participant, session, t).
inline std::vector<FeatureVector> extract_dataset(std::span<const Session> sessions, const Horizon& horizon,
                                                  FeatureSubset subset, const ExtractOptions& opts = {}) {
  horizon.validate();
  const FeatureLayout layout(horizon.past_s, subset);
  std::vector<const Session*> order;
  for (const auto& s : sessions) order.push_back(&s);
  std::stable_sort(order.begin(), order.end(), [](const Session* a, const Session* b) {
    return std::tie(a->participant_id(), a->session_id()) < std::tie(b->participant_id(), b->session_id());
  });

  std::vector<FeatureVector> out;
  for (const Session* s : order) {
    const SessionBins cache(*s, layout.channels());
    for (const auto& dp : decision_points(*s, horizon)) {
      if (opts.exclude_ongoing && episode_ongoing(*s, dp.t)) continue;
      const double w0 = dp.t - horizon.past_s;
      const auto first_bin = static_cast<std::size_t>(w0) / kStrideSeconds;
      auto bins = [&](std::size_t c, std::size_t b) { return cache.get(c, first_bin + b, dp.t); };
      auto temporal = [&](std::size_t b) {
        return temporal_features(s->episodes(), w0 + kStrideSeconds * static_cast<double>(b + 1));
      };
      FeatureVector v;
      v.values = detail::fill_layout(layout, bins, temporal);
      v.layout_fingerprint = layout.fingerprint();
      v.label = label(*s, dp.t, horizon.future_s);
      v.participant_id = s->participant_id();
      v.session_id = s->session_id();
      v.t = dp.t;
      out.push_back(std::move(v));
    }
  }
  return out;
}

}  // namespace aggpred
