#pragma once

// Time-aligned session model: sensor channels, aggression episodes and the
// 15-second grid of decision points.
//
// All times are seconds relative to session start. Feature windows are
// half-open [t0, t1); label windows are open-closed (t, t + future].

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "aggpred/error.hpp"

namespace aggpred {

// Decision stride and feature bin width, in seconds.
inline constexpr int kStrideSeconds = 15;

enum class ChannelId { BVP = 0, IBI, EDA, ACC_X, ACC_Y, ACC_Z };

inline constexpr std::size_t kChannelCount = 6;

inline constexpr std::array<ChannelId, kChannelCount> kAllChannels = {
    ChannelId::BVP, ChannelId::IBI, ChannelId::EDA,
    ChannelId::ACC_X, ChannelId::ACC_Y, ChannelId::ACC_Z};

constexpr std::string_view channel_name(ChannelId id) noexcept {
  switch (id) {
    case ChannelId::BVP: return "BVP";
    case ChannelId::IBI: return "IBI";
    case ChannelId::EDA: return "EDA";
    case ChannelId::ACC_X: return "ACC_X";
    case ChannelId::ACC_Y: return "ACC_Y";
    case ChannelId::ACC_Z: return "ACC_Z";
  }
  return "?";
}

constexpr std::size_t channel_index(ChannelId id) noexcept { return static_cast<std::size_t>(id); }

// Nominal wearable sampling rates (Hz); IBI is event-based and has none.
constexpr double nominal_rate(ChannelId id) noexcept {
  switch (id) {
    case ChannelId::BVP: return 64.0;
    case ChannelId::EDA: return 4.0;
    case ChannelId::ACC_X:
    case ChannelId::ACC_Y:
    case ChannelId::ACC_Z: return 32.0;
    case ChannelId::IBI: return 0.0;
  }
  return 0.0;
}

enum class ChannelKind { Uniform, Event };

// One sensor stream. Uniform channels imply timestamps start_offset + i / rate;
// event channels carry an explicit, strictly increasing time per value.
class SignalChannel {
 public:
  SignalChannel() = default;

  static SignalChannel uniform(ChannelId id, double sample_rate, double start_offset,
                               std::vector<double> samples) {
    if (!(sample_rate > 0.0) || !std::isfinite(sample_rate))
      throw DataError(std::string(channel_name(id)) + ": sample rate must be positive");
    if (!std::isfinite(start_offset))
      throw DataError(std::string(channel_name(id)) + ": non-finite start offset");
    check_finite(id, samples);
    SignalChannel c;
    c.id_ = id;
    c.kind_ = ChannelKind::Uniform;
    c.rate_ = sample_rate;
    c.start_offset_ = start_offset;
    c.values_ = std::move(samples);
    return c;
  }

  static SignalChannel events(ChannelId id, std::vector<double> event_times,
                              std::vector<double> values) {
    if (event_times.size() != values.size())
      throw DataError(std::string(channel_name(id)) + ": event times and values differ in length");
    check_finite(id, event_times);
    check_finite(id, values);
    for (std::size_t i = 1; i < event_times.size(); ++i)
      if (!(event_times[i] > event_times[i - 1]))
        throw DataError(std::string(channel_name(id)) + ": event times must be strictly increasing");
    SignalChannel c;
    c.id_ = id;
    c.kind_ = ChannelKind::Event;
    c.values_ = std::move(values);
    c.times_ = std::move(event_times);
    c.start_offset_ = c.times_.empty() ? 0.0 : c.times_.front();
    return c;
  }

  ChannelId id() const noexcept { return id_; }
  std::string_view name() const noexcept { return channel_name(id_); }
  ChannelKind kind() const noexcept { return kind_; }
  double sample_rate() const noexcept { return rate_; }
  double start_offset() const noexcept { return start_offset_; }
  std::span<const double> samples() const noexcept { return values_; }
  std::span<const double> event_times() const noexcept { return times_; }
  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }

  double time_of(std::size_t i) const noexcept {
    return kind_ == ChannelKind::Uniform ? start_offset_ + static_cast<double>(i) / rate_
                                         : times_[i];
  }

  // Time just past the last sample: start + n / rate for uniform channels,
  // the last event time for event channels (0 when empty).
  double extent() const noexcept {
    if (kind_ == ChannelKind::Uniform) return start_offset_ + static_cast<double>(values_.size()) / rate_;
    return times_.empty() ? 0.0 : times_.back();
  }

  // First index whose timestamp is >= t.
  std::size_t lower_index(double t) const noexcept {
    const std::size_t n = values_.size();
    if (kind_ == ChannelKind::Event)
      return static_cast<std::size_t>(std::lower_bound(times_.begin(), times_.end(), t) - times_.begin());
    const double guess = std::ceil((t - start_offset_) * rate_);
    std::size_t i = guess <= 0.0 ? 0 : guess >= static_cast<double>(n) ? n : static_cast<std::size_t>(guess);
    // Align exactly with the time_of() definition regardless of rounding in the guess.
    while (i > 0 && time_of(i - 1) >= t) --i;
    while (i < n && time_of(i) < t) ++i;
    return i;
  }

  friend bool operator==(const SignalChannel&, const SignalChannel&) = default;

 private:
  static void check_finite(ChannelId id, const std::vector<double>& v) {
    for (double x : v)
      if (!std::isfinite(x)) throw DataError(std::string(channel_name(id)) + ": non-finite value");
  }

  ChannelId id_ = ChannelId::BVP;
  ChannelKind kind_ = ChannelKind::Uniform;
  double rate_ = 0.0;
  double start_offset_ = 0.0;
  std::vector<double> values_;
  std::vector<double> times_;
};

// Values whose timestamps lie in [t0, t1).
inline std::span<const double> channel_slice(const SignalChannel& channel, double t0, double t1) {
  if (!(t0 < t1)) throw InvalidRangeError("channel_slice: require t0 < t1");
  const std::size_t lo = channel.lower_index(t0);
  const std::size_t hi = std::max(lo, channel.lower_index(t1));
  return channel.samples().subspan(lo, hi - lo);
}

struct AggressionEpisode {
  double start = 0.0;
  double end = 0.0;
  friend bool operator==(const AggressionEpisode&, const AggressionEpisode&) = default;
};

// Sorts episodes by start and merges any that overlap or touch.
inline std::vector<AggressionEpisode> merge_episodes(std::vector<AggressionEpisode> episodes) {
  std::sort(episodes.begin(), episodes.end(), [](const auto& a, const auto& b) {
    return a.start < b.start || (a.start == b.start && a.end < b.end);
  });
  std::vector<AggressionEpisode> merged;
  for (const auto& e : episodes) {
    if (!merged.empty() && e.start <= merged.back().end)
      merged.back().end = std::max(merged.back().end, e.end);
    else
      merged.push_back(e);
  }
  return merged;
}

// True iff some episode intersects the open-closed query (t0, t1]. Episodes
// that only touch either boundary (end == t0 or start == t1) do not count.
inline bool episode_overlaps(std::span<const AggressionEpisode> episodes, double t0, double t1) {
  if (!(t0 < t1)) throw InvalidRangeError("episode_overlaps: require t0 < t1");
  return std::any_of(episodes.begin(), episodes.end(),
                     [&](const AggressionEpisode& e) { return e.start < t1 && e.end > t0; });
}

// One participant's observational recording.
class Session {
 public:
  Session(std::string participant_id, std::string session_id, double duration,
          std::array<SignalChannel, kChannelCount> channels,
          std::vector<AggressionEpisode> episodes)
      : participant_id_(std::move(participant_id)),
        session_id_(std::move(session_id)),
        duration_(duration),
        channels_(std::move(channels)),
        episodes_(merge_episodes(std::move(episodes))) {
    if (!(duration_ > 0.0) || !std::isfinite(duration_))
      throw ValidationError("session " + session_id_ + ": duration must be positive");
    for (std::size_t i = 0; i < kChannelCount; ++i) {
      const auto& c = channels_[i];
      if (c.id() != kAllChannels[i])
        throw StructuralError("session " + session_id_ + ": channel slot " +
                              std::string(channel_name(kAllChannels[i])) + " holds " +
                              std::string(c.name()));
      if (c.empty()) continue;
      // Allow one ulp-scale of slack on the extent comparison.
      if (c.start_offset() < 0.0 || c.extent() > duration_ * (1.0 + 1e-12))
        throw ValidationError("session " + session_id_ + ": channel " + std::string(c.name()) +
                              " lies outside [0, duration]");
    }
    for (const auto& e : episodes_) {
      if (!(e.start >= 0.0 && e.start < e.end && e.end <= duration_))
        throw ValidationError("session " + session_id_ + ": episode outside [0, duration] or empty");
    }
  }

  const std::string& participant_id() const noexcept { return participant_id_; }
  const std::string& session_id() const noexcept { return session_id_; }
  double duration() const noexcept { return duration_; }
  const SignalChannel& channel(ChannelId id) const noexcept { return channels_[channel_index(id)]; }
  const std::array<SignalChannel, kChannelCount>& channels() const noexcept { return channels_; }
  std::span<const AggressionEpisode> episodes() const noexcept { return episodes_; }

  friend bool operator==(const Session&, const Session&) = default;

 private:
  std::string participant_id_;
  std::string session_id_;
  double duration_;
  std::array<SignalChannel, kChannelCount> channels_;
  std::vector<AggressionEpisode> episodes_;
};

// Past feature window and future label window, both positive multiples of 15 s.
struct Horizon {
  int past_s = 60;
  int future_s = 60;

  void validate() const {
    if (past_s <= 0 || past_s % kStrideSeconds != 0)
      throw ConfigError("past window must be a positive multiple of 15 s, got " + std::to_string(past_s));
    if (future_s <= 0 || future_s % kStrideSeconds != 0)
      throw ConfigError("future window must be a positive multiple of 15 s, got " + std::to_string(future_s));
  }

  friend auto operator<=>(const Horizon&, const Horizon&) = default;
};

struct DecisionPoint {
  std::reference_wrapper<const Session> session;
  double t;
};

// Number of decision points floor((duration - past - future) / 15) + 1, or 0.
inline std::size_t decision_point_count(double duration, const Horizon& h) {
  h.validate();
  const double room = duration - h.past_s - h.future_s;
  if (room < 0.0) return 0;
  return static_cast<std::size_t>(std::floor(room / kStrideSeconds)) + 1;
}

// Every t = past + 15 j with t + future <= duration.
inline std::vector<DecisionPoint> decision_points(const Session& session, const Horizon& h) {
  const std::size_t n = decision_point_count(session.duration(), h);
  std::vector<DecisionPoint> out;
  out.reserve(n);
  for (std::size_t j = 0; j < n; ++j)
    out.push_back({std::cref(session), static_cast<double>(h.past_s + kStrideSeconds * static_cast<long>(j))});
  return out;
}

}  // namespace aggpred
