#pragma once

// Seeded synthetic populations with planted pre-episode precursors.
//
// Each participant gets stationary channel baselines. Episodes arrive as a
// homogeneous Poisson process with truncated-normal durations. During the
// `precursor_lead` seconds before each onset the generating process shifts:
//   EDA  level ramps up linearly to  eda * h * level
//   BVP  amplitude scales by         1 + bvp * h
//   IBI  beat interval scales by     1 - ibi * h   (BVP beat rate follows)
//   ACC  noise sd scales by          1 + acc * h
// where h is the participant's heterogeneity factor for that channel group,
// drawn as 1 + heterogeneity_sd * N(0, 1).
//
// Every (participant, session, stream) pair draws from its own substream of
// the root seed, so sessions can be generated in any order or in parallel.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "aggpred/error.hpp"
#include "aggpred/ingest.hpp"
#include "aggpred/parallel.hpp"
#include "aggpred/random.hpp"
#include "aggpred/timeline.hpp"

namespace aggpred::synth {

inline constexpr std::uint64_t kDefaultSeed = 20180517;

struct EffectSizes {
  double eda = 0.005;
  double bvp = 0.01;
  double ibi = 0.003;
  double acc = 0.02;

  friend bool operator==(const EffectSizes&, const EffectSizes&) = default;
};

struct PopulationConfig {
  int n_participants = 15;
  int sessions_per_participant = 4;
  double session_duration = 3600.0;
  double episode_rate = 4.0;  // per hour
  double episode_duration_mean = 31.9;
  double episode_duration_sd = 33.2;
  double min_episode_duration = 5.0;
  double max_episode_duration = 300.0;
  double precursor_lead = 60.0;
  EffectSizes effects;
  double heterogeneity_sd = 1.0;
  double ibi_dropout = 0.2;  // probability a beat is missing from the IBI stream
  std::uint64_t seed = kDefaultSeed;

  void validate() const {
    auto finite = [](double v) { return std::isfinite(v); };
    if (n_participants <= 0 || sessions_per_participant <= 0) throw ConfigError("participant and session counts must be positive");
    if (!(session_duration > 0.0) || !finite(session_duration)) throw ConfigError("session_duration must be positive");
    if (!(episode_rate >= 0.0) || !finite(episode_rate)) throw ConfigError("episode_rate must be non-negative");
    if (!(episode_duration_mean > 0.0) || !(episode_duration_sd >= 0.0)) throw ConfigError("episode duration parameters invalid");
    if (!(min_episode_duration > 0.0) || !(max_episode_duration > min_episode_duration))
      throw ConfigError("episode duration bounds invalid");
    if (!(precursor_lead > 0.0) || !finite(precursor_lead)) throw ConfigError("precursor_lead must be positive");
    for (double e : {effects.eda, effects.bvp, effects.ibi, effects.acc})
      if (!finite(e)) throw ConfigError("effect sizes must be finite");
    if (!(heterogeneity_sd >= 0.0) || !finite(heterogeneity_sd)) throw ConfigError("heterogeneity_sd must be >= 0");
    if (!(ibi_dropout >= 0.0 && ibi_dropout < 1.0)) throw ConfigError("ibi_dropout must be in [0, 1)");
  }

  PopulationConfig without_effects() const {
    PopulationConfig c = *this;
    c.effects = {0.0, 0.0, 0.0, 0.0};
    return c;
  }

  nlohmann::ordered_json to_json() const {
    return {{"n_participants", n_participants},
            {"sessions_per_participant", sessions_per_participant},
            {"session_duration", session_duration},
            {"episode_rate", episode_rate},
            {"episode_duration_mean", episode_duration_mean},
            {"episode_duration_sd", episode_duration_sd},
            {"min_episode_duration", min_episode_duration},
            {"max_episode_duration", max_episode_duration},
            {"precursor_lead", precursor_lead},
            {"effects", {{"eda", effects.eda}, {"bvp", effects.bvp}, {"ibi", effects.ibi}, {"acc", effects.acc}}},
            {"heterogeneity_sd", heterogeneity_sd},
            {"ibi_dropout", ibi_dropout},
            {"seed", seed}};
  }

  // Missing keys keep their defaults.
  static PopulationConfig from_json(const nlohmann::json& j) {
    PopulationConfig c;
    c.n_participants = j.value("n_participants", c.n_participants);
    c.sessions_per_participant = j.value("sessions_per_participant", c.sessions_per_participant);
    c.session_duration = j.value("session_duration", c.session_duration);
    c.episode_rate = j.value("episode_rate", c.episode_rate);
    c.episode_duration_mean = j.value("episode_duration_mean", c.episode_duration_mean);
    c.episode_duration_sd = j.value("episode_duration_sd", c.episode_duration_sd);
    c.min_episode_duration = j.value("min_episode_duration", c.min_episode_duration);
    c.max_episode_duration = j.value("max_episode_duration", c.max_episode_duration);
    c.precursor_lead = j.value("precursor_lead", c.precursor_lead);
    if (j.contains("effects")) {
      const auto& e = j.at("effects");
      c.effects.eda = e.value("eda", c.effects.eda);
      c.effects.bvp = e.value("bvp", c.effects.bvp);
      c.effects.ibi = e.value("ibi", c.effects.ibi);
      c.effects.acc = e.value("acc", c.effects.acc);
    }
    c.heterogeneity_sd = j.value("heterogeneity_sd", c.heterogeneity_sd);
    c.ibi_dropout = j.value("ibi_dropout", c.ibi_dropout);
    c.seed = j.value("seed", c.seed);
    c.validate();
    return c;
  }
};

// Stationary per-participant generating parameters.
struct ParticipantProfile {
  double eda_level;
  double bvp_amplitude;
  double ibi_base;
  std::array<double, 3> acc_baseline;
  double acc_sd;
  // Heterogeneity factors per channel group.
  double h_eda, h_bvp, h_ibi, h_acc;
};

inline std::string participant_name(int p) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "P%02d", p + 1);
  return buf;
}

inline std::string session_name(int s) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "S%02d", s + 1);
  return buf;
}

inline ParticipantProfile participant_profile(const PopulationConfig& cfg, int p) {
  Rng rng(derive_seed(cfg.seed, {1, static_cast<std::uint64_t>(p)}));
  ParticipantProfile pr{};
  pr.eda_level = rng.uniform(1.0, 8.0);
  pr.bvp_amplitude = rng.uniform(40.0, 120.0);
  pr.ibi_base = rng.uniform(0.6, 0.95);
  for (double& b : pr.acc_baseline) b = std::round(rng.uniform(-60.0, 60.0));
  pr.acc_sd = rng.uniform(2.0, 6.0);
  pr.h_eda = 1.0 + cfg.heterogeneity_sd * rng.normal();
  pr.h_bvp = 1.0 + cfg.heterogeneity_sd * rng.normal();
  pr.h_ibi = 1.0 + cfg.heterogeneity_sd * rng.normal();
  pr.h_acc = 1.0 + cfg.heterogeneity_sd * rng.normal();
  return pr;
}

// Poisson arrivals on [0, duration) with truncated-normal durations.
inline std::vector<AggressionEpisode> draw_episodes(const PopulationConfig& cfg, int p, int s) {
  Rng rng(derive_seed(cfg.seed, {2, static_cast<std::uint64_t>(p), static_cast<std::uint64_t>(s)}));
  std::vector<AggressionEpisode> eps;
  if (cfg.episode_rate <= 0.0) return eps;
  const double per_second = cfg.episode_rate / 3600.0;
  for (double t = rng.exponential(per_second); t < cfg.session_duration; t += rng.exponential(per_second)) {
    double dur;
    do {
      dur = rng.normal(cfg.episode_duration_mean, cfg.episode_duration_sd);
    } while (dur < cfg.min_episode_duration || dur > cfg.max_episode_duration);
    eps.push_back({t, std::min(t + dur, cfg.session_duration)});
  }
  return merge_episodes(std::move(eps));
}

// Precursor position for time t: ramp in [0, 1) inside a window, -1 outside.
class PrecursorProfile {
 public:
  PrecursorProfile(std::span<const AggressionEpisode> episodes, double lead) : lead_(lead) {
    for (const auto& e : episodes) onsets_.push_back(e.start);
  }

  double ramp(double t) const noexcept {
    const auto it = std::upper_bound(onsets_.begin(), onsets_.end(), t);
    if (it == onsets_.end() || *it - lead_ > t) return -1.0;
    return (t - (*it - lead_)) / lead_;
  }

  bool inside(double t) const noexcept { return ramp(t) >= 0.0; }

 private:
  double lead_;
  std::vector<double> onsets_;
};

inline Session generate_session(const PopulationConfig& cfg, int p, int s) {
  const ParticipantProfile pr = participant_profile(cfg, p);
  std::vector<AggressionEpisode> episodes = draw_episodes(cfg, p, s);
  const PrecursorProfile pre(episodes, cfg.precursor_lead);
  const double T = cfg.session_duration;
  auto stream = [&](std::uint64_t channel) {
    return Rng(derive_seed(cfg.seed, {3, static_cast<std::uint64_t>(p), static_cast<std::uint64_t>(s), channel}));
  };
  const auto& fx = cfg.effects;
  auto interval_at = [&](double t) {
    const double factor = pre.inside(t) ? 1.0 - fx.ibi * pr.h_ibi : 1.0;
    return pr.ibi_base * std::clamp(factor, 0.5, 1.5);
  };

  // EDA: level + slow mean-reverting drift + measurement noise + ramp.
  std::vector<double> eda;
  {
    Rng rng = stream(0);
    const double rate = nominal_rate(ChannelId::EDA);
    const auto n = static_cast<std::size_t>(std::floor(T * rate));
    constexpr double phi = 0.999;
    const double drift_sd = 0.1 * std::sqrt(1.0 - phi * phi);
    double drift = 0.1 * rng.normal();
    eda.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double t = static_cast<double>(i) / rate;
      drift = phi * drift + drift_sd * rng.normal();
      const double r = pre.ramp(t);
      const double shift = r >= 0.0 ? fx.eda * pr.h_eda * pr.eda_level * r : 0.0;
      eda.push_back(std::max(0.01, pr.eda_level + drift + shift + 0.01 * rng.normal()));
    }
  }

  // BVP: sinusoidal pulse whose period follows the beat interval.
  std::vector<double> bvp;
  {
    Rng rng = stream(1);
    const double rate = nominal_rate(ChannelId::BVP);
    const auto n = static_cast<std::size_t>(std::floor(T * rate));
    double phase = 2.0 * std::numbers::pi * rng.uniform();
    bvp.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double t = static_cast<double>(i) / rate;
      const double amp = pr.bvp_amplitude * (pre.inside(t) ? std::max(0.1, 1.0 + fx.bvp * pr.h_bvp) : 1.0);
      bvp.push_back(amp * std::sin(phase) + 5.0 * rng.normal());
      phase += 2.0 * std::numbers::pi / (rate * interval_at(t));
    }
  }

  // IBI: beat times with jitter; each recorded beat carries its preceding interval.
  std::vector<double> beat_times, beat_values;
  {
    Rng rng = stream(2);
    double t = pr.ibi_base * rng.uniform();
    while (true) {
      const double ivl = std::clamp(interval_at(t) * (1.0 + 0.04 * rng.normal()), 0.3, 1.5);
      const bool keep = !rng.bernoulli(cfg.ibi_dropout);
      t += ivl;
      if (t > T) break;
      if (keep) {
        beat_times.push_back(t);
        beat_values.push_back(ivl);
      }
    }
  }

  // ACC: integer counts around a posture baseline.
  std::array<std::vector<double>, 3> acc;
  {
    const double rate = nominal_rate(ChannelId::ACC_X);
    const auto n = static_cast<std::size_t>(std::floor(T * rate));
    for (std::size_t a = 0; a < 3; ++a) {
      Rng rng = stream(3 + a);
      acc[a].reserve(n);
      for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / rate;
        const double sd = pr.acc_sd * (pre.inside(t) ? std::max(0.1, 1.0 + fx.acc * pr.h_acc) : 1.0);
        acc[a].push_back(std::round(pr.acc_baseline[a] + sd * rng.normal()));
      }
    }
  }

  std::array<SignalChannel, kChannelCount> channels = {
      SignalChannel::uniform(ChannelId::BVP, nominal_rate(ChannelId::BVP), 0.0, std::move(bvp)),
      SignalChannel::events(ChannelId::IBI, std::move(beat_times), std::move(beat_values)),
      SignalChannel::uniform(ChannelId::EDA, nominal_rate(ChannelId::EDA), 0.0, std::move(eda)),
      SignalChannel::uniform(ChannelId::ACC_X, nominal_rate(ChannelId::ACC_X), 0.0, std::move(acc[0])),
      SignalChannel::uniform(ChannelId::ACC_Y, nominal_rate(ChannelId::ACC_Y), 0.0, std::move(acc[1])),
      SignalChannel::uniform(ChannelId::ACC_Z, nominal_rate(ChannelId::ACC_Z), 0.0, std::move(acc[2]))};
  return Session(participant_name(p), session_name(s), T, std::move(channels), std::move(episodes));
}

// Sessions ordered by (participant, session).
inline std::vector<Session> generate_population(const PopulationConfig& cfg, unsigned threads = 0) {
  cfg.validate();
  const auto per = static_cast<std::size_t>(cfg.sessions_per_participant);
  const std::size_t total = static_cast<std::size_t>(cfg.n_participants) * per;
  std::vector<std::optional<Session>> slots(total);
  parallel_for(
      total,
      [&](std::size_t i) {
        slots[i].emplace(generate_session(cfg, static_cast<int>(i / per), static_cast<int>(i % per)));
      },
      threads);
  std::vector<Session> out;
  out.reserve(total);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

// Same population with every effect size forced to zero.
inline std::vector<Session> generate_null(const PopulationConfig& cfg, unsigned threads = 0) {
  return generate_population(cfg.without_effects(), threads);
}

inline constexpr double kDefaultStartEpoch = 1500000000.0;

// Writes every session in the export layout under `dir/<participant>_<session>/`
// plus `dir/population.json` listing the manifests.
inline std::filesystem::path write_population(std::span<const Session> sessions, const std::filesystem::path& dir,
                                              double start_epoch = kDefaultStartEpoch) {
  std::filesystem::create_directories(dir);
  nlohmann::ordered_json index;
  index["manifests"] = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < sessions.size(); ++i) {
    const auto& s = sessions[i];
    const std::string sub = s.participant_id() + "_" + s.session_id();
    // Distinct sessions start a day apart.
    ingest::write_session(s, dir / sub, start_epoch + 86400.0 * static_cast<double>(i));
    index["manifests"].push_back(sub + "/manifest.json");
  }
  const auto path = dir / "population.json";
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << index.dump(2) << '\n';
  return path;
}

}  // namespace aggpred::synth
