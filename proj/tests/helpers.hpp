#pragma once

#include <array>
#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include <unistd.h>

#include "aggpred/random.hpp"
#include "aggpred/timeline.hpp"

namespace testutil {

using namespace aggpred;

// Noise channels at nominal rates spanning `duration`; IBI beats every `ibi` s.
inline std::array<SignalChannel, kChannelCount> noise_channels(double duration, std::uint64_t seed, double ibi = 0.8) {
  Rng rng(seed);
  auto uniform = [&](ChannelId id, double mean, double sd) {
    const double rate = nominal_rate(id);
    std::vector<double> v(static_cast<std::size_t>(std::floor(duration * rate)));
    for (double& x : v) x = mean + sd * rng.normal();
    return SignalChannel::uniform(id, rate, 0.0, std::move(v));
  };
  std::vector<double> times, values;
  for (double t = ibi; t <= duration; t += ibi) {
    times.push_back(t);
    values.push_back(ibi + 0.01 * rng.normal());
  }
  return {uniform(ChannelId::BVP, 0.0, 50.0), SignalChannel::events(ChannelId::IBI, times, values),
          uniform(ChannelId::EDA, 2.0, 0.1),  uniform(ChannelId::ACC_X, 0.0, 3.0),
          uniform(ChannelId::ACC_Y, 10.0, 3.0), uniform(ChannelId::ACC_Z, 60.0, 3.0)};
}

inline Session noise_session(double duration, std::vector<AggressionEpisode> episodes = {}, std::uint64_t seed = 1,
                             std::string participant = "P01", std::string session = "S01") {
  return Session(std::move(participant), std::move(session), duration, noise_channels(duration, seed),
                 std::move(episodes));
}

struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& tag) {
    path = std::filesystem::temp_directory_path() /
           ("aggpred_" + tag + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
};

}  // namespace testutil
