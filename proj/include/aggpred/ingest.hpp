#pragma once

// Readers and writers for the wearable CSV export layout.
//
//   BVP.csv, EDA.csv   line 1: UTC start (s)   line 2: rate (Hz)   then one value per line
//   ACC.csv            same header repeated per column, rows "x,y,z"
//   IBI.csv            line 1: UTC start (s)[,IBI]   then "offset_s,interval_s"
//   annotations.csv    header "start_s,end_s,behavior", times relative to session start
//   manifest.json      participant_id, session_id, optional start_epoch, files{BVP,EDA,ACC,IBI,annotations}
//
// Session start is the earliest channel-file start (or the manifest's
// start_epoch when given); channels starting later get a positive offset.

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "aggpred/error.hpp"
#include "aggpred/text.hpp"
#include "aggpred/timeline.hpp"

namespace aggpred::ingest {

namespace fs = std::filesystem;

// Header and columns of one uniformly sampled export file.
struct UniformRecord {
  double start_epoch = 0.0;
  double rate = 0.0;
  std::vector<std::vector<double>> columns;
};

// IBI export: offsets are relative to the file's own start.
struct EventRecord {
  double start_epoch = 0.0;
  std::vector<double> offsets;
  std::vector<double> intervals;
};

namespace detail {

inline double header_value(std::string_view line, const std::string& source, std::size_t lineno,
                           std::size_t expect_cols, const char* what) {
  const auto fields = text::split(line, ',');
  if (fields.empty() || fields.size() > std::max<std::size_t>(expect_cols, 1))
    throw IngestError(source, lineno, std::string("malformed ") + what + " header");
  const auto first = text::parse_double(fields[0]);
  if (!first || !std::isfinite(*first))
    throw IngestError(source, lineno, std::string("malformed ") + what + " header");
  for (std::size_t i = 1; i < fields.size(); ++i) {
    const auto v = text::parse_double(fields[i]);
    if (!v || *v != *first) throw IngestError(source, lineno, std::string("inconsistent ") + what + " header");
  }
  return *first;
}

inline std::ifstream open(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw StructuralError("cannot open " + path.string());
  return in;
}

}  // namespace detail

// Parses a uniform-rate export with `columns` value columns.
inline UniformRecord parse_uniform(std::istream& in, const std::string& source, double expected_rate,
                                   std::size_t columns = 1) {
  std::string line;
  UniformRecord rec;
  if (!std::getline(in, line)) throw IngestError(source, 1, "missing start timestamp header");
  rec.start_epoch = detail::header_value(line, source, 1, columns, "start timestamp");
  if (!std::getline(in, line)) throw IngestError(source, 2, "missing sampling rate header");
  rec.rate = detail::header_value(line, source, 2, columns, "sampling rate");
  if (!(rec.rate > 0.0)) throw IngestError(source, 2, "sampling rate must be positive");
  if (rec.rate != expected_rate)
    throw IngestError(source, 2, "rate mismatch: file declares " + text::format_exact(rec.rate) +
                                     " Hz, expected " + text::format_exact(expected_rate) + " Hz");
  rec.columns.assign(columns, {});
  std::size_t lineno = 2;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    const auto fields = text::split(line, ',');
    if (fields.size() != columns)
      throw IngestError(source, lineno, "expected " + std::to_string(columns) + " column(s)");
    for (std::size_t c = 0; c < columns; ++c) {
      const auto v = text::parse_double(fields[c]);
      if (!v || !std::isfinite(*v)) throw IngestError(source, lineno, "non-numeric value");
      rec.columns[c].push_back(*v);
    }
  }
  return rec;
}

inline EventRecord parse_ibi(std::istream& in, const std::string& source) {
  std::string line;
  EventRecord rec;
  if (!std::getline(in, line)) throw IngestError(source, 1, "missing start timestamp header");
  {
    const auto fields = text::split(line, ',');
    const auto v = text::parse_double(fields[0]);
    if (!v || !std::isfinite(*v) || fields.size() > 2) throw IngestError(source, 1, "malformed start timestamp header");
    rec.start_epoch = *v;
  }
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    const auto fields = text::split(line, ',');
    if (fields.size() != 2) throw IngestError(source, lineno, "expected offset,interval");
    const auto off = text::parse_double(fields[0]);
    const auto ivl = text::parse_double(fields[1]);
    if (!off || !ivl || !std::isfinite(*off) || !std::isfinite(*ivl))
      throw IngestError(source, lineno, "non-numeric value");
    if (!rec.offsets.empty() && !(*off > rec.offsets.back()))
      throw IngestError(source, lineno, "beat offsets must be strictly increasing");
    rec.offsets.push_back(*off);
    rec.intervals.push_back(*ivl);
  }
  return rec;
}

// Parses "start_s,end_s,behavior" rows into a sorted, merged episode list.
// When `duration` is given, every episode must lie within [0, duration].
inline std::vector<AggressionEpisode> parse_annotations(std::istream& in, const std::string& source,
                                                        std::optional<double> duration = std::nullopt) {
  std::string line;
  std::vector<AggressionEpisode> episodes;
  if (!std::getline(in, line)) return episodes;
  {
    const auto h = text::split(line, ',');
    if (h.size() != 3 || h[0] != "start_s" || h[1] != "end_s" || h[2] != "behavior")
      throw IngestError(source, 1, "expected header start_s,end_s,behavior");
  }
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    const auto fields = text::split(line, ',');
    if (fields.size() != 3) throw IngestError(source, lineno, "expected start_s,end_s,behavior");
    const auto s = text::parse_double(fields[0]);
    const auto e = text::parse_double(fields[1]);
    if (!s || !e || !std::isfinite(*s) || !std::isfinite(*e)) throw IngestError(source, lineno, "non-numeric time");
    if (!(*e > *s)) throw IngestError(source, lineno, "invalid interval: end must exceed start");
    if (*s < 0.0 || (duration && *e > *duration))
      throw IngestError(source, lineno, "episode outside the session");
    // The behavior column is informational only; labels are binary.
    episodes.push_back({*s, *e});
  }
  return merge_episodes(std::move(episodes));
}

inline SignalChannel to_channel(ChannelId id, const UniformRecord& rec, std::size_t column, double session_start) {
  return SignalChannel::uniform(id, rec.rate, rec.start_epoch - session_start, rec.columns.at(column));
}

inline SignalChannel to_channel(const EventRecord& rec, double session_start) {
  const double shift = rec.start_epoch - session_start;
  std::vector<double> times = rec.offsets;
  for (double& t : times) t += shift;
  return SignalChannel::events(ChannelId::IBI, std::move(times), rec.intervals);
}

// Single-column uniform channel with offset relative to `session_start`
// (defaults to the file's own start).
inline SignalChannel read_uniform_channel(const fs::path& path, ChannelId id, double expected_rate,
                                          std::optional<double> session_start = std::nullopt) {
  auto in = detail::open(path);
  const auto rec = parse_uniform(in, path.string(), expected_rate, 1);
  return to_channel(id, rec, 0, session_start.value_or(rec.start_epoch));
}

// ACC export split into its three axis channels.
inline std::array<SignalChannel, 3> read_acc_channels(const fs::path& path, double expected_rate,
                                                      std::optional<double> session_start = std::nullopt) {
  auto in = detail::open(path);
  const auto rec = parse_uniform(in, path.string(), expected_rate, 3);
  const double s = session_start.value_or(rec.start_epoch);
  return {to_channel(ChannelId::ACC_X, rec, 0, s), to_channel(ChannelId::ACC_Y, rec, 1, s),
          to_channel(ChannelId::ACC_Z, rec, 2, s)};
}

inline SignalChannel read_ibi_channel(const fs::path& path, std::optional<double> session_start = std::nullopt) {
  auto in = detail::open(path);
  const auto rec = parse_ibi(in, path.string());
  return to_channel(rec, session_start.value_or(rec.start_epoch));
}

inline std::vector<AggressionEpisode> read_annotations(const fs::path& path,
                                                       std::optional<double> duration = std::nullopt) {
  auto in = detail::open(path);
  return parse_annotations(in, path.string(), duration);
}

struct SessionManifest {
  std::string participant_id;
  std::string session_id;
  std::optional<double> start_epoch;
  fs::path bvp, eda, acc, ibi, annotations;

  // Reads a manifest document; relative file paths resolve against its directory.
  static SessionManifest read(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw StructuralError("cannot open manifest " + path.string());
    nlohmann::json doc;
    try {
      in >> doc;
    } catch (const nlohmann::json::exception& e) {
      throw IngestError(path.string(), 0, std::string("malformed manifest: ") + e.what());
    }
    return from_json(doc, path.parent_path());
  }

  static SessionManifest from_json(const nlohmann::json& doc, const fs::path& base) {
    auto require = [&](const nlohmann::json& obj, const char* key) -> const nlohmann::json& {
      if (!obj.is_object() || !obj.contains(key)) throw StructuralError(std::string("manifest missing '") + key + "'");
      return obj.at(key);
    };
    SessionManifest m;
    m.participant_id = require(doc, "participant_id").get<std::string>();
    m.session_id = require(doc, "session_id").get<std::string>();
    if (doc.contains("start_epoch")) m.start_epoch = doc.at("start_epoch").get<double>();
    const auto& files = require(doc, "files");
    auto file = [&](const char* key) {
      fs::path p = require(files, key).get<std::string>();
      return p.is_absolute() ? p : base / p;
    };
    m.bvp = file("BVP");
    m.eda = file("EDA");
    m.acc = file("ACC");
    m.ibi = file("IBI");
    m.annotations = file("annotations");
    return m;
  }
};

// Assembles a session from its manifest; duration is the furthest channel extent.
inline Session load_session(const SessionManifest& m) {
  for (const auto* p : {&m.bvp, &m.eda, &m.acc, &m.ibi, &m.annotations})
    if (!fs::exists(*p)) throw StructuralError("session " + m.session_id + ": missing file " + p->string());

  auto open_parse_uniform = [](const fs::path& p, double rate, std::size_t cols) {
    auto in = detail::open(p);
    return parse_uniform(in, p.string(), rate, cols);
  };
  const auto bvp = open_parse_uniform(m.bvp, nominal_rate(ChannelId::BVP), 1);
  const auto eda = open_parse_uniform(m.eda, nominal_rate(ChannelId::EDA), 1);
  const auto acc = open_parse_uniform(m.acc, nominal_rate(ChannelId::ACC_X), 3);
  EventRecord ibi;
  {
    auto in = detail::open(m.ibi);
    ibi = parse_ibi(in, m.ibi.string());
  }

  const double earliest = std::min({bvp.start_epoch, eda.start_epoch, acc.start_epoch, ibi.start_epoch});
  const double start = m.start_epoch.value_or(earliest);
  if (start > earliest)
    throw ValidationError("session " + m.session_id + ": manifest start_epoch is after a channel start");

  std::array<SignalChannel, kChannelCount> channels = {
      to_channel(ChannelId::BVP, bvp, 0, start),    to_channel(ibi, start),
      to_channel(ChannelId::EDA, eda, 0, start),    to_channel(ChannelId::ACC_X, acc, 0, start),
      to_channel(ChannelId::ACC_Y, acc, 1, start), to_channel(ChannelId::ACC_Z, acc, 2, start)};
  double duration = 0.0;
  for (const auto& c : channels) duration = std::max(duration, c.extent());
  if (!(duration > 0.0)) throw ValidationError("session " + m.session_id + ": no channel data");

  std::vector<AggressionEpisode> episodes;
  try {
    episodes = read_annotations(m.annotations, duration);
  } catch (const IngestError& e) {
    throw ValidationError(std::string("session ") + m.session_id + ": " + e.what());
  }
  return Session(m.participant_id, m.session_id, duration, std::move(channels), std::move(episodes));
}

inline Session load_session(const fs::path& manifest_path) { return load_session(SessionManifest::read(manifest_path)); }

// Manifest paths listed by a population document {"manifests": [...]},
// resolved against its directory.
inline std::vector<fs::path> read_population_index(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw StructuralError("cannot open population index " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw IngestError(path.string(), 0, std::string("malformed population index: ") + e.what());
  }
  if (!doc.contains("manifests") || !doc.at("manifests").is_array())
    throw StructuralError(path.string() + ": expected a 'manifests' list");
  std::vector<fs::path> out;
  for (const auto& m : doc.at("manifests")) {
    fs::path p = m.get<std::string>();
    out.push_back(p.is_absolute() ? p : path.parent_path() / p);
  }
  return out;
}

// Loads either a single session manifest or a population index (a file or a
// directory containing population.json).
inline std::vector<Session> load_sessions(const fs::path& path) {
  fs::path p = path;
  if (fs::is_directory(p)) p /= "population.json";
  std::ifstream in(p);
  if (!in) throw StructuralError("cannot open " + p.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw IngestError(p.string(), 0, std::string("malformed document: ") + e.what());
  }
  std::vector<Session> out;
  if (doc.contains("manifests")) {
    for (const auto& m : read_population_index(p)) out.push_back(load_session(m));
  } else {
    out.push_back(load_session(SessionManifest::from_json(doc, p.parent_path())));
  }
  return out;
}

// ---- writers ----

namespace detail {

inline void write_uniform(std::ostream& out, double start_epoch, double rate,
                          const std::vector<const SignalChannel*>& cols) {
  auto repeat = [&](const std::string& v) {
    for (std::size_t c = 0; c < cols.size(); ++c) out << (c ? "," : "") << v;
    out << '\n';
  };
  repeat(text::format_exact(start_epoch));
  repeat(text::format_exact(rate));
  const std::size_t n = cols.front()->size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < cols.size(); ++c) out << (c ? "," : "") << text::format_exact(cols[c]->samples()[i]);
    out << '\n';
  }
}

inline std::ofstream create(const fs::path& p) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error("cannot write " + p.string());
  return out;
}

}  // namespace detail

// Writes a session in the export layout plus a manifest.json; returns the
// manifest path. Uniform channels must share a start offset per file.
inline fs::path write_session(const Session& s, const fs::path& dir, double start_epoch) {
  fs::create_directories(dir);
  const auto& acc_x = s.channel(ChannelId::ACC_X);
  const auto& acc_y = s.channel(ChannelId::ACC_Y);
  const auto& acc_z = s.channel(ChannelId::ACC_Z);
  if (acc_x.size() != acc_y.size() || acc_x.size() != acc_z.size() ||
      acc_x.start_offset() != acc_y.start_offset() || acc_x.start_offset() != acc_z.start_offset())
    throw DataError("ACC axes must be aligned to share one export file");
  {
    auto out = detail::create(dir / "BVP.csv");
    const auto& c = s.channel(ChannelId::BVP);
    detail::write_uniform(out, start_epoch + c.start_offset(), c.sample_rate(), {&c});
  }
  {
    auto out = detail::create(dir / "EDA.csv");
    const auto& c = s.channel(ChannelId::EDA);
    detail::write_uniform(out, start_epoch + c.start_offset(), c.sample_rate(), {&c});
  }
  {
    auto out = detail::create(dir / "ACC.csv");
    detail::write_uniform(out, start_epoch + acc_x.start_offset(), acc_x.sample_rate(), {&acc_x, &acc_y, &acc_z});
  }
  {
    auto out = detail::create(dir / "IBI.csv");
    const auto& c = s.channel(ChannelId::IBI);
    out << text::format_exact(start_epoch) << ",IBI\n";
    for (std::size_t i = 0; i < c.size(); ++i)
      out << text::format_exact(c.event_times()[i]) << ',' << text::format_exact(c.samples()[i]) << '\n';
  }
  {
    auto out = detail::create(dir / "annotations.csv");
    out << "start_s,end_s,behavior\n";
    for (const auto& e : s.episodes())
      out << text::format_exact(e.start) << ',' << text::format_exact(e.end) << ",aggression\n";
  }
  nlohmann::ordered_json doc;
  doc["participant_id"] = s.participant_id();
  doc["session_id"] = s.session_id();
  doc["start_epoch"] = start_epoch;
  doc["files"] = {{"BVP", "BVP.csv"}, {"EDA", "EDA.csv"}, {"ACC", "ACC.csv"}, {"IBI", "IBI.csv"},
                  {"annotations", "annotations.csv"}};
  const fs::path manifest = dir / "manifest.json";
  auto out = detail::create(manifest);
  out << doc.dump(2) << '\n';
  return manifest;
}

}  // namespace aggpred::ingest
