#pragma once

// Dense design matrix built from extracted feature vectors.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "aggpred/error.hpp"
#include "aggpred/features.hpp"
#include "aggpred/text.hpp"

namespace aggpred {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Dataset {
  FeatureLayout layout;
  RowMatrix X;                        // n x d, row per decision point
  std::vector<std::uint8_t> y;        // 1 = episode in the label window
  std::vector<int> participant;       // index into participants
  std::vector<std::string> participants;  // sorted unique ids
  std::vector<int> session;           // index into sessions
  std::vector<std::string> sessions;  // "participant/session" keys, sorted
  std::vector<double> t;

  explicit Dataset(FeatureLayout l) : layout(std::move(l)) {}

  std::size_t size() const noexcept { return y.size(); }
  std::size_t dim() const noexcept { return layout.size(); }

  std::size_t positives() const noexcept {
    return static_cast<std::size_t>(std::count(y.begin(), y.end(), std::uint8_t{1}));
  }

  Dataset rows(std::span<const std::size_t> idx) const {
    Dataset out(layout);
    out.participants = participants;
    out.sessions = sessions;
    out.X.resize(static_cast<Eigen::Index>(idx.size()), X.cols());
    for (std::size_t r = 0; r < idx.size(); ++r) {
      const auto i = idx[r];
      out.X.row(static_cast<Eigen::Index>(r)) = X.row(static_cast<Eigen::Index>(i));
      out.y.push_back(y[i]);
      out.participant.push_back(participant[i]);
      out.session.push_back(session[i]);
      out.t.push_back(t[i]);
    }
    return out;
  }

  // Column projection onto a narrower layout with the same past window.
  Dataset project(const FeatureLayout& narrower) const {
    const auto cols = narrower.projection_from(layout);
    Dataset out(narrower);
    out.X.resize(X.rows(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t c = 0; c < cols.size(); ++c)
      out.X.col(static_cast<Eigen::Index>(c)) = X.col(static_cast<Eigen::Index>(cols[c]));
    out.y = y;
    out.participant = participant;
    out.participants = participants;
    out.session = session;
    out.sessions = sessions;
    out.t = t;
    return out;
  }
};

inline Dataset make_dataset(const FeatureLayout& layout, const std::vector<FeatureVector>& vectors) {
  Dataset ds(layout);
  std::map<std::string, int> pid, sid;
  for (const auto& v : vectors) {
    pid.emplace(v.participant_id, 0);
    sid.emplace(v.participant_id + "/" + v.session_id, 0);
  }
  for (auto& [name, idx] : pid) {
    idx = static_cast<int>(ds.participants.size());
    ds.participants.push_back(name);
  }
  for (auto& [name, idx] : sid) {
    idx = static_cast<int>(ds.sessions.size());
    ds.sessions.push_back(name);
  }
  ds.X.resize(static_cast<Eigen::Index>(vectors.size()), static_cast<Eigen::Index>(layout.size()));
  for (std::size_t r = 0; r < vectors.size(); ++r) {
    const auto& v = vectors[r];
    if (v.layout_fingerprint != layout.fingerprint() || v.values.size() != layout.size())
      throw LayoutError("feature vector does not match layout " + layout.fingerprint());
    if (!v.label) throw DataError("dataset rows must be labeled");
    for (std::size_t c = 0; c < v.values.size(); ++c) {
      if (!std::isfinite(v.values[c])) throw DataError("non-finite feature value");
      ds.X(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = v.values[c];
    }
    ds.y.push_back(*v.label ? 1 : 0);
    ds.participant.push_back(pid.at(v.participant_id));
    ds.session.push_back(sid.at(v.participant_id + "/" + v.session_id));
    ds.t.push_back(v.t);
  }
  return ds;
}

// Flat CSV: feature names, then label, participant, session, t.
inline void write_dataset_csv(std::ostream& out, const Dataset& ds) {
  for (const auto& f : ds.layout.features()) out << f.name << ',';
  out << "label,participant,session,t\n";
  for (std::size_t r = 0; r < ds.size(); ++r) {
    for (Eigen::Index c = 0; c < ds.X.cols(); ++c)
      out << text::format_exact(ds.X(static_cast<Eigen::Index>(r), c)) << ',';
    const std::string& key = ds.sessions[static_cast<std::size_t>(ds.session[r])];
    const std::string& who = ds.participants[static_cast<std::size_t>(ds.participant[r])];
    out << int(ds.y[r]) << ',' << who << ',' << key.substr(who.size() + 1) << ','
        << text::format_exact(ds.t[r]) << '\n';
  }
}

}  // namespace aggpred
