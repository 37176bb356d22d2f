#pragma once

// Global, person-dependent and k-hybrid training schemes.
//
// The k-hybrid scheme fits a global model, freezes the k features with the
// largest |standardized weight| (ties by layout order) together with their
// weights, and fits each participant's intercept and remaining d - k weights
// on that participant's samples with the frozen contribution as an offset.
// Frozen features use the global standardizer; free features use the
// participant's own training statistics.

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "aggpred/dataset.hpp"
#include "aggpred/error.hpp"
#include "aggpred/glm.hpp"
#include "aggpred/parallel.hpp"

namespace aggpred {

enum class SchemeKind { Global, PersonDependent, KHybrid };

constexpr std::string_view scheme_name(SchemeKind k) noexcept {
  switch (k) {
    case SchemeKind::Global: return "global";
    case SchemeKind::PersonDependent: return "person_dependent";
    case SchemeKind::KHybrid: return "k_hybrid";
  }
  return "?";
}

inline SchemeKind parse_scheme(std::string_view s) {
  if (s == "global") return SchemeKind::Global;
  if (s == "person_dependent" || s == "person-dependent" || s == "pd") return SchemeKind::PersonDependent;
  if (s == "k_hybrid" || s == "k-hybrid" || s == "hybrid") return SchemeKind::KHybrid;
  throw ConfigError("unknown scheme '" + std::string(s) + "'");
}

// Which features the hybrid ranking may freeze.
enum class RankPool { All, Biomarker };

constexpr std::string_view rank_pool_name(RankPool p) noexcept { return p == RankPool::All ? "all" : "biomarker"; }

inline RankPool parse_rank_pool(std::string_view s) {
  if (s == "all") return RankPool::All;
  if (s == "biomarker") return RankPool::Biomarker;
  throw ConfigError("unknown rank pool '" + std::string(s) + "'");
}

struct SchemeSpec {
  SchemeKind kind = SchemeKind::Global;
  int k = 0;  // K_HYBRID only
  double lambda = 1.0;
  FeatureSubset subset = FeatureSubset::All;
  Horizon horizon;
  RankPool rank_pool = RankPool::All;

  void validate(std::size_t d) const {
    if (kind != SchemeKind::KHybrid && k != 0) throw ConfigError("k is defined only for the k-hybrid scheme");
    if (k < 0 || static_cast<std::size_t>(k) > d)
      throw ConfigError("k = " + std::to_string(k) + " outside [0, " + std::to_string(d) + "]");
    if (!(lambda >= 0.0)) throw ConfigError("lambda must be non-negative");
  }
};

// Trained weights (intercepts excluded): d, d*S, or (d - k)*S + k.
constexpr std::size_t parameter_count(const SchemeSpec& spec, std::size_t d, std::size_t participants) {
  switch (spec.kind) {
    case SchemeKind::Global: return d;
    case SchemeKind::PersonDependent: return d * participants;
    case SchemeKind::KHybrid: {
      const auto k = static_cast<std::size_t>(spec.k);
      return (d - k) * participants + k;
    }
  }
  return 0;
}

struct FrozenFeature {
  std::size_t index = 0;
  std::string name;
  double weight = 0.0;  // in the global model's standardized space
  friend bool operator==(const FrozenFeature&, const FrozenFeature&) = default;
};

struct SchemeOptions {
  RankPool rank_pool = RankPool::All;
  glm::FitOptions fit;  // tolerance / iteration limits; offset and mask are set internally
  unsigned threads = 0;
  std::string fold;     // recorded in model metadata
  std::uint64_t seed = 0;
};

class TrainedScheme {
 public:
  SchemeKind kind() const noexcept { return kind_; }
  int k() const noexcept { return k_; }
  double lambda() const noexcept { return lambda_; }
  const std::string& layout_fingerprint() const noexcept { return fingerprint_; }
  std::size_t dim() const noexcept { return dim_; }
  const std::optional<glm::RidgeLogisticModel>& global_model() const noexcept { return global_; }
  const std::map<std::string, glm::RidgeLogisticModel>& participant_models() const noexcept { return participants_; }
  const std::vector<FrozenFeature>& frozen() const noexcept { return frozen_; }

  // Weights estimated by this scheme (intercepts excluded).
  std::size_t trained_weight_count() const noexcept {
    SchemeSpec spec;
    spec.kind = kind_;
    spec.k = k_;
    return parameter_count(spec, dim_, kind_ == SchemeKind::Global ? 1 : participants_.size());
  }

  // Frozen contribution for a raw sample; 0 outside the k-hybrid scheme.
  template <class Row>
  double frozen_offset(const Row& x) const {
    double z = 0.0;
    if (kind_ != SchemeKind::KHybrid || !global_) return z;
    const auto& st = global_->standardizer();
    for (const auto& f : frozen_) {
      const auto j = static_cast<Eigen::Index>(f.index);
      z += f.weight * st.apply(j, x[j]);
    }
    return z;
  }

  template <class Row>
  double logit_row(const std::string& participant, const Row& x) const {
    if (uses_global_only()) return global_->logit_row(x);
    const auto it = participants_.find(participant);
    if (it == participants_.end())
      throw RoutingError("participant '" + participant + "' has no model in the " +
                         std::string(scheme_name(kind_)) + " scheme");
    return it->second.logit_row(x) + frozen_offset(x);
  }

  double predict(const std::string& participant, std::span<const double> x) const {
    if (x.size() != dim_) throw LayoutError("sample width does not match scheme layout");
    return glm::sigmoid(logit_row(participant, x));
  }

  double predict(const FeatureVector& v) const {
    if (v.layout_fingerprint != fingerprint_) throw LayoutError("feature vector layout does not match scheme");
    return predict(v.participant_id, v.values);
  }

  // Probabilities for every row, routed by the row's participant.
  Eigen::VectorXd predict(const Dataset& ds) const {
    if (ds.dim() != dim_) throw LayoutError("dataset width does not match scheme layout");
    Eigen::VectorXd out(static_cast<Eigen::Index>(ds.size()));
    for (std::size_t i = 0; i < ds.size(); ++i) {
      const auto& who = ds.participants[static_cast<std::size_t>(ds.participant[i])];
      out[static_cast<Eigen::Index>(i)] = glm::sigmoid(logit_row(who, ds.X.row(static_cast<Eigen::Index>(i))));
    }
    return out;
  }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["type"] = "trained_scheme";
    j["kind"] = scheme_name(kind_);
    j["k"] = k_;
    j["lambda"] = lambda_;
    j["layout_fingerprint"] = fingerprint_;
    j["dim"] = dim_;
    j["global"] = global_ ? global_->to_json() : nlohmann::ordered_json(nullptr);
    j["participants"] = nlohmann::ordered_json::object();
    for (const auto& [id, m] : participants_) j["participants"][id] = m.to_json();
    j["frozen"] = nlohmann::ordered_json::array();
    for (const auto& f : frozen_) j["frozen"].push_back({{"index", f.index}, {"name", f.name}, {"weight", f.weight}});
    return j;
  }

  static TrainedScheme from_json(const nlohmann::json& j) {
    if (j.value("type", "") != "trained_scheme") throw DataError("not a trained_scheme document");
    TrainedScheme s;
    s.kind_ = parse_scheme(j.at("kind").get<std::string>());
    s.k_ = j.at("k").get<int>();
    s.lambda_ = j.at("lambda").get<double>();
    s.fingerprint_ = j.at("layout_fingerprint").get<std::string>();
    s.dim_ = j.at("dim").get<std::size_t>();
    if (!j.at("global").is_null()) s.global_ = glm::RidgeLogisticModel::from_json(j.at("global"));
    for (const auto& [id, m] : j.at("participants").items()) s.participants_.emplace(id, glm::RidgeLogisticModel::from_json(m));
    for (const auto& f : j.at("frozen"))
      s.frozen_.push_back({f.at("index").get<std::size_t>(), f.at("name").get<std::string>(), f.at("weight").get<double>()});
    return s;
  }

  friend bool operator==(const TrainedScheme&, const TrainedScheme&) = default;

 private:
  bool uses_global_only() const noexcept {
    return kind_ == SchemeKind::Global || (kind_ == SchemeKind::KHybrid && static_cast<std::size_t>(k_) == dim_);
  }

  friend TrainedScheme train_global(const Dataset&, double, const SchemeOptions&);
  friend TrainedScheme train_person_dependent(const Dataset&, double, const SchemeOptions&);
  friend TrainedScheme train_k_hybrid(const Dataset&, double, int, const SchemeOptions&,
                                      const glm::RidgeLogisticModel*);

  SchemeKind kind_ = SchemeKind::Global;
  int k_ = 0;
  double lambda_ = 1.0;
  std::string fingerprint_;
  std::size_t dim_ = 0;
  std::optional<glm::RidgeLogisticModel> global_;
  std::map<std::string, glm::RidgeLogisticModel> participants_;
  std::vector<FrozenFeature> frozen_;
};

// Person-dependent fits with fewer positives than this fall back to an
// intercept-only model.
inline constexpr std::size_t kMinPositivesPerParticipant = 2;

namespace detail {

inline std::map<int, std::vector<std::size_t>> rows_by_participant(const Dataset& ds) {
  std::map<int, std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < ds.size(); ++i) out[ds.participant[i]].push_back(i);
  return out;
}

// Intercept-only model at the clipped log-odds of the training prevalence.
inline glm::RidgeLogisticModel fallback_model(const Dataset& part, double lambda, const std::string& fingerprint) {
  const double p = static_cast<double>(part.positives()) / static_cast<double>(part.size());
  glm::FitDiagnostics dg;
  dg.single_class = part.positives() == 0 || part.positives() == part.size();
  return glm::RidgeLogisticModel(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(part.dim())), glm::clipped_log_odds(p),
                                 lambda, glm::Standardizer::fit(part.X), fingerprint, {}, dg);
}

// Fits every participant independently. `configure(part, options)` may add an
// offset and mask for the participant's rows.
template <class Configure>
std::map<std::string, glm::RidgeLogisticModel> fit_participants(const Dataset& train, double lambda,
                                                                const SchemeOptions& opts, std::string_view scheme,
                                                                Configure&& configure) {
  const auto groups = rows_by_participant(train);
  std::vector<std::pair<int, const std::vector<std::size_t>*>> work;
  for (const auto& [pid, rows] : groups) work.emplace_back(pid, &rows);
  std::vector<std::optional<glm::RidgeLogisticModel>> fitted(work.size());
  parallel_for(
      work.size(),
      [&](std::size_t w) {
        const Dataset part = train.rows(*work[w].second);
        const std::string& who = train.participants[static_cast<std::size_t>(work[w].first)];
        glm::RidgeLogisticModel model;
        if (part.positives() < kMinPositivesPerParticipant) {
          model = fallback_model(part, lambda, train.layout.fingerprint());
        } else {
          glm::FitOptions fo = opts.fit;
          fo.layout_fingerprint = train.layout.fingerprint();
          configure(part, fo);
          model = glm::fit(part.X, part.y, lambda, fo);
        }
        fitted[w] = model.with_metadata({std::string(scheme), who, opts.fold, opts.seed});
      },
      opts.threads);
  std::map<std::string, glm::RidgeLogisticModel> out;
  for (std::size_t w = 0; w < work.size(); ++w)
    out.emplace(train.participants[static_cast<std::size_t>(work[w].first)], std::move(*fitted[w]));
  return out;
}

}  // namespace detail

// One model over all participants' pooled samples.
inline TrainedScheme train_global(const Dataset& train, double lambda, const SchemeOptions& opts = {}) {
  if (train.size() == 0) throw DataError("global training set is empty");
  glm::FitOptions fo = opts.fit;
  fo.offset.reset();
  fo.free_mask.reset();
  fo.layout_fingerprint = train.layout.fingerprint();
  TrainedScheme s;
  s.kind_ = SchemeKind::Global;
  s.lambda_ = lambda;
  s.fingerprint_ = train.layout.fingerprint();
  s.dim_ = train.dim();
  s.global_ = glm::fit(train.X, train.y, lambda, fo).with_metadata({"global", "global", opts.fold, opts.seed});
  return s;
}

// One model per participant on that participant's samples.
inline TrainedScheme train_person_dependent(const Dataset& train, double lambda, const SchemeOptions& opts = {}) {
  if (train.size() == 0) throw DataError("person-dependent training set is empty");
  TrainedScheme s;
  s.kind_ = SchemeKind::PersonDependent;
  s.lambda_ = lambda;
  s.fingerprint_ = train.layout.fingerprint();
  s.dim_ = train.dim();
  s.participants_ = detail::fit_participants(train, lambda, opts, "person_dependent", [](const Dataset&, glm::FitOptions&) {});
  return s;
}

// Top-k features by |standardized weight| of `global`, ties by layout order.
inline std::vector<FrozenFeature> rank_features(const glm::RidgeLogisticModel& global, const FeatureLayout& layout,
                                                int k, RankPool pool) {
  std::vector<std::size_t> idx;
  for (std::size_t j = 0; j < layout.size(); ++j)
    if (pool == RankPool::All || layout[j].group != FeatureGroup::Temporal) idx.push_back(j);
  if (k < 0 || static_cast<std::size_t>(k) > idx.size())
    throw ConfigError("k = " + std::to_string(k) + " exceeds the " + std::to_string(idx.size()) + " rankable features");
  const auto& w = global.weights();
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return std::abs(w[static_cast<Eigen::Index>(a)]) > std::abs(w[static_cast<Eigen::Index>(b)]);
  });
  std::vector<FrozenFeature> out;
  for (int i = 0; i < k; ++i) {
    const std::size_t j = idx[static_cast<std::size_t>(i)];
    out.push_back({j, layout[j].name, w[static_cast<Eigen::Index>(j)]});
  }
  return out;
}

// k-hybrid scheme. `stage1`, when given, must be the global model fitted on
// this same training set; otherwise it is fitted here.
inline TrainedScheme train_k_hybrid(const Dataset& train, double lambda, int k, const SchemeOptions& opts = {},
                                    const glm::RidgeLogisticModel* stage1 = nullptr) {
  if (train.size() == 0) throw DataError("k-hybrid training set is empty");
  const std::size_t d = train.dim();
  if (k < 0 || static_cast<std::size_t>(k) > d) throw ConfigError("k outside [0, d]");
  TrainedScheme s;
  s.kind_ = SchemeKind::KHybrid;
  s.k_ = k;
  s.lambda_ = lambda;
  s.fingerprint_ = train.layout.fingerprint();
  s.dim_ = d;

  if (k == 0) {
    s.participants_ = detail::fit_participants(train, lambda, opts, "k_hybrid", [](const Dataset&, glm::FitOptions&) {});
    return s;
  }

  glm::RidgeLogisticModel global =
      stage1 ? *stage1 : train_global(train, lambda, opts).global_model().value();
  if (global.layout_fingerprint() != train.layout.fingerprint()) throw LayoutError("stage-1 model layout mismatch");
  s.frozen_ = rank_features(global, train.layout, k, opts.rank_pool);
  s.global_ = global.with_metadata({"k_hybrid", "global", opts.fold, opts.seed});
  if (static_cast<std::size_t>(k) == d) {
    // All weights shared: the global model verbatim for every participant.
    return s;
  }

  std::vector<bool> free(d, true);
  for (const auto& f : s.frozen_) free[f.index] = false;
  const TrainedScheme& frozen_view = s;
  s.participants_ = detail::fit_participants(train, lambda, opts, "k_hybrid", [&](const Dataset& part, glm::FitOptions& fo) {
    Eigen::VectorXd offset(static_cast<Eigen::Index>(part.size()));
    for (std::size_t i = 0; i < part.size(); ++i)
      offset[static_cast<Eigen::Index>(i)] = frozen_view.frozen_offset(part.X.row(static_cast<Eigen::Index>(i)));
    fo.offset = std::move(offset);
    fo.free_mask = free;
  });
  return s;
}

inline TrainedScheme train_scheme(const Dataset& train, const SchemeSpec& spec, SchemeOptions opts = {}) {
  spec.validate(train.dim());
  opts.rank_pool = spec.rank_pool;
  switch (spec.kind) {
    case SchemeKind::Global: return train_global(train, spec.lambda, opts);
    case SchemeKind::PersonDependent: return train_person_dependent(train, spec.lambda, opts);
    case SchemeKind::KHybrid: return train_k_hybrid(train, spec.lambda, spec.k, opts);
  }
  throw ConfigError("unknown scheme");
}

}  // namespace aggpred
