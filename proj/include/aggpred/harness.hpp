#pragma once

// Cross-validated evaluation sweeps and report emission.
//
// One fold plan is drawn per horizon and shared by every subset and scheme of
// that horizon. Features are extracted once per horizon for the widest layout
// and projected onto each subset. Within one (subset, repeat, fold) unit the
// global fit is computed once and reused as stage 1 of every k-hybrid cell.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "aggpred/dataset.hpp"
#include "aggpred/error.hpp"
#include "aggpred/features.hpp"
#include "aggpred/folds.hpp"
#include "aggpred/glm.hpp"
#include "aggpred/ingest.hpp"
#include "aggpred/parallel.hpp"
#include "aggpred/roc.hpp"
#include "aggpred/schemes.hpp"
#include "aggpred/synthgen.hpp"
#include "aggpred/text.hpp"
#include "aggpred/timeline.hpp"

namespace aggpred {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

enum class DataSource { Synthetic, Null, Manifests };

constexpr std::string_view data_source_name(DataSource s) noexcept {
  switch (s) {
    case DataSource::Synthetic: return "synthetic";
    case DataSource::Null: return "null";
    case DataSource::Manifests: return "manifests";
  }
  return "?";
}

inline DataSource parse_data_source(std::string_view s) {
  if (s == "synthetic") return DataSource::Synthetic;
  if (s == "null") return DataSource::Null;
  if (s == "manifests") return DataSource::Manifests;
  throw ConfigError("unknown data source '" + std::string(s) + "'");
}

struct ExperimentConfig {
  DataSource source = DataSource::Synthetic;
  synth::PopulationConfig population;
  std::string data_path;  // manifests source: directory, index or single manifest

  std::vector<int> tau_p{60};
  std::vector<int> tau_f{60};
  std::vector<FeatureSubset> subsets{FeatureSubset::All};
  std::vector<SchemeKind> schemes{SchemeKind::Global, SchemeKind::PersonDependent};
  std::vector<int> k{10, 100};

  double lambda = 1.0;
  bool select_lambda = false;
  std::vector<double> lambda_grid{0.01, 0.1, 1.0, 10.0, 100.0};
  int folds = 5;
  int repeats = 5;
  std::uint64_t seed = synth::kDefaultSeed;
  bool stratified = true;
  FoldUnit fold_unit = FoldUnit::Sample;
  RankPool rank_pool = RankPool::All;
  bool exclude_ongoing = false;
  double band_level = 0.90;
  bool svg = true;
  unsigned threads = 0;  // not part of the result; 0 = all cores

  void validate() const {
    if (tau_p.empty() || tau_f.empty() || subsets.empty() || schemes.empty())
      throw ConfigError("sweep lists must be non-empty");
    if (std::find(schemes.begin(), schemes.end(), SchemeKind::KHybrid) != schemes.end() && k.empty())
      throw ConfigError("k_hybrid needs at least one k");
    for (int v : k)
      if (v < 0) throw ConfigError("k must be non-negative");
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ConfigError("lambda must be finite and non-negative");
    if (select_lambda && lambda_grid.empty()) throw ConfigError("lambda_grid is empty");
    for (double l : lambda_grid)
      if (!(l >= 0.0) || !std::isfinite(l)) throw ConfigError("lambda_grid values must be finite and non-negative");
    if (folds < 2) throw ConfigError("folds must be >= 2");
    if (repeats < 1) throw ConfigError("repeats must be >= 1");
    if (!(band_level > 0.0 && band_level < 1.0)) throw ConfigError("band_level must be in (0, 1)");
    if (source == DataSource::Manifests && data_path.empty()) throw ConfigError("manifests source needs a path");
    if (source != DataSource::Manifests) population.validate();
  }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json data{{"source", data_source_name(source)}};
    if (source == DataSource::Manifests)
      data["path"] = data_path;
    else
      data["population"] = population.to_json();
    nlohmann::ordered_json subs = nlohmann::ordered_json::array();
    for (auto s : subsets) subs.push_back(subset_name(s));
    nlohmann::ordered_json sch = nlohmann::ordered_json::array();
    for (auto s : schemes) sch.push_back(scheme_name(s));
    return {{"data", data},
            {"tau_p", tau_p},
            {"tau_f", tau_f},
            {"subsets", subs},
            {"schemes", sch},
            {"k", k},
            {"lambda", lambda},
            {"select_lambda", select_lambda},
            {"lambda_grid", lambda_grid},
            {"folds", folds},
            {"repeats", repeats},
            {"seed", seed},
            {"stratified", stratified},
            {"fold_unit", fold_unit_name(fold_unit)},
            {"rank_pool", rank_pool_name(rank_pool)},
            {"exclude_ongoing", exclude_ongoing},
            {"band_level", band_level},
            {"svg", svg}};
  }

  // Missing keys keep their defaults. A synthetic population without its
  // own seed inherits the top-level seed.
  static ExperimentConfig from_json(const nlohmann::json& j) {
    ExperimentConfig c;
    try {
      c.seed = j.value("seed", c.seed);
      c.population.seed = c.seed;
      if (j.contains("data")) {
        const auto& d = j.at("data");
        c.source = parse_data_source(d.value("source", std::string("synthetic")));
        c.data_path = d.value("path", std::string());
        if (d.contains("population")) {
          nlohmann::json pop = d.at("population");
          if (!pop.contains("seed")) pop["seed"] = c.seed;
          c.population = synth::PopulationConfig::from_json(pop);
        }
      }
      c.tau_p = j.value("tau_p", c.tau_p);
      c.tau_f = j.value("tau_f", c.tau_f);
      if (j.contains("subsets")) {
        c.subsets.clear();
        for (const auto& s : j.at("subsets")) c.subsets.push_back(parse_subset(s.get<std::string>()));
      }
      if (j.contains("schemes")) {
        c.schemes.clear();
        for (const auto& s : j.at("schemes")) c.schemes.push_back(parse_scheme(s.get<std::string>()));
      }
      c.k = j.value("k", c.k);
      c.lambda = j.value("lambda", c.lambda);
      c.select_lambda = j.value("select_lambda", c.select_lambda);
      c.lambda_grid = j.value("lambda_grid", c.lambda_grid);
      c.folds = j.value("folds", c.folds);
      c.repeats = j.value("repeats", c.repeats);
      c.stratified = j.value("stratified", c.stratified);
      if (j.contains("fold_unit")) c.fold_unit = parse_fold_unit(j.at("fold_unit").get<std::string>());
      if (j.contains("rank_pool")) c.rank_pool = parse_rank_pool(j.at("rank_pool").get<std::string>());
      c.exclude_ongoing = j.value("exclude_ongoing", c.exclude_ongoing);
      c.band_level = j.value("band_level", c.band_level);
      c.svg = j.value("svg", c.svg);
      c.threads = j.value("threads", c.threads);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("malformed experiment config: ") + e.what());
    }
    c.validate();
    return c;
  }

  static ExperimentConfig read(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path.string());
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(path.string() + ": " + e.what());
    }
    return from_json(j);
  }
};

struct CellKey {
  int tau_p = 60;
  int tau_f = 60;
  FeatureSubset subset = FeatureSubset::All;
  SchemeKind scheme = SchemeKind::Global;
  int k = 0;

  auto tie() const { return std::tuple(tau_p, tau_f, static_cast<int>(subset), static_cast<int>(scheme), k); }
  friend bool operator<(const CellKey& a, const CellKey& b) { return a.tie() < b.tie(); }
  friend bool operator==(const CellKey& a, const CellKey& b) { return a.tie() == b.tie(); }

  // Filesystem-safe identifier.
  std::string id() const {
    std::string sub(subset_name(subset));
    std::replace(sub.begin(), sub.end(), '+', '_');
    std::string out = "tp" + std::to_string(tau_p) + "_tf" + std::to_string(tau_f) + "_" + sub + "_" +
                      std::string(scheme_name(scheme));
    if (scheme == SchemeKind::KHybrid) out += "_k" + std::to_string(k);
    return out;
  }
};

enum class CellStatus { Ok, Failed, Skipped };

constexpr std::string_view cell_status_name(CellStatus s) noexcept {
  switch (s) {
    case CellStatus::Ok: return "ok";
    case CellStatus::Failed: return "failed";
    case CellStatus::Skipped: return "skipped";
  }
  return "?";
}

inline CellStatus parse_cell_status(std::string_view s) {
  if (s == "ok") return CellStatus::Ok;
  if (s == "failed") return CellStatus::Failed;
  if (s == "skipped") return CellStatus::Skipped;
  throw DataError("unknown cell status '" + std::string(s) + "'");
}

struct CellResult {
  CellKey key;
  CellStatus status = CellStatus::Ok;
  std::string reason;
  std::size_t d = 0;
  std::size_t parameters = 0;
  std::size_t participants = 0;
  std::size_t samples = 0;
  std::size_t positives = 0;

  std::vector<double> repeat_auc;                // global: pooled; others: mean over participants
  std::vector<std::vector<double>> fold_auc;     // [repeat][fold], pooled over the test fold
  std::vector<std::vector<double>> lambdas;      // [repeat][fold] ridge strength used
  std::map<std::string, double> participant_auc;  // averaged over repeats
  std::map<std::string, std::vector<double>> participant_repeat_auc;
  double auc_mean = kNaN;
  double auc_sd = kNaN;
  double auc_min = kNaN;
  double auc_max = kNaN;
  std::vector<std::string> flags;
  std::vector<RocCurve> curves;  // pooled out-of-fold curve per repeat
  std::optional<RocBand> band;
};

struct HorizonSummary {
  int tau_p = 60;
  int tau_f = 60;
  std::size_t samples = 0;
  std::size_t positives = 0;
  std::size_t participants = 0;
  std::size_t sessions = 0;
  std::string error;
};

namespace detail {

inline nlohmann::ordered_json num(double v) { return std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json(nullptr); }

inline double num(const nlohmann::json& j) { return j.is_null() ? kNaN : j.get<double>(); }

inline nlohmann::ordered_json nums(const std::vector<double>& v) {
  auto a = nlohmann::ordered_json::array();
  for (double x : v) a.push_back(num(x));
  return a;
}

inline std::vector<double> nums(const nlohmann::json& j) {
  std::vector<double> out;
  for (const auto& x : j) out.push_back(num(x));
  return out;
}

}  // namespace detail

struct EvaluationReport {
  ExperimentConfig config;
  std::vector<HorizonSummary> horizons;
  std::vector<CellResult> cells;  // sorted by key

  bool all_ok() const {
    return std::all_of(cells.begin(), cells.end(), [](const CellResult& c) { return c.status != CellStatus::Failed; });
  }

  const CellResult* find(const CellKey& key) const {
    const auto it = std::lower_bound(cells.begin(), cells.end(), key,
                                     [](const CellResult& c, const CellKey& k) { return c.key < k; });
    return it != cells.end() && it->key == key ? &*it : nullptr;
  }

  nlohmann::ordered_json to_json() const {
    using detail::num;
    using detail::nums;
    nlohmann::ordered_json j;
    j["type"] = "evaluation_report";
    j["config"] = config.to_json();
    j["horizons"] = nlohmann::ordered_json::array();
    for (const auto& h : horizons)
      j["horizons"].push_back({{"tau_p", h.tau_p},
                               {"tau_f", h.tau_f},
                               {"samples", h.samples},
                               {"positives", h.positives},
                               {"participants", h.participants},
                               {"sessions", h.sessions},
                               {"error", h.error}});
    j["cells"] = nlohmann::ordered_json::array();
    for (const auto& c : cells) {
      nlohmann::ordered_json cj;
      cj["tau_p"] = c.key.tau_p;
      cj["tau_f"] = c.key.tau_f;
      cj["subset"] = subset_name(c.key.subset);
      cj["scheme"] = scheme_name(c.key.scheme);
      cj["k"] = c.key.k;
      cj["status"] = cell_status_name(c.status);
      cj["reason"] = c.reason;
      cj["d"] = c.d;
      cj["parameters"] = c.parameters;
      cj["participants"] = c.participants;
      cj["samples"] = c.samples;
      cj["positives"] = c.positives;
      cj["auc_mean"] = num(c.auc_mean);
      cj["auc_sd"] = num(c.auc_sd);
      cj["auc_min"] = num(c.auc_min);
      cj["auc_max"] = num(c.auc_max);
      cj["repeat_auc"] = nums(c.repeat_auc);
      cj["fold_auc"] = nlohmann::ordered_json::array();
      for (const auto& r : c.fold_auc) cj["fold_auc"].push_back(nums(r));
      cj["lambdas"] = nlohmann::ordered_json::array();
      for (const auto& r : c.lambdas) cj["lambdas"].push_back(nums(r));
      cj["participant_auc"] = nlohmann::ordered_json::object();
      for (const auto& [p, v] : c.participant_auc) cj["participant_auc"][p] = num(v);
      cj["participant_repeat_auc"] = nlohmann::ordered_json::object();
      for (const auto& [p, v] : c.participant_repeat_auc) cj["participant_repeat_auc"][p] = nums(v);
      cj["flags"] = c.flags;
      cj["curves"] = nlohmann::ordered_json::array();
      for (const auto& curve : c.curves) {
        nlohmann::ordered_json pts = nlohmann::ordered_json::array();
        for (const auto& p : curve.points) pts.push_back({p.fpr, p.tpr});
        cj["curves"].push_back({{"samples", curve.samples}, {"positives", curve.positives}, {"points", pts}});
      }
      if (c.band)
        cj["band"] = {{"level", c.band->level},
                      {"fpr", c.band->fpr},
                      {"mean", c.band->mean},
                      {"lower", c.band->lower},
                      {"upper", c.band->upper}};
      else
        cj["band"] = nullptr;
      j["cells"].push_back(std::move(cj));
    }
    return j;
  }

  static EvaluationReport from_json(const nlohmann::json& j) {
    using detail::num;
    using detail::nums;
    if (j.value("type", "") != "evaluation_report") throw DataError("not an evaluation_report document");
    EvaluationReport r;
    try {
      r.config = ExperimentConfig::from_json(j.at("config"));
      for (const auto& h : j.at("horizons"))
        r.horizons.push_back({h.at("tau_p").get<int>(), h.at("tau_f").get<int>(), h.at("samples").get<std::size_t>(),
                              h.at("positives").get<std::size_t>(), h.at("participants").get<std::size_t>(),
                              h.at("sessions").get<std::size_t>(), h.at("error").get<std::string>()});
      for (const auto& cj : j.at("cells")) {
        CellResult c;
        c.key = {cj.at("tau_p").get<int>(), cj.at("tau_f").get<int>(), parse_subset(cj.at("subset").get<std::string>()),
                 parse_scheme(cj.at("scheme").get<std::string>()), cj.at("k").get<int>()};
        c.status = parse_cell_status(cj.at("status").get<std::string>());
        c.reason = cj.at("reason").get<std::string>();
        c.d = cj.at("d").get<std::size_t>();
        c.parameters = cj.at("parameters").get<std::size_t>();
        c.participants = cj.at("participants").get<std::size_t>();
        c.samples = cj.at("samples").get<std::size_t>();
        c.positives = cj.at("positives").get<std::size_t>();
        c.auc_mean = num(cj.at("auc_mean"));
        c.auc_sd = num(cj.at("auc_sd"));
        c.auc_min = num(cj.at("auc_min"));
        c.auc_max = num(cj.at("auc_max"));
        c.repeat_auc = nums(cj.at("repeat_auc"));
        for (const auto& f : cj.at("fold_auc")) c.fold_auc.push_back(nums(f));
        for (const auto& f : cj.at("lambdas")) c.lambdas.push_back(nums(f));
        for (const auto& [p, v] : cj.at("participant_auc").items()) c.participant_auc[p] = num(v);
        for (const auto& [p, v] : cj.at("participant_repeat_auc").items()) c.participant_repeat_auc[p] = nums(v);
        c.flags = cj.at("flags").get<std::vector<std::string>>();
        for (const auto& cv : cj.at("curves")) {
          RocCurve curve;
          curve.samples = cv.at("samples").get<std::size_t>();
          curve.positives = cv.at("positives").get<std::size_t>();
          for (const auto& p : cv.at("points")) curve.points.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
          c.curves.push_back(std::move(curve));
        }
        if (!cj.at("band").is_null()) {
          const auto& b = cj.at("band");
          c.band = RocBand{b.at("fpr").get<std::vector<double>>(), b.at("mean").get<std::vector<double>>(),
                           b.at("lower").get<std::vector<double>>(), b.at("upper").get<std::vector<double>>(),
                           b.at("level").get<double>()};
        }
        r.cells.push_back(std::move(c));
      }
    } catch (const nlohmann::json::exception& e) {
      throw DataError(std::string("malformed evaluation report: ") + e.what());
    }
    std::sort(r.cells.begin(), r.cells.end(), [](const CellResult& a, const CellResult& b) { return a.key < b.key; });
    return r;
  }
};

// Optional callbacks; none of them affect results unless they edit data.
struct RunHooks {
  // Called on every (subset, repeat, fold) split before any fitting.
  std::function<void(const CellKey& unit, Dataset& train, Dataset& test)> transform_split;
  std::function<void(const std::string&)> progress;
};

// Drops interior points of horizontal and vertical runs; the polyline, its
// area and every interpolated TPR are unchanged.
inline RocCurve compact_curve(const RocCurve& c) {
  RocCurve out;
  out.samples = c.samples;
  out.positives = c.positives;
  const auto& p = c.points;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (i > 0 && i + 1 < p.size()) {
      const bool vertical = p[i - 1].fpr == p[i].fpr && p[i].fpr == p[i + 1].fpr;
      const bool horizontal = p[i - 1].tpr == p[i].tpr && p[i].tpr == p[i + 1].tpr;
      if (vertical || horizontal) continue;
    }
    out.points.push_back(p[i]);
  }
  return out;
}

inline std::vector<Session> load_population(const ExperimentConfig& cfg) {
  switch (cfg.source) {
    case DataSource::Synthetic: return synth::generate_population(cfg.population, cfg.threads);
    case DataSource::Null: return synth::generate_null(cfg.population, cfg.threads);
    case DataSource::Manifests: return ingest::load_sessions(cfg.data_path);
  }
  throw ConfigError("unknown data source");
}

namespace detail {

inline double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  std::size_t n = 0;
  for (double x : v)
    if (std::isfinite(x)) s += x, ++n;
  return n ? s / static_cast<double>(n) : kNaN;
}

inline double sample_sd(const std::vector<double>& v) {
  const double m = mean_of(v);
  double ss = 0.0;
  std::size_t n = 0;
  for (double x : v)
    if (std::isfinite(x)) ss += (x - m) * (x - m), ++n;
  return n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : (n == 1 ? 0.0 : kNaN);
}

inline std::pair<double, double> min_max(const std::vector<double>& v) {
  double lo = kNaN, hi = kNaN;
  for (double x : v) {
    if (!std::isfinite(x)) continue;
    if (!(lo <= x)) lo = x;
    if (!(hi >= x)) hi = x;
  }
  return {lo, hi};
}

inline double safe_auc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  std::vector<double> s;
  std::vector<std::uint8_t> y;
  for (std::size_t i = 0; i < scores.size(); ++i)
    if (std::isfinite(scores[i])) s.push_back(scores[i]), y.push_back(labels[i]);
  try {
    return auc(s, y);
  } catch (const UndefinedAucError&) {
    return kNaN;
  }
}

// Per-participant AUCs of one score vector; NaN when undefined.
inline std::vector<double> participant_aucs(const Dataset& ds, std::span<const double> scores) {
  std::vector<std::vector<double>> s(ds.participants.size());
  std::vector<std::vector<std::uint8_t>> y(ds.participants.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (!std::isfinite(scores[i])) continue;
    s[static_cast<std::size_t>(ds.participant[i])].push_back(scores[i]);
    y[static_cast<std::size_t>(ds.participant[i])].push_back(ds.y[i]);
  }
  std::vector<double> out;
  for (std::size_t p = 0; p < s.size(); ++p) out.push_back(safe_auc(s[p], y[p]));
  return out;
}

// The scheme's headline statistic on one score vector: pooled AUC for the
// global scheme, mean participant AUC otherwise.
inline double scheme_score(SchemeKind kind, const Dataset& ds, std::span<const double> scores) {
  if (kind == SchemeKind::Global) return safe_auc(scores, ds.y);
  return mean_of(participant_aucs(ds, scores));
}

// Probabilities for each row; rows whose participant has no model get NaN.
inline std::vector<double> score_rows(const TrainedScheme& s, const Dataset& test, bool& routing_failed) {
  std::vector<double> out(test.size());
  for (std::size_t i = 0; i < test.size(); ++i) {
    try {
      out[i] = glm::sigmoid(s.logit_row(test.participants[static_cast<std::size_t>(test.participant[i])],
                                        test.X.row(static_cast<Eigen::Index>(i))));
    } catch (const RoutingError&) {
      out[i] = kNaN;
      routing_failed = true;
    }
  }
  return out;
}

inline TrainedScheme train_cell(const Dataset& train, const CellKey& key, double lambda, const SchemeOptions& so,
                                const TrainedScheme* global) {
  switch (key.scheme) {
    case SchemeKind::Global: return global ? *global : train_global(train, lambda, so);
    case SchemeKind::PersonDependent: return train_person_dependent(train, lambda, so);
    case SchemeKind::KHybrid:
      return train_k_hybrid(train, lambda, key.k, so, global ? &*global->global_model() : nullptr);
  }
  throw ConfigError("unknown scheme");
}

// Inner 3-fold choice of lambda on a training split, by the scheme's own
// statistic; ties keep the earlier grid value.
inline double select_lambda(const ExperimentConfig& cfg, const Dataset& train, const CellKey& key,
                            const SchemeOptions& so, std::uint64_t seed) {
  constexpr int kInnerFolds = 3;
  if (train.size() < static_cast<std::size_t>(kInnerFolds)) return cfg.lambda;
  const FoldPlan inner =
      make_folds({train.y, train.participant, train.session}, kInnerFolds, 1, seed, cfg.stratified, cfg.fold_unit);
  double best = cfg.lambda;
  double best_score = -1.0;
  for (double lam : cfg.lambda_grid) {
    std::vector<double> oof(train.size(), kNaN);
    for (int f = 0; f < kInnerFolds; ++f) {
      const auto te_idx = inner.test_indices(0, f);
      const auto tr_idx = inner.train_indices(0, f);
      if (te_idx.empty() || tr_idx.empty()) continue;
      const Dataset tr = train.rows(tr_idx);
      const Dataset te = train.rows(te_idx);
      bool routing = false;
      const auto s = score_rows(train_cell(tr, key, lam, so, nullptr), te, routing);
      for (std::size_t i = 0; i < te_idx.size(); ++i) oof[te_idx[i]] = s[i];
    }
    const double score = scheme_score(key.scheme, train, oof);
    if (std::isfinite(score) && score > best_score) best_score = score, best = lam;
  }
  return best;
}

}  // namespace detail

inline EvaluationReport run_experiment(const ExperimentConfig& cfg, const RunHooks& hooks = {}) {
  cfg.validate();
  auto say = [&](const std::string& m) {
    if (hooks.progress) hooks.progress(m);
  };
  EvaluationReport report;
  report.config = cfg;

  say("loading data (" + std::string(data_source_name(cfg.source)) + ")");
  const std::vector<Session> sessions = load_population(cfg);

  for (int tp : cfg.tau_p) {
    for (int tf : cfg.tau_f) {
      HorizonSummary hs;
      hs.tau_p = tp;
      hs.tau_f = tf;
      // Cells of this horizon in key order; skipped ones are final already.
      std::vector<CellResult> cells;
      for (auto subset : cfg.subsets) {
        for (auto scheme : cfg.schemes) {
          const std::vector<int> ks = scheme == SchemeKind::KHybrid ? cfg.k : std::vector<int>{0};
          for (int k : ks) {
            CellResult c;
            c.key = {tp, tf, subset, scheme, k};
            cells.push_back(std::move(c));
          }
        }
      }
      std::sort(cells.begin(), cells.end(), [](const CellResult& a, const CellResult& b) { return a.key < b.key; });
      cells.erase(std::unique(cells.begin(), cells.end(), [](const CellResult& a, const CellResult& b) { return a.key == b.key; }),
                  cells.end());

      auto fail_all = [&](const std::string& why) {
        hs.error = why;
        for (auto& c : cells) c.status = CellStatus::Failed, c.reason = why;
      };

      std::optional<Dataset> full;
      std::optional<FoldPlan> plan;
      try {
        const Horizon h{tp, tf};
        h.validate();
        say("extracting features for tau_p=" + std::to_string(tp) + " tau_f=" + std::to_string(tf));
        ExtractOptions eo;
        eo.exclude_ongoing = cfg.exclude_ongoing;
        const FeatureLayout wide(tp, FeatureSubset::All);
        full = make_dataset(wide, extract_dataset(sessions, h, FeatureSubset::All, eo));
        hs.samples = full->size();
        hs.positives = full->positives();
        hs.participants = full->participants.size();
        hs.sessions = full->sessions.size();
        if (full->positives() == 0 || full->positives() == full->size())
          throw UndefinedAucError("labels contain a single class");
        plan = make_folds({full->y, full->participant, full->session}, cfg.folds, cfg.repeats, cfg.seed, cfg.stratified,
                          cfg.fold_unit);
      } catch (const Error& e) {
        fail_all(e.what());
      }

      if (full && plan) {
        const std::size_t n = full->size();
        const std::size_t S = full->participants.size();
        std::map<FeatureSubset, Dataset> projected;
        for (auto& c : cells) {
          const std::size_t d = feature_dimension(tp, c.key.subset);
          c.d = d;
          c.participants = S;
          c.samples = n;
          c.positives = full->positives();
          SchemeSpec spec;
          spec.kind = c.key.scheme;
          spec.k = c.key.k;
          if (c.key.scheme == SchemeKind::KHybrid) {
            const FeatureLayout layout(tp, c.key.subset);
            std::size_t rankable = 0;
            for (const auto& f : layout.features())
              if (cfg.rank_pool == RankPool::All || f.group != FeatureGroup::Temporal) ++rankable;
            if (static_cast<std::size_t>(c.key.k) > d) {
              c.status = CellStatus::Skipped;
              c.reason = "k = " + std::to_string(c.key.k) + " exceeds d = " + std::to_string(d);
              continue;
            }
            if (static_cast<std::size_t>(c.key.k) > rankable) {
              c.status = CellStatus::Skipped;
              c.reason = "k = " + std::to_string(c.key.k) + " exceeds the " + std::to_string(rankable) +
                         " features in the rank pool";
              continue;
            }
          }
          c.parameters = parameter_count(spec, d, S);
          if (!projected.count(c.key.subset)) projected.emplace(c.key.subset, full->project(FeatureLayout(tp, c.key.subset)));
        }

        // Work units: (subset, repeat, fold), each serving every live cell of that subset.
        struct Unit {
          FeatureSubset subset;
          int repeat, fold;
        };
        std::vector<Unit> units;
        for (const auto& [subset, ds] : projected)
          for (int r = 0; r < cfg.repeats; ++r)
            for (int f = 0; f < cfg.folds; ++f) units.push_back({subset, r, f});

        const std::size_t R = static_cast<std::size_t>(cfg.repeats);
        const std::size_t F = static_cast<std::size_t>(cfg.folds);
        std::vector<std::vector<std::vector<double>>> oof(cells.size());
        std::vector<std::vector<std::optional<std::string>>> failures(cells.size());
        std::vector<std::vector<char>> routing(cells.size());
        for (std::size_t c = 0; c < cells.size(); ++c) {
          if (cells[c].status != CellStatus::Ok) continue;
          oof[c].assign(R, std::vector<double>(n, kNaN));
          cells[c].fold_auc.assign(R, std::vector<double>(F, kNaN));
          cells[c].lambdas.assign(R, std::vector<double>(F, kNaN));
          failures[c].assign(R * F, std::nullopt);
          routing[c].assign(R * F, 0);
        }

        std::mutex log_mutex;
        std::size_t done = 0;
        parallel_for(
            units.size(),
            [&](std::size_t u) {
              const Unit& unit = units[u];
              const Dataset& ds = projected.at(unit.subset);
              const auto te_idx = plan->test_indices(unit.repeat, unit.fold);
              const auto tr_idx = plan->train_indices(unit.repeat, unit.fold);
              const std::size_t slot = static_cast<std::size_t>(unit.repeat) * F + static_cast<std::size_t>(unit.fold);
              std::vector<std::size_t> live;
              for (std::size_t c = 0; c < cells.size(); ++c)
                if (cells[c].status == CellStatus::Ok && cells[c].key.subset == unit.subset) live.push_back(c);
              if (te_idx.empty() || tr_idx.empty()) {
                for (std::size_t c : live) failures[c][slot] = "empty train or test fold";
                return;
              }
              Dataset train = ds.rows(tr_idx);
              Dataset test = ds.rows(te_idx);
              if (hooks.transform_split) hooks.transform_split({tp, tf, unit.subset, SchemeKind::Global, 0}, train, test);

              const std::string fold_id =
                  "r" + std::to_string(unit.repeat) + "f" + std::to_string(unit.fold);
              std::optional<TrainedScheme> global;
              double global_lambda = kNaN;
              for (std::size_t c : live) {
                const CellKey& key = cells[c].key;
                try {
                  SchemeOptions so;
                  so.rank_pool = cfg.rank_pool;
                  so.threads = 1;
                  so.fold = fold_id;
                  so.seed = cfg.seed;
                  double lam = cfg.lambda;
                  if (cfg.select_lambda)
                    lam = detail::select_lambda(
                        cfg, train, key, so,
                        derive_seed(cfg.seed, {0x1a, static_cast<std::uint64_t>(unit.repeat),
                                               static_cast<std::uint64_t>(unit.fold)}));
                  const bool wants_global =
                      key.scheme == SchemeKind::Global || (key.scheme == SchemeKind::KHybrid && key.k > 0);
                  if (wants_global && !(global && global_lambda == lam)) {
                    global = train_global(train, lam, so);
                    global_lambda = lam;
                  }
                  const TrainedScheme model = detail::train_cell(train, key, lam, so, wants_global ? &*global : nullptr);
                  bool routing_failed = false;
                  const auto scores = detail::score_rows(model, test, routing_failed);
                  for (std::size_t i = 0; i < te_idx.size(); ++i) oof[c][static_cast<std::size_t>(unit.repeat)][te_idx[i]] = scores[i];
                  cells[c].fold_auc[static_cast<std::size_t>(unit.repeat)][static_cast<std::size_t>(unit.fold)] =
                      detail::safe_auc(scores, test.y);
                  cells[c].lambdas[static_cast<std::size_t>(unit.repeat)][static_cast<std::size_t>(unit.fold)] = lam;
                  routing[c][slot] = routing_failed ? 1 : 0;
                } catch (const std::exception& e) {
                  failures[c][slot] = std::string(e.what());
                }
              }
              std::lock_guard lock(log_mutex);
              ++done;
              say("  " + std::string(subset_name(unit.subset)) + " repeat " + std::to_string(unit.repeat) + " fold " +
                  std::to_string(unit.fold) + " (" + std::to_string(done) + "/" + std::to_string(units.size()) + ")");
            },
            cfg.threads);

        for (std::size_t c = 0; c < cells.size(); ++c) {
          CellResult& cell = cells[c];
          if (cell.status != CellStatus::Ok) continue;
          for (std::size_t s = 0; s < failures[c].size(); ++s) {
            if (failures[c][s]) {
              cell.status = CellStatus::Failed;
              cell.reason = "repeat " + std::to_string(s / F) + " fold " + std::to_string(s % F) + ": " + *failures[c][s];
              break;
            }
          }
          if (cell.status != CellStatus::Ok) continue;
          if (std::any_of(routing[c].begin(), routing[c].end(), [](char v) { return v != 0; }))
            cell.flags.push_back("routing: some test rows had no participant model and were excluded");

          const Dataset& ds = projected.at(cell.key.subset);
          std::vector<std::vector<double>> per_participant(S);
          for (std::size_t r = 0; r < R; ++r) {
            const auto& scores = oof[c][r];
            const double pooled = detail::safe_auc(scores, ds.y);
            const auto pa = detail::participant_aucs(ds, scores);
            for (std::size_t p = 0; p < S; ++p) {
              per_participant[p].push_back(pa[p]);
              if (!std::isfinite(pa[p]) && cell.key.scheme != SchemeKind::Global)
                cell.flags.push_back("undefined AUC: " + ds.participants[p] + " repeat " + std::to_string(r));
            }
            cell.repeat_auc.push_back(cell.key.scheme == SchemeKind::Global ? pooled : detail::mean_of(pa));
            std::vector<double> s;
            std::vector<std::uint8_t> y;
            for (std::size_t i = 0; i < n; ++i)
              if (std::isfinite(scores[i])) s.push_back(scores[i]), y.push_back(ds.y[i]);
            try {
              cell.curves.push_back(compact_curve(roc_curve(s, y)));
            } catch (const UndefinedAucError&) {
              cell.flags.push_back("undefined pooled ROC: repeat " + std::to_string(r));
            }
          }
          std::vector<double> participant_means;
          for (std::size_t p = 0; p < S; ++p) {
            const double m = detail::mean_of(per_participant[p]);
            cell.participant_auc[ds.participants[p]] = m;
            cell.participant_repeat_auc[ds.participants[p]] = per_participant[p];
            participant_means.push_back(m);
          }
          if (cell.key.scheme == SchemeKind::Global) {
            cell.auc_mean = detail::mean_of(cell.repeat_auc);
            cell.auc_sd = detail::sample_sd(cell.repeat_auc);
          } else {
            cell.auc_mean = detail::mean_of(participant_means);
            cell.auc_sd = detail::sample_sd(participant_means);
          }
          std::tie(cell.auc_min, cell.auc_max) = detail::min_max(cell.repeat_auc);
          if (!std::isfinite(cell.auc_mean)) {
            cell.status = CellStatus::Failed;
            cell.reason = "AUC undefined in every repeat";
          }
          if (!cell.curves.empty()) cell.band = roc_band(cell.curves, cfg.band_level);
        }
      }
      report.horizons.push_back(hs);
      for (auto& c : cells) report.cells.push_back(std::move(c));
    }
  }
  std::sort(report.cells.begin(), report.cells.end(), [](const CellResult& a, const CellResult& b) { return a.key < b.key; });
  return report;
}

// ---------------------------------------------------------------------------
// Report emission

namespace detail {

inline std::string fmt(double v) { return std::isfinite(v) ? text::format_fixed(v, 6) : "NA"; }

inline std::string key_cols(const CellKey& k) {
  return std::to_string(k.tau_p) + "," + std::to_string(k.tau_f) + "," + std::string(subset_name(k.subset)) + "," +
         std::string(scheme_name(k.scheme)) + "," + std::to_string(k.k);
}

inline constexpr std::string_view kKeyHeader = "tau_p,tau_f,subset,scheme,k";

inline std::string csv_field(std::string s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

class FileWriter {
 public:
  explicit FileWriter(std::filesystem::path path) : path_(std::move(path)), out_(path_, std::ios::binary) {
    if (!out_) throw Error("cannot write " + path_.string());
  }
  std::ofstream& operator*() { return out_; }
  void close() {
    out_.close();
    if (!out_) throw Error("error writing " + path_.string());
  }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  FileWriter w(path);
  *w << text;
  w.close();
}

// Minimal SVG line plots on a unit-square data frame.
struct SvgSeries {
  std::string label;
  std::vector<std::pair<double, double>> points;
  std::vector<std::pair<double, double>> error;  // (low, high) per point, optional
};

inline const char* series_colour(std::size_t i) {
  static constexpr const char* kColours[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
                                             "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
  return kColours[i % (sizeof kColours / sizeof kColours[0])];
}

inline std::string svg_plot(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                            std::pair<double, double> xr, std::pair<double, double> yr,
                            const std::vector<SvgSeries>& series, const std::vector<double>* band_x = nullptr,
                            const std::vector<double>* band_lo = nullptr, const std::vector<double>* band_hi = nullptr,
                            bool diagonal = false) {
  constexpr double W = 560, H = 420, L = 60, R = 170, T = 40, B = 50;
  const double pw = W - L - R, ph = H - T - B;
  const double xs = xr.second > xr.first ? xr.second - xr.first : 1.0;
  const double ys = yr.second > yr.first ? yr.second - yr.first : 1.0;
  auto X = [&](double x) { return text::format_fixed(L + (x - xr.first) / xs * pw, 2); };
  auto Y = [&](double y) { return text::format_fixed(T + ph - (y - yr.first) / ys * ph, 2); };
  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << L << "\" y=\"22\" font-size=\"13\">" << title << "</text>\n";
  o << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << pw << "\" height=\"" << ph << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double fx = xr.first + xs * i / 4.0, fy = yr.first + ys * i / 4.0;
    o << "<text x=\"" << X(fx) << "\" y=\"" << text::format_fixed(T + ph + 15, 2) << "\" text-anchor=\"middle\">"
      << text::format_fixed(fx, 2) << "</text>\n";
    o << "<text x=\"" << text::format_fixed(L - 5, 2) << "\" y=\"" << Y(fy) << "\" text-anchor=\"end\">" << text::format_fixed(fy, 2)
      << "</text>\n";
  }
  o << "<text x=\"" << text::format_fixed(L + pw / 2, 2) << "\" y=\"" << text::format_fixed(H - 12, 2) << "\" text-anchor=\"middle\">"
    << xlabel << "</text>\n";
  o << "<text x=\"15\" y=\"" << text::format_fixed(T + ph / 2, 2) << "\" transform=\"rotate(-90 15 " << text::format_fixed(T + ph / 2, 2)
    << ")\" text-anchor=\"middle\">" << ylabel << "</text>\n";
  if (diagonal)
    o << "<line x1=\"" << X(xr.first) << "\" y1=\"" << Y(yr.first) << "\" x2=\"" << X(xr.second) << "\" y2=\""
      << Y(yr.second) << "\" stroke=\"#999\" stroke-dasharray=\"4 3\"/>\n";
  if (band_x && band_lo && band_hi && !band_x->empty()) {
    o << "<polygon fill=\"" << series_colour(0) << "\" fill-opacity=\"0.2\" stroke=\"none\" points=\"";
    for (std::size_t i = 0; i < band_x->size(); ++i) o << X((*band_x)[i]) << "," << Y((*band_hi)[i]) << " ";
    for (std::size_t i = band_x->size(); i-- > 0;) o << X((*band_x)[i]) << "," << Y((*band_lo)[i]) << " ";
    o << "\"/>\n";
  }
  for (std::size_t s = 0; s < series.size(); ++s) {
    const auto& sr = series[s];
    o << "<polyline fill=\"none\" stroke=\"" << series_colour(s) << "\" stroke-width=\"1.5\" points=\"";
    for (const auto& [x, y] : sr.points)
      if (std::isfinite(y)) o << X(x) << "," << Y(y) << " ";
    o << "\"/>\n";
    for (std::size_t i = 0; i < sr.error.size() && i < sr.points.size(); ++i) {
      const auto [lo, hi] = sr.error[i];
      if (!std::isfinite(lo) || !std::isfinite(hi)) continue;
      o << "<line x1=\"" << X(sr.points[i].first) << "\" y1=\"" << Y(lo) << "\" x2=\"" << X(sr.points[i].first)
        << "\" y2=\"" << Y(hi) << "\" stroke=\"" << series_colour(s) << "\"/>\n";
    }
    o << "<text x=\"" << text::format_fixed(L + pw + 10, 2) << "\" y=\"" << text::format_fixed(T + 12 + 14.0 * static_cast<double>(s), 2)
      << "\" fill=\"" << series_colour(s) << "\">" << sr.label << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

inline std::string series_label(const CellKey& k) {
  std::string s = std::string(subset_name(k.subset)) + " " + std::string(scheme_name(k.scheme));
  if (k.scheme == SchemeKind::KHybrid) s += " k=" + std::to_string(k.k);
  return s;
}

}  // namespace detail

// Writes the report tree under `dir`; byte-identical for identical reports.
inline void emit_report(const EvaluationReport& report, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  using detail::fmt;
  using detail::key_cols;
  using detail::kKeyHeader;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error("cannot create " + dir.string() + ": " + ec.message());

  detail::write_text(dir / "config.json", report.config.to_json().dump(2) + "\n");
  detail::write_text(dir / "results.json", report.to_json().dump(1) + "\n");

  {
    detail::FileWriter w(dir / "summary.csv");
    *w << kKeyHeader << ",status,d,parameters,participants,samples,positives,auc_mean,auc_sd,auc_min,auc_max,flags\n";
    for (const auto& c : report.cells)
      *w << key_cols(c.key) << "," << cell_status_name(c.status) << "," << c.d << "," << c.parameters << ","
         << c.participants << "," << c.samples << "," << c.positives << "," << fmt(c.auc_mean) << "," << fmt(c.auc_sd) << ","
         << fmt(c.auc_min) << "," << fmt(c.auc_max) << "," << c.flags.size() << "\n";
    w.close();
  }
  {
    detail::FileWriter w(dir / "repeat_auc.csv");
    *w << kKeyHeader << ",repeat,auc\n";
    for (const auto& c : report.cells)
      for (std::size_t r = 0; r < c.repeat_auc.size(); ++r) *w << key_cols(c.key) << "," << r << "," << fmt(c.repeat_auc[r]) << "\n";
    w.close();
  }
  {
    detail::FileWriter w(dir / "fold_auc.csv");
    *w << kKeyHeader << ",repeat,fold,auc,lambda\n";
    for (const auto& c : report.cells)
      for (std::size_t r = 0; r < c.fold_auc.size(); ++r)
        for (std::size_t f = 0; f < c.fold_auc[r].size(); ++f)
          *w << key_cols(c.key) << "," << r << "," << f << "," << fmt(c.fold_auc[r][f]) << ","
             << (r < c.lambdas.size() && f < c.lambdas[r].size() ? fmt(c.lambdas[r][f]) : "NA") << "\n";
    w.close();
  }
  {
    detail::FileWriter w(dir / "participant_auc.csv");
    *w << kKeyHeader << ",participant,auc\n";
    for (const auto& c : report.cells)
      for (const auto& [p, v] : c.participant_auc) *w << key_cols(c.key) << "," << p << "," << fmt(v) << "\n";
    w.close();
  }

  // Wide participant table for the person-dependent scheme.
  std::set<std::string> people;
  for (const auto& c : report.cells)
    for (const auto& [p, v] : c.participant_auc) people.insert(p);
  {
    detail::FileWriter w(dir / "person_dependent_auc.csv");
    *w << "features,tau_p,tau_f";
    for (const auto& p : people) *w << "," << p;
    *w << ",Mean,SD\n";
    for (const auto& c : report.cells) {
      if (c.key.scheme != SchemeKind::PersonDependent) continue;
      *w << subset_name(c.key.subset) << "," << c.key.tau_p << "," << c.key.tau_f;
      for (const auto& p : people) {
        const auto it = c.participant_auc.find(p);
        *w << "," << (c.status == CellStatus::Ok && it != c.participant_auc.end() ? fmt(it->second) : "NA");
      }
      const bool ok = c.status == CellStatus::Ok;
      *w << "," << (ok ? fmt(c.auc_mean) : "NA") << "," << (ok ? fmt(c.auc_sd) : "NA") << "\n";
    }
    w.close();
  }
  {
    detail::FileWriter w(dir / "hybrid_auc.csv");
    *w << "features,tau_p,tau_f,scheme,k,parameters,Mean,SD,Min,Max\n";
    for (const auto& c : report.cells) {
      if (c.key.scheme != SchemeKind::KHybrid) continue;
      const bool ok = c.status == CellStatus::Ok;
      *w << subset_name(c.key.subset) << "," << c.key.tau_p << "," << c.key.tau_f << "," << scheme_name(c.key.scheme) << ","
         << c.key.k << "," << (c.status == CellStatus::Skipped ? std::string("NA") : std::to_string(c.parameters)) << ","
         << (ok ? fmt(c.auc_mean) : "NA") << "," << (ok ? fmt(c.auc_sd) : "NA") << "," << (ok ? fmt(c.auc_min) : "NA")
         << "," << (ok ? fmt(c.auc_max) : "NA") << "\n";
    }
    w.close();
  }
  {
    detail::FileWriter w(dir / "roc_points.csv");
    *w << kKeyHeader << ",repeat,fpr,tpr\n";
    for (const auto& c : report.cells)
      for (std::size_t r = 0; r < c.curves.size(); ++r)
        for (const auto& p : c.curves[r].points) *w << key_cols(c.key) << "," << r << "," << fmt(p.fpr) << "," << fmt(p.tpr) << "\n";
    w.close();
  }
  {
    detail::FileWriter w(dir / "roc_bands.csv");
    *w << kKeyHeader << ",level,fpr,mean,lower,upper\n";
    for (const auto& c : report.cells) {
      if (!c.band) continue;
      const auto& b = *c.band;
      for (std::size_t i = 0; i < b.fpr.size(); ++i)
        *w << key_cols(c.key) << "," << fmt(b.level) << "," << fmt(b.fpr[i]) << "," << fmt(b.mean[i]) << "," << fmt(b.lower[i])
           << "," << fmt(b.upper[i]) << "\n";
    }
    w.close();
  }
  {
    detail::FileWriter w(dir / "errors.csv");
    *w << kKeyHeader << ",status,message\n";
    for (const auto& c : report.cells) {
      if (c.status != CellStatus::Ok) *w << key_cols(c.key) << "," << cell_status_name(c.status) << "," << detail::csv_field(c.reason) << "\n";
      for (const auto& f : c.flags) *w << key_cols(c.key) << ",flag," << detail::csv_field(f) << "\n";
    }
    w.close();
  }

  if (!report.config.svg) return;
  fs::create_directories(dir / "plots", ec);
  if (ec) throw Error("cannot create " + (dir / "plots").string() + ": " + ec.message());
  for (const auto& c : report.cells) {
    if (c.status != CellStatus::Ok || !c.band) continue;
    detail::SvgSeries mean{"mean ROC", {}, {}};
    for (std::size_t i = 0; i < c.band->fpr.size(); ++i) mean.points.emplace_back(c.band->fpr[i], c.band->mean[i]);
    const std::string title = detail::series_label(c.key) + " (tau_p=" + std::to_string(c.key.tau_p) +
                              ", tau_f=" + std::to_string(c.key.tau_f) + ", AUC " + fmt(c.auc_mean) + ")";
    detail::write_text(dir / "plots" / ("roc_" + c.key.id() + ".svg"),
                       detail::svg_plot(title, "false positive rate", "true positive rate", {0, 1}, {0, 1}, {mean},
                                        &c.band->fpr, &c.band->lower, &c.band->upper, true));
  }

  // AUC against one swept parameter, one series per remaining key.
  auto sweep_plot = [&](const std::string& file, const std::string& xlabel, auto xof, auto series_key) {
    std::map<std::string, detail::SvgSeries> series;
    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
    for (const auto& c : report.cells) {
      if (c.status != CellStatus::Ok) continue;
      const auto sk = series_key(c.key);
      if (!sk) continue;
      auto& s = series[*sk];
      s.label = *sk;
      const double x = xof(c.key);
      s.points.emplace_back(x, c.auc_mean);
      s.error.emplace_back(c.auc_min, c.auc_max);
      xmin = std::min(xmin, x);
      xmax = std::max(xmax, x);
    }
    std::vector<detail::SvgSeries> list;
    for (auto& [k, s] : series)
      if (s.points.size() > 1) list.push_back(std::move(s));
    if (list.empty()) return;
    detail::write_text(dir / "plots" / file, detail::svg_plot("AUC vs " + xlabel, xlabel, "AUC", {xmin, xmax}, {0.4, 1.0}, list));
  };
  sweep_plot(
      "auc_vs_tau_f.svg", "tau_f (s)", [](const CellKey& k) { return static_cast<double>(k.tau_f); },
      [](const CellKey& k) -> std::optional<std::string> { return detail::series_label(k) + " tau_p=" + std::to_string(k.tau_p); });
  sweep_plot(
      "auc_vs_tau_p.svg", "tau_p (s)", [](const CellKey& k) { return static_cast<double>(k.tau_p); },
      [](const CellKey& k) -> std::optional<std::string> { return detail::series_label(k) + " tau_f=" + std::to_string(k.tau_f); });
  sweep_plot(
      "auc_vs_k.svg", "k", [](const CellKey& k) { return static_cast<double>(k.k); },
      [](const CellKey& k) -> std::optional<std::string> {
        if (k.scheme != SchemeKind::KHybrid) return std::nullopt;
        return std::string(subset_name(k.subset)) + " tau_p=" + std::to_string(k.tau_p) + " tau_f=" + std::to_string(k.tau_f);
      });
}

}  // namespace aggpred
