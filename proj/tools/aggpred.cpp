#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "aggpred/dataset.hpp"
#include "aggpred/features.hpp"
#include "aggpred/harness.hpp"
#include "aggpred/ingest.hpp"
#include "aggpred/schemes.hpp"
#include "aggpred/synthgen.hpp"

namespace fs = std::filesystem;
using namespace aggpred;

namespace {

// Where sessions come from: recorded manifests, a population config, or the
// built-in synthetic defaults (optionally with effects removed).
struct DataFlags {
  std::string data;
  std::string population;
  std::optional<std::uint64_t> seed;
  bool null_control = false;

  void add(CLI::App* app) {
    app->add_option("--data", data, "Session manifest, population index, or directory holding population.json");
    app->add_option("--population", population, "Synthetic population config (JSON)");
    app->add_option("--seed", seed, "Seed for synthetic data and folds");
    app->add_flag("--null", null_control, "Generate the null control (all precursor effects zero)");
  }

  synth::PopulationConfig population_config() const {
    synth::PopulationConfig cfg;
    if (!population.empty()) {
      std::ifstream in(population);
      if (!in) throw ConfigError("cannot open " + population);
      nlohmann::json j;
      in >> j;
      cfg = synth::PopulationConfig::from_json(j);
    }
    if (seed) cfg.seed = *seed;
    return cfg;
  }

  void apply(ExperimentConfig& cfg) const {
    if (seed) cfg.seed = *seed;
    if (!data.empty()) {
      cfg.source = DataSource::Manifests;
      cfg.data_path = data;
      return;
    }
    if (!population.empty())
      cfg.population = population_config();
    else if (seed)
      cfg.population.seed = *seed;
    if (null_control)
      cfg.source = DataSource::Null;
    else if (!population.empty())
      cfg.source = DataSource::Synthetic;
  }

  std::vector<Session> load() const {
    if (!data.empty()) return ingest::load_sessions(data);
    const auto cfg = population_config();
    return null_control ? synth::generate_null(cfg) : synth::generate_population(cfg);
  }
};

struct CellFlags {
  int tau_p = 60;
  int tau_f = 60;
  std::string subset = "ALL";
  std::string scheme = "global";
  int k = 0;
  double lambda = 1.0;
  std::string rank_pool = "all";

  void add(CLI::App* app, bool with_scheme) {
    app->add_option("--tau-p", tau_p, "Past window in seconds (multiple of 15)");
    app->add_option("--tau-f", tau_f, "Future window in seconds");
    app->add_option("--subset", subset, "TEMPORAL, PHYSICAL, PHYSIOLOGICAL, PHYSICAL+PHYSIOLOGICAL or ALL");
    if (!with_scheme) return;
    app->add_option("--scheme", scheme, "global, person_dependent or k_hybrid");
    app->add_option("--k", k, "Shared weights for k_hybrid");
    app->add_option("--lambda", lambda, "Ridge strength");
    app->add_option("--rank-pool", rank_pool, "all or biomarker");
  }
};

struct CvFlags {
  std::optional<int> folds, repeats;
  std::optional<std::string> fold_unit;
  bool select_lambda = false;
  bool exclude_ongoing = false;
  bool no_svg = false;
  unsigned threads = 0;

  void add(CLI::App* app) {
    app->add_option("--folds", folds, "Cross-validation folds");
    app->add_option("--repeats", repeats, "Cross-validation repeats");
    app->add_option("--fold-unit", fold_unit, "sample or session");
    app->add_flag("--select-lambda", select_lambda, "Choose lambda by inner 3-fold CV on each training split");
    app->add_flag("--exclude-ongoing", exclude_ongoing, "Drop decision points inside an ongoing episode");
    app->add_flag("--no-svg", no_svg, "Skip SVG plots");
    app->add_option("--threads", threads, "Worker threads (0 = all cores)");
  }

  void apply(ExperimentConfig& cfg) const {
    if (folds) cfg.folds = *folds;
    if (repeats) cfg.repeats = *repeats;
    if (fold_unit) cfg.fold_unit = parse_fold_unit(*fold_unit);
    if (select_lambda) cfg.select_lambda = true;
    if (exclude_ongoing) cfg.exclude_ongoing = true;
    if (no_svg) cfg.svg = false;
    cfg.threads = threads;
  }
};

int finish(const EvaluationReport& report, const std::string& out, bool quiet) {
  emit_report(report, out);
  for (const auto& c : report.cells) {
    std::cout << c.key.id() << "  " << cell_status_name(c.status);
    if (c.status == CellStatus::Ok) std::cout << "  auc " << text::format_fixed(c.auc_mean, 4) << " +/- " << text::format_fixed(c.auc_sd, 4);
    if (!c.reason.empty()) std::cout << "  (" << c.reason << ")";
    std::cout << "\n";
  }
  if (!quiet) std::cout << "report written to " << out << "\n";
  return report.all_ok() ? EXIT_SUCCESS : EXIT_FAILURE;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Aggression-onset prediction from wearable biosensor streams"};
  app.require_subcommand(1);
  bool quiet = false;
  app.add_flag("-q,--quiet", quiet, "Suppress progress output");

  // synth
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic population as CSV sessions");
  DataFlags synth_data;
  std::string synth_out = "population";
  synth_cmd->add_option("--population", synth_data.population, "Population config (JSON)");
  synth_cmd->add_option("--seed", synth_data.seed, "Seed");
  synth_cmd->add_flag("--null", synth_data.null_control, "Zero all precursor effects");
  synth_cmd->add_option("--out", synth_out, "Output directory");

  // extract
  auto* extract_cmd = app.add_subcommand("extract", "Extract decision-point features to CSV");
  DataFlags extract_data;
  CellFlags extract_cell;
  bool extract_exclude = false;
  std::string extract_out = "features.csv";
  extract_data.add(extract_cmd);
  extract_cell.add(extract_cmd, false);
  extract_cmd->add_flag("--exclude-ongoing", extract_exclude, "Drop decision points inside an ongoing episode");
  extract_cmd->add_option("--out", extract_out, "Output CSV");

  // train
  auto* train_cmd = app.add_subcommand("train", "Fit a scheme on all data and save it as JSON");
  DataFlags train_data;
  CellFlags train_cell;
  std::string train_out = "model.json";
  train_data.add(train_cmd);
  train_cell.add(train_cmd, true);
  train_cmd->add_option("--out", train_out, "Output model document");

  // evaluate
  auto* eval_cmd = app.add_subcommand("evaluate", "Cross-validate a single cell");
  DataFlags eval_data;
  CellFlags eval_cell;
  CvFlags eval_cv;
  std::string eval_out = "report";
  eval_data.add(eval_cmd);
  eval_cell.add(eval_cmd, true);
  eval_cv.add(eval_cmd);
  eval_cmd->add_option("--out", eval_out, "Report directory");

  // sweep
  auto* sweep_cmd = app.add_subcommand("sweep", "Run a full experiment sweep from a config");
  std::string sweep_config;
  DataFlags sweep_data;
  CvFlags sweep_cv;
  std::string sweep_out = "report";
  sweep_cmd->add_option("--config", sweep_config, "Experiment config (JSON)")->required();
  sweep_data.add(sweep_cmd);
  sweep_cv.add(sweep_cmd);
  sweep_cmd->add_option("--out", sweep_out, "Report directory");

  // report
  auto* report_cmd = app.add_subcommand("report", "Re-emit a report tree from a stored results.json");
  std::string report_in;
  std::string report_out = "report";
  report_cmd->add_option("--in", report_in, "results.json or a report directory")->required();
  report_cmd->add_option("--out", report_out, "Report directory");

  CLI11_PARSE(app, argc, argv);

  RunHooks hooks;
  if (!quiet) hooks.progress = [](const std::string& m) { std::cerr << m << "\n"; };

  try {
    if (synth_cmd->parsed()) {
      const auto cfg = synth_data.population_config();
      const auto sessions = synth_data.null_control ? synth::generate_null(cfg) : synth::generate_population(cfg);
      const auto index = synth::write_population(sessions, synth_out);
      std::ofstream(fs::path(synth_out) / "population_config.json") << cfg.to_json().dump(2) << "\n";
      if (!quiet) std::cout << sessions.size() << " sessions written, index " << index.string() << "\n";
      return EXIT_SUCCESS;
    }

    if (extract_cmd->parsed()) {
      const auto sessions = extract_data.load();
      const Horizon h{extract_cell.tau_p, extract_cell.tau_f};
      const auto subset = parse_subset(extract_cell.subset);
      ExtractOptions eo;
      eo.exclude_ongoing = extract_exclude;
      const auto ds = make_dataset(FeatureLayout(h.past_s, subset), extract_dataset(sessions, h, subset, eo));
      std::ofstream out(extract_out, std::ios::binary);
      if (!out) throw Error("cannot write " + extract_out);
      write_dataset_csv(out, ds);
      if (!quiet) std::cout << ds.size() << " samples (" << ds.positives() << " positive), d = " << ds.dim() << "\n";
      return EXIT_SUCCESS;
    }

    if (train_cmd->parsed()) {
      const auto sessions = train_data.load();
      SchemeSpec spec;
      spec.kind = parse_scheme(train_cell.scheme);
      spec.k = train_cell.k;
      spec.lambda = train_cell.lambda;
      spec.subset = parse_subset(train_cell.subset);
      spec.horizon = {train_cell.tau_p, train_cell.tau_f};
      spec.rank_pool = parse_rank_pool(train_cell.rank_pool);
      const auto ds = make_dataset(FeatureLayout(spec.horizon.past_s, spec.subset),
                                   extract_dataset(sessions, spec.horizon, spec.subset));
      SchemeOptions so;
      so.fold = "all";
      so.seed = train_data.seed.value_or(synth::kDefaultSeed);
      const auto scheme = train_scheme(ds, spec, so);
      std::ofstream out(train_out, std::ios::binary);
      if (!out) throw Error("cannot write " + train_out);
      out << scheme.to_json().dump(1) << "\n";
      if (!quiet)
        std::cout << scheme_name(spec.kind) << " trained on " << ds.size() << " samples, " << scheme.trained_weight_count()
                  << " weights\n";
      return EXIT_SUCCESS;
    }

    if (eval_cmd->parsed()) {
      ExperimentConfig cfg;
      eval_data.apply(cfg);
      eval_cv.apply(cfg);
      cfg.tau_p = {eval_cell.tau_p};
      cfg.tau_f = {eval_cell.tau_f};
      cfg.subsets = {parse_subset(eval_cell.subset)};
      cfg.schemes = {parse_scheme(eval_cell.scheme)};
      cfg.k = {eval_cell.k};
      cfg.lambda = eval_cell.lambda;
      cfg.rank_pool = parse_rank_pool(eval_cell.rank_pool);
      return finish(run_experiment(cfg, hooks), eval_out, quiet);
    }

    if (sweep_cmd->parsed()) {
      ExperimentConfig cfg = ExperimentConfig::read(sweep_config);
      sweep_data.apply(cfg);
      sweep_cv.apply(cfg);
      return finish(run_experiment(cfg, hooks), sweep_out, quiet);
    }

    if (report_cmd->parsed()) {
      fs::path in = report_in;
      if (fs::is_directory(in)) in /= "results.json";
      std::ifstream f(in);
      if (!f) throw Error("cannot open " + in.string());
      nlohmann::json j;
      f >> j;
      return finish(EvaluationReport::from_json(j), report_out, quiet);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return EXIT_SUCCESS;
}
