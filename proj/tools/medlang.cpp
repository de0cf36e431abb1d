// medlang command line: ingest, measure, fit, estimate, simulate, study, run, report.

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "medlang/corpus.hpp"
#include "medlang/crossfit.hpp"
#include "medlang/error.hpp"
#include "medlang/glm.hpp"
#include "medlang/measure.hpp"
#include "medlang/mediation.hpp"
#include "medlang/pipeline.hpp"
#include "medlang/random.hpp"
#include "medlang/records.hpp"
#include "medlang/scm.hpp"

namespace fs = std::filesystem;
using namespace medlang;

namespace {

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path);
  return in;
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path.string());
  return out;
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<double> parse_grid(const std::string& value) {
  std::vector<double> grid;
  for (const auto& item : split_list(value)) {
    try {
      std::size_t used = 0;
      grid.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("bad grid value '" + item + "'");
    }
  }
  if (grid.empty()) throw ConfigError("grid is empty");
  return grid;
}

RecordSet load_records(const std::string& path) {
  auto in = open_in(path);
  return read_records(in);
}

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("medlang");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  spdlog::set_level(spdlog::level::warn);
  if (const char* level = std::getenv("MEDLANG_LOG")) {
    spdlog::set_level(spdlog::level::from_str(level));
  }
}

void write_estimate_outputs(const fs::path& dir, const std::vector<EffectEstimate>& estimates) {
  fs::create_directories(dir);
  {
    auto out = open_out(dir / "estimates.csv");
    write_estimates_csv(out, estimates);
  }
  {
    auto out = open_out(dir / "estimates.jsonl");
    write_estimates_jsonl(out, estimates);
  }
  {
    auto out = open_out(dir / "plot_data.csv");
    write_plot_data(out, estimates);
  }
  auto out = open_out(dir / "summary.txt");
  out << render_report(estimates);
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"Causal mediation analysis of language in conversation transcripts"};
  app.require_subcommand(1);

  // ingest
  std::string transcripts, meta, units_out;
  bool ingest_strict = false;
  auto* ingest = app.add_subcommand("ingest", "Parse transcripts into analysis units");
  ingest->add_option("--transcripts", transcripts, "Transcript JSONL")->required();
  ingest->add_option("--meta", meta, "Case metadata JSONL");
  ingest->add_flag("--strict-dash", ingest_strict, "Only accept '- -' as the cut-off marker");
  ingest->add_option("--out", units_out, "Units file")->required();

  // measure
  std::string units_in, lexicon, records_out, exclusions_out, confounders = "issue_area,prior_interruptions";
  std::uint64_t measure_seed = 0;
  int measure_folds = 2;
  TopicHyperparameters topics;
  bool measure_strict = false;
  auto* measure = app.add_subcommand("measure", "Label treatment, mediators and outcome");
  measure->add_option("--units", units_in, "Units file")->required();
  measure->add_option("--lexicon", lexicon, "Hedging lexicon");
  measure->add_option("--topics", topics.k, "Topic count K (0 disables the topic mediator)");
  measure->add_option("--topic-alpha", topics.alpha);
  measure->add_option("--topic-beta", topics.beta);
  measure->add_option("--topic-sweeps", topics.sweeps);
  measure->add_option("--topic-burn-in", topics.burn_in);
  measure->add_option("--seed", measure_seed);
  measure->add_option("--folds", measure_folds);
  measure->add_option("--confounders", confounders, "Comma-separated context features");
  measure->add_flag("--strict-dash", measure_strict);
  measure->add_option("--exclusions", exclusions_out, "Write excluded units as JSONL");
  measure->add_option("--out", records_out, "Records file")->required();

  // fit
  std::string fit_records, fit_out, fit_mediators;
  int fit_folds = 0;
  std::uint64_t fit_seed = 0;
  auto* fit = app.add_subcommand("fit", "Fit cross-fitted nuisance tables");
  fit->add_option("--records", fit_records)->required();
  fit->add_option("--folds", fit_folds, "Must match the records' fold count");
  fit->add_option("--seed", fit_seed, "Unused: folds are read from the records");
  fit->add_option("--mediators", fit_mediators, "Comma-separated; default all");
  fit->add_option("--out", fit_out, "Output directory")->required();

  // estimate
  std::string est_records, est_mediators, est_out, est_weighting = "per_unit";
  EstimationConfig est_config;
  std::uint64_t est_seed = 0;
  auto* estimate = app.add_subcommand("estimate", "Bootstrap effect estimates");
  estimate->add_option("--records", est_records)->required();
  estimate->add_option("--mediators", est_mediators, "Comma-separated; default all");
  estimate->add_option("--bootstrap", est_config.n_bootstrap);
  estimate->add_option("--seed", est_seed);
  estimate->add_option("--ci", est_config.ci_level);
  estimate->add_option("--x-weighting", est_weighting, "per_unit or marginal");
  estimate->add_option("--threads", est_config.threads);
  estimate->add_option("--out", est_out, "Output directory")->required();

  // simulate
  std::string sim_spec, sim_out;
  std::size_t sim_n = 1000;
  std::uint64_t sim_seed = 0;
  int sim_folds = 2;
  bool sim_render = false;
  auto* simulate = app.add_subcommand("simulate", "Sample records from a structural causal model");
  simulate->add_option("--spec", sim_spec)->required();
  simulate->add_option("--n", sim_n);
  simulate->add_option("--seed", sim_seed);
  simulate->add_option("--folds", sim_folds);
  simulate->add_flag("--render", sim_render, "Also write a transcript corpus");
  simulate->add_option("--out", sim_out, "Output directory")->required();

  // study
  std::string study_spec, study_knob, study_grid, study_out;
  std::size_t study_n = 5000;
  std::uint64_t study_seed = 0;
  StudyOptions study_options;
  auto* study = app.add_subcommand("study", "Bias of the estimator as an assumption is violated");
  study->add_option("--spec", study_spec)->required();
  study->add_option("--knob", study_knob, "unmeasured_confounder, mediator_coupling or temporal_carryover")
      ->required();
  study->add_option("--grid", study_grid, "Comma-separated magnitudes")->required();
  study->add_option("--n", study_n);
  study->add_option("--seed", study_seed);
  study->add_option("--folds", study_options.n_folds);
  study->add_option("--threads", study_options.estimation.threads);
  study->add_option("--out", study_out, "CSV path (stdout if omitted)");

  // run
  std::string run_config, run_manifest, run_out;
  auto* run = app.add_subcommand("run", "Run every stage from a config or a manifest");
  auto* config_opt = run->add_option("--config", run_config);
  auto* manifest_opt = run->add_option("--manifest", run_manifest);
  config_opt->excludes(manifest_opt);
  run->add_option("--out", run_out, "Output directory")->required();

  // report
  std::string report_in, report_out;
  auto* report = app.add_subcommand("report", "Render estimates as a summary and plot data");
  report->add_option("--estimates", report_in, "estimates.jsonl")->required();
  report->add_option("--out", report_out, "Output directory (summary printed to stdout otherwise)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (ingest->parsed()) {
      auto in = open_in(transcripts);
      UnitCorpus corpus;
      corpus.utterances = parse_transcript(in);
      CaseMetadata metadata;
      if (!meta.empty()) {
        auto meta_in = open_in(meta);
        metadata = parse_case_metadata(meta_in);
      }
      ExtractOptions options;
      options.strict_dash = ingest_strict;
      corpus.units = extract_units(corpus.utterances, metadata, options);
      auto out = open_out(units_out);
      write_units(out, corpus);
      spdlog::info("ingested {} utterances into {} units", corpus.utterances.size(), corpus.units.size());
    } else if (measure->parsed()) {
      auto in = open_in(units_in);
      const UnitCorpus corpus = read_units(in);
      MeasurementSpec spec;
      if (!lexicon.empty()) spec.hedging_lexicon = HedgingLexicon::load_file(lexicon);
      spec.strict_dash = measure_strict;
      spec.confounders = split_list(confounders);
      spec.topics.enabled = topics.k > 0;
      spec.topics.model.k = topics.k;
      spec.topics.model.alpha = topics.alpha;
      spec.topics.model.beta = topics.beta;
      spec.topics.model.sweeps = topics.sweeps;
      spec.topics.model.burn_in = topics.burn_in;
      const BuildResult built = build_records(corpus, spec, measure_folds, measure_seed);
      auto out = open_out(records_out);
      write_records(out, built.records);
      if (!exclusions_out.empty()) {
        auto ex = open_out(exclusions_out);
        for (const auto& e : built.exclusions) {
          ex << nlohmann::ordered_json{{"unit_id", e.unit_id}, {"reason", e.reason}}.dump() << '\n';
        }
      }
      spdlog::info("measured {} units, excluded {}", built.records.records.size(), built.exclusions.size());
    } else if (fit->parsed()) {
      const RecordSet data = load_records(fit_records);
      if (fit_folds != 0 && fit_folds != data.schema.n_folds) {
        throw ConfigError("--folds " + std::to_string(fit_folds) + " does not match the records (" +
                          std::to_string(data.schema.n_folds) + " folds)");
      }
      std::vector<std::string> names = split_list(fit_mediators);
      if (names.empty()) {
        for (const auto& m : data.schema.mediators) names.push_back(m.name);
      }
      const CrossFitPlan plan = plan_from_records(data.records, data.schema.n_folds);
      std::vector<FittedMediatorModel> g;
      std::vector<FittedOutcomeModel> f;
      for (const auto& name : names) {
        g.push_back(fit_mediator_model(data, name, plan));
        f.push_back(fit_outcome_model(data, name, plan));
        spdlog::info("{}: {} smoothed mediator cells, {} smoothed outcome cells", name, g.back().smoothed.size(),
                     f.back().smoothed.size());
      }
      fs::create_directories(fit_out);
      auto g_out = open_out(fs::path(fit_out) / "mediator_tables.csv");
      write_mediator_tables_csv(g_out, data.schema, g);
      auto f_out = open_out(fs::path(fit_out) / "outcome_tables.csv");
      write_outcome_tables_csv(f_out, data.schema, f);
    } else if (estimate->parsed()) {
      const RecordSet data = load_records(est_records);
      std::vector<std::string> names = split_list(est_mediators);
      if (names.empty()) {
        for (const auto& m : data.schema.mediators) names.push_back(m.name);
      }
      est_config.seed = stage_seeds(est_seed).at("estimate");
      est_config.weighting = parse_x_weighting(est_weighting);
      const auto estimates = estimate_all(data, names, est_config);
      write_estimate_outputs(est_out, estimates);
      std::cout << render_report(estimates);
    } else if (simulate->parsed()) {
      const ScmSpec spec = load_scm_spec(sim_spec);
      const RecordSet data = generate(spec, sim_n, sim_seed, sim_folds);
      const fs::path dir(sim_out);
      fs::create_directories(dir);
      {
        auto out = open_out(dir / "records.jsonl");
        write_records(out, data);
      }
      if (spec.coupling == 0.0 && spec.carryover == 0.0) {
        nlohmann::ordered_json oracle = nlohmann::ordered_json::array();
        for (const auto& r : exact_effects(spec)) {
          oracle.push_back({{"mediator", r.mediator},
                            {"nde", r.nde_true},
                            {"nie", r.nie_true},
                            {"nie_reversed", r.nie_reversed_true},
                            {"total_effect", r.te_true}});
        }
        auto out = open_out(dir / "oracle.json");
        out << oracle.dump(2) << '\n';
      } else {
        spdlog::warn("coupling or carryover active: no oracle written");
      }
      if (sim_render) {
        const RenderedTranscript rendered = render_transcript(data, spec);
        auto out = open_out(dir / "transcripts.jsonl");
        write_transcript(out, rendered.utterances);
        auto meta_out = open_out(dir / "meta.jsonl");
        for (const auto& [case_id, attrs] : rendered.metadata) {
          nlohmann::ordered_json j{{"case_id", case_id}};
          for (const auto& [k, v] : attrs) j[k] = v;
          meta_out << j.dump() << '\n';
        }
      }
    } else if (study->parsed()) {
      const ScmSpec spec = load_scm_spec(study_spec);
      const auto rows = violation_study(spec, parse_knob(study_knob), parse_grid(study_grid), study_n, study_seed,
                                        study_options);
      if (study_out.empty()) {
        write_study_csv(std::cout, rows);
      } else {
        auto out = open_out(study_out);
        write_study_csv(out, rows);
      }
    } else if (run->parsed()) {
      if (run_config.empty() == run_manifest.empty()) throw ConfigError("run needs exactly one of --config, --manifest");
      const RunResult result = run_manifest.empty() ? run_pipeline(load_run_config(run_config), run_out)
                                                    : rerun_manifest(run_manifest, run_out);
      spdlog::info("{} advocate utterances: {} included, {} excluded", result.advocate_utterances, result.included,
                   result.excluded);
      std::cout << render_report(result.estimates);
    } else if (report->parsed()) {
      auto in = open_in(report_in);
      const auto estimates = read_estimates_jsonl(in);
      if (report_out.empty()) {
        std::cout << render_report(estimates);
      } else {
        fs::create_directories(report_out);
        auto summary = open_out(fs::path(report_out) / "summary.txt");
        summary << render_report(estimates);
        auto plot = open_out(fs::path(report_out) / "plot_data.csv");
        write_plot_data(plot, estimates);
      }
    }
  } catch (const ConfigError& e) {
    spdlog::error("config error: {}", e.what());
    return 2;
  } catch (const DataError& e) {
    spdlog::error("data error: {}", e.what());
    return 3;
  } catch (const NumericalError& e) {
    spdlog::error("numerical failure: {}", e.what());
    return 4;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 0;
}
