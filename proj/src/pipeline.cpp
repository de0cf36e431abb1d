#include "medlang/pipeline.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "json.hpp"
#include "medlang/corpus.hpp"
#include "medlang/crossfit.hpp"
#include "medlang/error.hpp"
#include "medlang/glm.hpp"
#include "medlang/random.hpp"
#include "medlang/records.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace medlang {
namespace {

const std::set<std::string> kKnownMediators = {"disfluency", "hedging", "topic"};

template <typename Fn>
auto in_stage(const char* stage, Fn&& fn) -> decltype(fn()) {
  const std::string prefix = std::string("stage ") + stage + ": ";
  try {
    return fn();
  } catch (const ConfigError& e) {
    throw ConfigError(prefix + e.what());
  } catch (const NumericalError& e) {
    throw NumericalError(prefix + e.what());
  } catch (const DataError& e) {
    throw DataError(prefix + e.what());
  }
}

std::ifstream open_input(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  return in;
}

void write_file(const fs::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << bytes;
  if (!out) throw ConfigError("write failed: " + path.string());
}

fs::path absolute_path(const fs::path& p, const fs::path& base) {
  if (p.empty()) return p;
  fs::path full = p.is_absolute() || base.empty() ? p : base / p;
  return fs::weakly_canonical(fs::absolute(full));
}

template <typename T>
T get_or(const ordered_json& j, const char* key, T fallback) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return fallback;
  try {
    return it->get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(std::string("config field '") + key + "' has the wrong type");
  }
}

ordered_json interval_json(const Interval& iv) { return ordered_json::array({iv.lower, iv.upper}); }

std::string hex(const unsigned char* data, unsigned n) {
  std::ostringstream out;
  out << std::hex << std::setfill('0');
  for (unsigned i = 0; i < n; ++i) out << std::setw(2) << static_cast<int>(data[i]);
  return out.str();
}

std::string pad(const std::string& s, std::size_t width) {
  return s.size() >= width ? s + " " : s + std::string(width - s.size(), ' ');
}

}  // namespace

std::string x_weighting_name(XWeighting weighting) {
  return weighting == XWeighting::per_unit ? "per_unit" : "marginal";
}

XWeighting parse_x_weighting(const std::string& name) {
  if (name == "per_unit") return XWeighting::per_unit;
  if (name == "marginal") return XWeighting::marginal;
  throw ConfigError("unknown x weighting '" + name + "' (expected per_unit or marginal)");
}

void RunConfig::validate() const {
  if (transcripts.empty()) throw ConfigError("transcripts path is required");
  if (!fs::is_regular_file(transcripts)) throw ConfigError("transcripts not found: " + transcripts.string());
  if (meta && !fs::is_regular_file(*meta)) throw ConfigError("metadata not found: " + meta->string());
  if (lexicon && !fs::is_regular_file(*lexicon)) throw ConfigError("lexicon not found: " + lexicon->string());
  if (folds < 2 || folds > 20) throw ConfigError("folds must be in [2, 20]");
  if (bootstrap < 100 || bootstrap > 100000) throw ConfigError("bootstrap must be in [100, 100000]");
  if (!(ci > 0.0 && ci < 1.0)) throw ConfigError("ci must be in (0, 1)");
  if (mediators.empty()) throw ConfigError("at least one mediator is required");
  std::set<std::string> seen;
  for (const auto& m : mediators) {
    if (!kKnownMediators.contains(m)) throw ConfigError("unknown mediator '" + m + "'");
    if (!seen.insert(m).second) throw ConfigError("duplicate mediator '" + m + "'");
  }
  if (topics.k < 2 || topics.k > 1000) throw ConfigError("topics.k must be in [2, 1000]");
  if (!(topics.alpha > 0.0) || !(topics.beta > 0.0)) throw ConfigError("topic priors must be positive");
  if (topics.sweeps < 1 || topics.burn_in < 0 || topics.burn_in >= topics.sweeps) {
    throw ConfigError("topics need sweeps >= 1 and 0 <= burn_in < sweeps");
  }
  if (topics.inference_iterations < 1) throw ConfigError("topics.inference_iterations must be >= 1");
  std::set<std::string> conf(confounders.begin(), confounders.end());
  if (conf.size() != confounders.size()) throw ConfigError("duplicate confounder");
  if (threads < 1 || threads > 256) throw ConfigError("threads must be in [1, 256]");
}

RunConfig parse_run_config(std::istream& in, const fs::path& base_dir) {
  ordered_json j;
  try {
    j = ordered_json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  static const std::set<std::string> known = {"transcripts", "meta",  "lexicon",     "seed",
                                              "folds",       "bootstrap", "ci",      "mediators",
                                              "topics",      "strict_dash", "x_weighting", "confounders",
                                              "threads"};
  for (const auto& [key, _] : j.items()) {
    if (!known.contains(key)) throw ConfigError("unknown config field '" + key + "'");
  }
  RunConfig c;
  c.transcripts = absolute_path(get_or<std::string>(j, "transcripts", ""), base_dir);
  if (auto meta = get_or<std::string>(j, "meta", ""); !meta.empty()) c.meta = absolute_path(meta, base_dir);
  if (auto lex = get_or<std::string>(j, "lexicon", ""); !lex.empty()) c.lexicon = absolute_path(lex, base_dir);
  if (j.contains("seed") && !j["seed"].is_number_unsigned()) throw ConfigError("seed must be a non-negative integer");
  c.seed = get_or<std::uint64_t>(j, "seed", c.seed);
  c.folds = get_or<int>(j, "folds", c.folds);
  c.bootstrap = get_or<int>(j, "bootstrap", c.bootstrap);
  c.ci = get_or<double>(j, "ci", c.ci);
  c.mediators = get_or<std::vector<std::string>>(j, "mediators", c.mediators);
  if (auto it = j.find("topics"); it != j.end() && !it->is_null()) {
    if (!it->is_object()) throw ConfigError("topics must be an object");
    auto& t = c.topics;
    t.k = get_or<int>(*it, "k", t.k);
    t.alpha = get_or<double>(*it, "alpha", t.alpha);
    t.beta = get_or<double>(*it, "beta", t.beta);
    t.sweeps = get_or<int>(*it, "sweeps", t.sweeps);
    t.burn_in = get_or<int>(*it, "burn_in", t.burn_in);
    t.inference_iterations = get_or<int>(*it, "inference_iterations", t.inference_iterations);
  }
  c.strict_dash = get_or<bool>(j, "strict_dash", c.strict_dash);
  c.x_weighting = parse_x_weighting(get_or<std::string>(j, "x_weighting", "per_unit"));
  c.confounders = get_or<std::vector<std::string>>(j, "confounders", c.confounders);
  c.threads = get_or<unsigned>(j, "threads", c.threads);
  return c;
}

RunConfig load_run_config(const fs::path& path) {
  auto in = open_input(path);
  return parse_run_config(in, fs::absolute(path).parent_path());
}

namespace {

ordered_json config_to_json(const RunConfig& c) {
  ordered_json j;
  j["transcripts"] = c.transcripts.string();
  j["meta"] = c.meta ? ordered_json(c.meta->string()) : ordered_json(nullptr);
  j["lexicon"] = c.lexicon ? ordered_json(c.lexicon->string()) : ordered_json(nullptr);
  j["seed"] = c.seed;
  j["folds"] = c.folds;
  j["bootstrap"] = c.bootstrap;
  j["ci"] = c.ci;
  j["mediators"] = c.mediators;
  j["topics"] = {{"k", c.topics.k},
                 {"alpha", c.topics.alpha},
                 {"beta", c.topics.beta},
                 {"sweeps", c.topics.sweeps},
                 {"burn_in", c.topics.burn_in},
                 {"inference_iterations", c.topics.inference_iterations}};
  j["strict_dash"] = c.strict_dash;
  j["x_weighting"] = x_weighting_name(c.x_weighting);
  j["confounders"] = c.confounders;
  j["threads"] = c.threads;
  return j;
}

ordered_json estimate_json(const EffectEstimate& e) {
  ordered_json j;
  j["mediator"] = e.mediator_name;
  j["nde"] = e.nde;
  j["nde_ci"] = interval_json(e.nde_ci);
  j["nie"] = e.nie;
  j["nie_ci"] = interval_json(e.nie_ci);
  j["nie_reversed"] = e.nie_reversed;
  j["total_effect"] = e.total_effect;
  j["ci_level"] = e.ci_level;
  j["n_units"] = e.n_units;
  j["n_bootstrap"] = e.n_bootstrap;
  j["n_dropped"] = e.n_dropped;
  j["widened"] = e.widened;
  j["caveat"] = e.caveat;
  return j;
}

}  // namespace

std::string run_config_json(const RunConfig& config) { return config_to_json(config).dump(2) + "\n"; }

std::map<std::string, std::uint64_t> stage_seeds(std::uint64_t root) {
  return {{"measure", root}, {"folds", derive_seed(root, "folds")}, {"estimate", derive_seed(root, "estimate")}};
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 computation failed");
  }
  return hex(digest, len);
}

std::string sha256_file(const fs::path& path) {
  auto in = open_input(path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return sha256_hex(buf.str());
}

void write_estimates_csv(std::ostream& out, const std::vector<EffectEstimate>& estimates) {
  out << "mediator,nde,nde_lower,nde_upper,nie,nie_lower,nie_upper,nie_reversed,total_effect,ci_level,"
         "n_units,n_bootstrap,n_dropped,widened\r\n";
  for (const auto& e : estimates) {
    out << csv_field(e.mediator_name) << ',' << format_double(e.nde) << ',' << format_double(e.nde_ci.lower) << ','
        << format_double(e.nde_ci.upper) << ',' << format_double(e.nie) << ',' << format_double(e.nie_ci.lower)
        << ',' << format_double(e.nie_ci.upper) << ',' << format_double(e.nie_reversed) << ','
        << format_double(e.total_effect) << ',' << format_double(e.ci_level) << ',' << e.n_units << ','
        << e.n_bootstrap << ',' << e.n_dropped << ',' << (e.widened ? "true" : "false") << "\r\n";
  }
}

void write_estimates_jsonl(std::ostream& out, const std::vector<EffectEstimate>& estimates) {
  for (const auto& e : estimates) out << estimate_json(e).dump() << '\n';
}

std::vector<EffectEstimate> read_estimates_jsonl(std::istream& in) {
  std::vector<EffectEstimate> result;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      auto j = nlohmann::json::parse(line);
      EffectEstimate e;
      e.mediator_name = j.at("mediator").get<std::string>();
      e.nde = j.at("nde").get<double>();
      e.nde_ci = {j.at("nde_ci").at(0).get<double>(), j.at("nde_ci").at(1).get<double>()};
      e.nie = j.at("nie").get<double>();
      e.nie_ci = {j.at("nie_ci").at(0).get<double>(), j.at("nie_ci").at(1).get<double>()};
      e.nie_reversed = j.at("nie_reversed").get<double>();
      e.total_effect = j.at("total_effect").get<double>();
      e.ci_level = j.at("ci_level").get<double>();
      e.n_units = j.at("n_units").get<std::size_t>();
      e.n_bootstrap = j.at("n_bootstrap").get<int>();
      e.n_dropped = j.at("n_dropped").get<int>();
      e.widened = j.at("widened").get<bool>();
      if (j.contains("caveat")) e.caveat = j["caveat"].get<std::string>();
      result.push_back(std::move(e));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(line_no, e.what());
    }
  }
  return result;
}

void write_plot_data(std::ostream& out, const std::vector<EffectEstimate>& estimates) {
  out << "mediator,effect,estimate,lower,upper\r\n";
  for (const auto& e : estimates) {
    const std::string m = csv_field(e.mediator_name);
    out << m << ",nde," << format_double(e.nde) << ',' << format_double(e.nde_ci.lower) << ','
        << format_double(e.nde_ci.upper) << "\r\n";
    out << m << ",nie," << format_double(e.nie) << ',' << format_double(e.nie_ci.lower) << ','
        << format_double(e.nie_ci.upper) << "\r\n";
    out << m << ",total_effect," << format_double(e.total_effect) << ",,\r\n";
  }
}

std::string render_report(std::vector<EffectEstimate> estimates) {
  std::sort(estimates.begin(), estimates.end(),
            [](const EffectEstimate& a, const EffectEstimate& b) { return a.mediator_name < b.mediator_name; });
  std::ostringstream out;
  out << "Mediation estimates\n";
  out << pad("mediator", 12) << pad("nde", 24) << pad("nde_ci", 48) << pad("nie", 24) << pad("nie_ci", 48)
      << pad("total_effect", 24) << pad("ci_level", 10) << pad("n_units", 9) << "n_bootstrap\n";
  for (const auto& e : estimates) {
    out << pad(e.mediator_name, 12) << pad(format_double(e.nde), 24)
        << pad("[" + format_double(e.nde_ci.lower) + ", " + format_double(e.nde_ci.upper) + "]", 48)
        << pad(format_double(e.nie), 24)
        << pad("[" + format_double(e.nie_ci.lower) + ", " + format_double(e.nie_ci.upper) + "]", 48)
        << pad(format_double(e.total_effect), 24) << pad(format_double(e.ci_level), 10)
        << pad(std::to_string(e.n_units), 9) << e.n_bootstrap << '\n';
  }
  if (estimates.empty()) return out.str();
  out << "\nCaveat\n" << kDirectEffectCaveat << '\n';
  for (const auto& e : estimates) {
    if (e.n_dropped > 0) {
      out << "note: " << e.mediator_name << " dropped " << e.n_dropped << " bootstrap replicates\n";
    }
    if (e.widened) out << "note: " << e.mediator_name << " interval widened to contain the point estimate\n";
  }
  return out.str();
}

RunResult run_pipeline(const RunConfig& config, const fs::path& out_dir) {
  config.validate();
  fs::create_directories(out_dir);
  const auto seeds = stage_seeds(config.seed);
  RunResult result;
  std::ostringstream warnings;

  UnitCorpus corpus = in_stage("ingest", [&] {
    auto in = open_input(config.transcripts);
    UnitCorpus c;
    c.utterances = parse_transcript(in);
    CaseMetadata metadata;
    if (config.meta) {
      auto meta_in = open_input(*config.meta);
      metadata = parse_case_metadata(meta_in);
    }
    ExtractOptions options;
    options.strict_dash = config.strict_dash;
    c.units = extract_units(c.utterances, metadata, options);
    return c;
  });
  for (const auto& u : corpus.utterances) {
    if (u.speaker_role == SpeakerRole::advocate) ++result.advocate_utterances;
  }
  {
    std::ostringstream units;
    write_units(units, corpus);
    write_file(out_dir / "units.jsonl", units.str());
  }

  const bool want_topic =
      std::find(config.mediators.begin(), config.mediators.end(), "topic") != config.mediators.end();
  BuildResult built = in_stage("measure", [&] {
    MeasurementSpec spec;
    if (config.lexicon) spec.hedging_lexicon = HedgingLexicon::load_file(config.lexicon->string());
    spec.strict_dash = config.strict_dash;
    spec.confounders = config.confounders;
    spec.topics.enabled = want_topic;
    spec.topics.model.k = config.topics.k;
    spec.topics.model.alpha = config.topics.alpha;
    spec.topics.model.beta = config.topics.beta;
    spec.topics.model.sweeps = config.topics.sweeps;
    spec.topics.model.burn_in = config.topics.burn_in;
    spec.topics.model.inference_iterations = config.topics.inference_iterations;
    return build_records(corpus, spec, config.folds, seeds.at("measure"));
  });
  result.included = built.records.records.size();
  result.excluded = built.exclusions.size();
  if (result.included + result.excluded != result.advocate_utterances) {
    throw DataError("stage measure: unit ledger does not balance");
  }
  for (const auto& ex : built.exclusions) {
    warnings << ordered_json{{"type", "exclusion"}, {"unit_id", ex.unit_id}, {"reason", ex.reason}}.dump() << '\n';
  }
  {
    std::ostringstream records;
    write_records(records, built.records);
    write_file(out_dir / "records.jsonl", records.str());
  }
  const RecordSet& data = built.records;

  EstimationConfig est;
  est.n_bootstrap = config.bootstrap;
  est.seed = seeds.at("estimate");
  est.ci_level = config.ci;
  est.weighting = config.x_weighting;
  est.threads = config.threads;

  in_stage("fit", [&] {
    const CrossFitPlan plan = plan_from_records(data.records, data.schema.n_folds);
    std::vector<FittedMediatorModel> g;
    std::vector<FittedOutcomeModel> f;
    for (const auto& name : config.mediators) {
      g.push_back(fit_mediator_model(data, name, plan, est.glm));
      f.push_back(fit_outcome_model(data, name, plan, est.glm));
    }
    std::ostringstream g_csv, f_csv;
    write_mediator_tables_csv(g_csv, data.schema, g);
    write_outcome_tables_csv(f_csv, data.schema, f);
    write_file(out_dir / "mediator_tables.csv", g_csv.str());
    write_file(out_dir / "outcome_tables.csv", f_csv.str());
    auto log_cells = [&](const std::vector<SmoothedCell>& cells) {
      for (const auto& c : cells) {
        ordered_json j{{"type", "smoothed_cell"},
                       {"mediator", c.mediator},
                       {"model", c.model == ModelKind::mediator ? "mediator" : "outcome"},
                       {"fold", c.fold},
                       {"t", c.t}};
        if (c.m >= 0) j["m"] = c.m;
        ordered_json x;
        const auto levels = data.schema.cell_levels(c.cell);
        for (std::size_t i = 0; i < levels.size(); ++i) x[data.schema.confounders[i].name] = levels[i];
        j["x"] = x.is_null() ? ordered_json::object() : x;
        warnings << j.dump() << '\n';
      }
    };
    for (const auto& m : g) log_cells(m.smoothed);
    for (const auto& m : f) log_cells(m.smoothed);
  });

  result.estimates = in_stage("estimate", [&] { return estimate_all(data, config.mediators, est); });
  for (const auto& e : result.estimates) {
    if (e.n_dropped > 0) {
      warnings << ordered_json{{"type", "dropped_replicates"}, {"mediator", e.mediator_name}, {"count", e.n_dropped}}
                      .dump()
               << '\n';
    }
    if (e.widened) {
      warnings << ordered_json{{"type", "widened_interval"}, {"mediator", e.mediator_name}}.dump() << '\n';
    }
  }
  warnings << ordered_json{{"type", "ledger"},
                           {"advocate_utterances", result.advocate_utterances},
                           {"included", result.included},
                           {"excluded", result.excluded}}
                  .dump()
           << '\n';

  in_stage("report", [&] {
    std::ostringstream csv, jsonl, plot;
    write_estimates_csv(csv, result.estimates);
    write_estimates_jsonl(jsonl, result.estimates);
    write_plot_data(plot, result.estimates);
    write_file(out_dir / "estimates.csv", csv.str());
    write_file(out_dir / "estimates.jsonl", jsonl.str());
    write_file(out_dir / "plot_data.csv", plot.str());
    write_file(out_dir / "summary.txt", render_report(result.estimates));
    write_file(out_dir / "warnings.jsonl", warnings.str());
  });

  for (const char* name : {"units.jsonl", "records.jsonl", "mediator_tables.csv", "outcome_tables.csv",
                           "estimates.csv", "estimates.jsonl", "plot_data.csv", "summary.txt", "warnings.jsonl"}) {
    result.checksums[name] = sha256_file(out_dir / name);
  }

  ordered_json manifest;
  manifest["config"] = config_to_json(config);
  ordered_json seeds_json;
  for (const auto& [stage, s] : seeds) seeds_json[stage] = s;
  manifest["stage_seeds"] = seeds_json;
  ordered_json inputs;
  inputs[config.transcripts.string()] = sha256_file(config.transcripts);
  if (config.meta) inputs[config.meta->string()] = sha256_file(*config.meta);
  if (config.lexicon) inputs[config.lexicon->string()] = sha256_file(*config.lexicon);
  manifest["inputs"] = inputs;
  ordered_json artifacts;
  for (const auto& [name, digest] : result.checksums) artifacts[name] = digest;
  manifest["artifacts"] = artifacts;
  write_file(out_dir / "manifest.json", manifest.dump(2) + "\n");
  return result;
}

Manifest load_manifest(const fs::path& path) {
  auto in = open_input(path);
  ordered_json j;
  try {
    j = ordered_json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("manifest is not valid JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("config")) throw ConfigError("manifest has no config");
  Manifest m;
  std::istringstream config_in(j["config"].dump());
  m.config = parse_run_config(config_in);
  try {
    m.inputs = j.value("inputs", ordered_json::object()).get<std::map<std::string, std::string>>();
    m.artifacts = j.value("artifacts", ordered_json::object()).get<std::map<std::string, std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed manifest: ") + e.what());
  }
  return m;
}

RunResult rerun_manifest(const fs::path& manifest_path, const fs::path& out_dir) {
  const Manifest m = load_manifest(manifest_path);
  m.config.validate();
  for (const auto& [path, digest] : m.inputs) {
    if (sha256_file(path) != digest) throw DataError("input changed since the manifest was written: " + path);
  }
  RunResult result = run_pipeline(m.config, out_dir);
  for (const auto& [name, digest] : m.artifacts) {
    auto it = result.checksums.find(name);
    if (it == result.checksums.end() || it->second != digest) {
      throw DataError("rerun differs from manifest in " + name);
    }
  }
  return result;
}

}  // namespace medlang
