#ifndef MEDLANG_PIPELINE_HPP
#define MEDLANG_PIPELINE_HPP

#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "medlang/mediation.hpp"
#include "medlang/measure.hpp"

namespace medlang {

struct TopicHyperparameters {
  int k = 20;
  double alpha = 0.1;
  double beta = 0.01;
  int sweeps = 1000;
  int burn_in = 500;
  int inference_iterations = 100;
};

/// Everything a run depends on. Paths are stored absolute.
struct RunConfig {
  std::filesystem::path transcripts;
  std::optional<std::filesystem::path> meta;
  std::optional<std::filesystem::path> lexicon;
  std::uint64_t seed = 0;
  int folds = 2;
  int bootstrap = 1000;
  double ci = 0.90;
  std::vector<std::string> mediators = {"disfluency", "hedging", "topic"};
  TopicHyperparameters topics;
  bool strict_dash = false;
  XWeighting x_weighting = XWeighting::per_unit;
  std::vector<std::string> confounders = {"issue_area", "prior_interruptions"};
  unsigned threads = 1;

  /// ConfigError on a missing input file or an out-of-range value.
  void validate() const;
};

/// Relative paths are resolved against `base_dir`.
RunConfig parse_run_config(std::istream& in, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);
std::string run_config_json(const RunConfig& config);

std::string x_weighting_name(XWeighting weighting);
XWeighting parse_x_weighting(const std::string& name);

/// Seeds handed to each stage, all derived from the root seed.
std::map<std::string, std::uint64_t> stage_seeds(std::uint64_t root);

struct RunResult {
  std::size_t advocate_utterances = 0;
  std::size_t included = 0;
  std::size_t excluded = 0;
  std::vector<EffectEstimate> estimates;
  /// Artifact file name -> SHA-256 hex digest, manifest excluded.
  std::map<std::string, std::string> checksums;
};

/// Runs ingest, measure, fit, estimate and report, writing every artifact
/// plus manifest.json into out_dir. Stage failures are rethrown with the same
/// error class and the stage name prefixed to the message.
RunResult run_pipeline(const RunConfig& config, const std::filesystem::path& out_dir);

struct Manifest {
  RunConfig config;
  std::map<std::string, std::string> inputs;
  std::map<std::string, std::string> artifacts;
};

Manifest load_manifest(const std::filesystem::path& path);

/// Reruns a manifest into out_dir. DataError when an input no longer matches
/// its recorded checksum or when an artifact differs from the recorded one.
RunResult rerun_manifest(const std::filesystem::path& manifest_path, const std::filesystem::path& out_dir);

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::filesystem::path& path);

/// Per-mediator table sorted by mediator name, followed by the caveat block.
std::string render_report(std::vector<EffectEstimate> estimates);
void write_estimates_csv(std::ostream& out, const std::vector<EffectEstimate>& estimates);
void write_estimates_jsonl(std::ostream& out, const std::vector<EffectEstimate>& estimates);
std::vector<EffectEstimate> read_estimates_jsonl(std::istream& in);
/// mediator, effect, estimate, lower, upper; total_effect has no interval.
void write_plot_data(std::ostream& out, const std::vector<EffectEstimate>& estimates);

}  // namespace medlang

#endif  // MEDLANG_PIPELINE_HPP
