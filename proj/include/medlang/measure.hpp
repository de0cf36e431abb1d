#ifndef MEDLANG_MEASURE_HPP
#define MEDLANG_MEASURE_HPP

#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "medlang/corpus.hpp"
#include "medlang/records.hpp"
#include "medlang/topic_model.hpp"

namespace medlang {

/// Non-empty set of lowercase, whitespace-normalised hedging phrases.
class HedgingLexicon {
 public:
  /// ConfigError if no phrase survives normalisation.
  explicit HedgingLexicon(const std::vector<std::string>& phrases);

  /// One phrase per line; '#' starts a comment.
  static HedgingLexicon load(std::istream& in);
  static HedgingLexicon load_file(const std::string& path);
  static HedgingLexicon defaults();

  const std::vector<std::vector<std::string>>& phrases() const { return phrases_; }
  std::vector<std::string> phrase_strings() const;

 private:
  std::vector<std::vector<std::string>> phrases_;  // tokenised, sorted, unique
};

/// Honorific used by the chief justice's introduction mapped to the treatment
/// level. Must be a bijection onto {0, 1}.
class HonorificMap {
 public:
  HonorificMap();  // {"Ms." -> 1, "Mr." -> 0}
  explicit HonorificMap(const std::map<std::string, int>& mapping);

  std::optional<int> lookup(std::string_view normalized_token) const;

 private:
  std::map<std::string, int> map_;  // keys normalised like tokens
};

/// Topic-mediator settings; topics are only measured when enabled.
struct TopicSettings {
  bool enabled = true;
  TopicModelConfig model;
};

struct MeasurementSpec {
  HedgingLexicon hedging_lexicon = HedgingLexicon::defaults();
  HonorificMap honorifics;
  TopicSettings topics;
  /// Only accept "- -" (not "--") as the cut-off and disfluency dash.
  bool strict_dash = false;
  /// Context features copied into the confounder mapping x.
  std::vector<std::string> confounders = {"issue_area", "prior_interruptions"};
};

namespace mediator_names {
inline constexpr std::string_view hedging = "hedging";
inline constexpr std::string_view disfluency = "disfluency";
inline constexpr std::string_view topic = "topic";
}  // namespace mediator_names

/// Surname used to match introductions: the last space- or
/// underscore-separated piece of the speaker id, normalised like a token.
std::string advocate_surname(std::string_view speaker_id);

/// Treatment from the chief justice's first honorific applied to the
/// advocate's surname, scanning chief-justice turns in index order. Empty when
/// no introduction is found.
std::optional<int> label_treatment(const std::vector<Utterance>& case_utterances,
                                   std::string_view advocate_id,
                                   const HonorificMap& honorifics = {});

/// 1 iff the advocate turn ends with the cut-off marker. DataError when the
/// unit has no responding turn (outcome undefined).
int label_interruption(const AnalysisUnit& unit, bool strict_dash = false);

/// 1 iff some lexicon phrase occurs as a contiguous token sequence.
int measure_hedging(std::string_view text, const HedgingLexicon& lexicon);

/// 1 iff the tokens contain "w - - w" for some word w (or "w -- w" unless strict).
int measure_disfluency(std::string_view text, bool strict_dash = false);

struct Exclusion {
  std::string unit_id;
  std::string reason;
};

namespace exclusion_reasons {
inline constexpr std::string_view no_response = "no_response";
inline constexpr std::string_view no_introduction = "no_introduction";
}  // namespace exclusion_reasons

struct BuildResult {
  RecordSet records;
  std::vector<Exclusion> exclusions;
};

/// Measures every unit with a defined treatment and outcome. Folds come from
/// make_plan over the kept unit ids with a seed derived from `seed`. The topic
/// model for fold f is fitted on the advocate texts of fold f's training units
/// only, then frozen and applied to every unit.
BuildResult build_records(const UnitCorpus& corpus, const MeasurementSpec& spec, int n_folds,
                          std::uint64_t seed);

}  // namespace medlang

#endif  // MEDLANG_MEASURE_HPP
