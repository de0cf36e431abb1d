#ifndef MEDLANG_CORPUS_HPP
#define MEDLANG_CORPUS_HPP

#include <cstddef>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace medlang {

enum class SpeakerRole { advocate, justice, chief_justice };

std::string_view to_string(SpeakerRole role);
/// Throws DataError naming the value when it is not a known role.
SpeakerRole parse_speaker_role(std::string_view value);

inline bool is_responder(SpeakerRole role) {
  return role == SpeakerRole::justice || role == SpeakerRole::chief_justice;
}

struct Utterance {
  std::string case_id;
  std::size_t index = 0;
  std::string speaker_id;
  SpeakerRole speaker_role = SpeakerRole::advocate;
  std::string text;

  bool operator==(const Utterance&) const = default;
};

/// Categorical context attached to a unit; every value is a level label.
using ContextFeatures = std::map<std::string, std::string>;

/// An advocate turn and the justice turn that immediately answers it, if any.
struct AnalysisUnit {
  std::string unit_id;
  Utterance p1_utterance;
  std::optional<Utterance> p2_utterance;
  ContextFeatures context_features;

  bool has_response() const { return p2_utterance.has_value(); }
};

/// Per-case categorical attributes from the metadata sidecar.
using CaseMetadata = std::map<std::string, ContextFeatures>;

namespace context {
inline constexpr std::string_view prior_interruptions = "prior_interruptions";
inline constexpr std::string_view issue_area = "issue_area";
inline constexpr std::string_view responder_role = "responder_role";
inline constexpr std::string_view unknown_level = "unknown";
}  // namespace context

/// Unit of analysis granularity. Only adjacent pairs are implemented; the
/// downstream estimator assumes i.i.d. units.
enum class UnitGranularity { utterance_pair };

/// Parses newline-delimited transcript records (case_id, index, speaker_id,
/// speaker_role, text). Blank lines are skipped. Utterances are returned in
/// file order; per case the indices must be unique and form 0..n-1.
std::vector<Utterance> parse_transcript(std::istream& in);
std::vector<Utterance> parse_transcript_string(std::string_view data);

/// Writes utterances in the transcript format; parse_transcript reads it back.
void write_transcript(std::ostream& out, const std::vector<Utterance>& utterances);

/// Reads the optional case metadata sidecar: one object per line holding a
/// case_id plus categorical attributes.
CaseMetadata parse_case_metadata(std::istream& in);

struct ExtractOptions {
  UnitGranularity granularity = UnitGranularity::utterance_pair;
  bool strict_dash = false;
};

/// Builds one unit per advocate utterance, in advocate-utterance order.
std::vector<AnalysisUnit> extract_units(const std::vector<Utterance>& utterances,
                                        const CaseMetadata& metadata = {},
                                        const ExtractOptions& options = {});

std::string bucket_prior_interruptions(std::size_t count);

/// Units file: the parsed utterances followed by the units that reference
/// them by (case_id, index). This keeps full cases available to the
/// treatment labeller.
struct UnitCorpus {
  std::vector<Utterance> utterances;
  std::vector<AnalysisUnit> units;
};

void write_units(std::ostream& out, const UnitCorpus& corpus);
UnitCorpus read_units(std::istream& in);

/// Utterances grouped by case and ordered by index.
std::map<std::string, std::vector<Utterance>> group_by_case(const std::vector<Utterance>& utterances);

}  // namespace medlang

#endif  // MEDLANG_CORPUS_HPP
