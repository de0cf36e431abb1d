#include "medlang/corpus.hpp"

#include <algorithm>
#include <set>
#include <sstream>
#include <utility>

#include "json.hpp"

#include "medlang/error.hpp"
#include "medlang/text.hpp"

namespace medlang {
namespace {

using json = nlohmann::ordered_json;

constexpr std::string_view kTranscriptFields[] = {"case_id", "index", "speaker_id",
                                                  "speaker_role", "text"};

Utterance utterance_from_json(const json& obj, std::size_t line, bool allow_type) {
  if (!obj.is_object()) throw ParseError(line, "record is not an object");
  for (const auto& [key, value] : obj.items()) {
    if (allow_type && key == "type") continue;
    if (std::find(std::begin(kTranscriptFields), std::end(kTranscriptFields), key) ==
        std::end(kTranscriptFields)) {
      throw ParseError(line, "unexpected field '" + key + "'");
    }
  }
  for (auto field : kTranscriptFields) {
    if (!obj.contains(field)) throw ParseError(line, "missing field '" + std::string(field) + "'");
  }
  const auto& index = obj["index"];
  if (!index.is_number_integer() || index.get<long long>() < 0) {
    throw ParseError(line, "index must be a non-negative integer");
  }
  for (auto field : {"case_id", "speaker_id", "speaker_role", "text"}) {
    if (!obj[field].is_string()) throw ParseError(line, std::string(field) + " must be a string");
  }
  Utterance u;
  u.case_id = obj["case_id"].get<std::string>();
  u.index = index.get<std::size_t>();
  u.speaker_id = obj["speaker_id"].get<std::string>();
  try {
    u.speaker_role = parse_speaker_role(obj["speaker_role"].get<std::string>());
  } catch (const DataError& e) {
    throw ParseError(line, e.what());
  }
  u.text = obj["text"].get<std::string>();
  if (text::trim(u.text).empty()) throw ParseError(line, "text is empty");
  return u;
}

json utterance_to_json(const Utterance& u) {
  json obj;
  obj["case_id"] = u.case_id;
  obj["index"] = u.index;
  obj["speaker_id"] = u.speaker_id;
  obj["speaker_role"] = std::string(to_string(u.speaker_role));
  obj["text"] = u.text;
  return obj;
}

json parse_line(const std::string& line, std::size_t line_no) {
  try {
    return json::parse(line);
  } catch (const json::parse_error& e) {
    throw ParseError(line_no, std::string("malformed record: ") + e.what());
  }
}

// Checks unique, contiguous-from-zero indices per case; returns nothing,
// throws on the first violation.
class IndexChecker {
 public:
  void add(const Utterance& u, std::size_t line) {
    if (!seen_[u.case_id].insert(u.index).second) {
      throw ParseError(line, "duplicate (case_id, index) = (" + u.case_id + ", " +
                                 std::to_string(u.index) + ")");
    }
  }

  void finish() const {
    for (const auto& [case_id, indices] : seen_) {
      if (*indices.rbegin() + 1 != indices.size()) {
        throw DataError("case " + case_id + ": indices are not contiguous from 0");
      }
    }
  }

 private:
  std::map<std::string, std::set<std::size_t>> seen_;
};

}  // namespace

std::string_view to_string(SpeakerRole role) {
  switch (role) {
    case SpeakerRole::advocate: return "advocate";
    case SpeakerRole::justice: return "justice";
    case SpeakerRole::chief_justice: return "chief_justice";
  }
  return "advocate";
}

SpeakerRole parse_speaker_role(std::string_view value) {
  if (value == "advocate") return SpeakerRole::advocate;
  if (value == "justice") return SpeakerRole::justice;
  if (value == "chief_justice") return SpeakerRole::chief_justice;
  throw DataError("unknown speaker_role '" + std::string(value) + "'");
}

std::vector<Utterance> parse_transcript(std::istream& in) {
  std::vector<Utterance> out;
  IndexChecker checker;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    out.push_back(utterance_from_json(parse_line(line, line_no), line_no, false));
    checker.add(out.back(), line_no);
  }
  checker.finish();
  return out;
}

std::vector<Utterance> parse_transcript_string(std::string_view data) {
  std::istringstream in{std::string(data)};
  return parse_transcript(in);
}

void write_transcript(std::ostream& out, const std::vector<Utterance>& utterances) {
  for (const auto& u : utterances) out << utterance_to_json(u).dump() << '\n';
}

CaseMetadata parse_case_metadata(std::istream& in) {
  CaseMetadata meta;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    const json obj = parse_line(line, line_no);
    if (!obj.is_object() || !obj.contains("case_id") || !obj["case_id"].is_string()) {
      throw ParseError(line_no, "metadata record needs a string case_id");
    }
    const auto case_id = obj["case_id"].get<std::string>();
    if (meta.contains(case_id)) throw ParseError(line_no, "duplicate metadata for case " + case_id);
    ContextFeatures features;
    for (const auto& [key, value] : obj.items()) {
      if (key == "case_id") continue;
      if (value.is_string()) {
        features[key] = value.get<std::string>();
      } else if (value.is_number_integer() || value.is_boolean()) {
        features[key] = value.dump();
      } else {
        throw ParseError(line_no, "metadata attribute '" + key + "' is not categorical");
      }
    }
    meta.emplace(case_id, std::move(features));
  }
  return meta;
}

std::string bucket_prior_interruptions(std::size_t count) {
  if (count == 0) return "0";
  if (count == 1) return "1";
  return "2+";
}

std::map<std::string, std::vector<Utterance>> group_by_case(const std::vector<Utterance>& utterances) {
  std::map<std::string, std::vector<Utterance>> cases;
  for (const auto& u : utterances) cases[u.case_id].push_back(u);
  for (auto& [id, turns] : cases) {
    std::sort(turns.begin(), turns.end(),
              [](const Utterance& a, const Utterance& b) { return a.index < b.index; });
  }
  return cases;
}

std::vector<AnalysisUnit> extract_units(const std::vector<Utterance>& utterances,
                                        const CaseMetadata& metadata,
                                        const ExtractOptions& options) {
  std::map<std::pair<std::string, std::size_t>, const Utterance*> by_position;
  for (const auto& u : utterances) by_position[{u.case_id, u.index}] = &u;

  auto next_turn = [&](const Utterance& u) -> const Utterance* {
    auto it = by_position.find({u.case_id, u.index + 1});
    return it == by_position.end() ? nullptr : it->second;
  };

  // Running count of answered-and-interrupted advocate turns before each
  // advocate turn of the same case; by_position iterates in (case, index) order.
  std::map<std::pair<std::string, std::size_t>, std::size_t> prior_count;
  {
    std::string current_case;
    std::size_t running = 0;
    for (const auto& [key, u] : by_position) {
      if (key.first != current_case) {
        current_case = key.first;
        running = 0;
      }
      if (u->speaker_role != SpeakerRole::advocate) continue;
      prior_count[key] = running;
      const Utterance* reply = next_turn(*u);
      if (reply && is_responder(reply->speaker_role) &&
          text::ends_with_interruption_marker(u->text, options.strict_dash)) {
        ++running;
      }
    }
  }

  std::vector<AnalysisUnit> units;
  for (const auto& u : utterances) {
    if (u.speaker_role != SpeakerRole::advocate) continue;
    AnalysisUnit unit;
    unit.unit_id = u.case_id + ":" + std::to_string(u.index);
    unit.p1_utterance = u;
    const Utterance* reply = next_turn(u);
    if (reply && is_responder(reply->speaker_role)) unit.p2_utterance = *reply;

    if (auto it = metadata.find(u.case_id); it != metadata.end()) {
      unit.context_features = it->second;
    }
    unit.context_features.try_emplace(std::string(context::issue_area),
                                      std::string(context::unknown_level));
    unit.context_features[std::string(context::prior_interruptions)] =
        bucket_prior_interruptions(prior_count[{u.case_id, u.index}]);
    unit.context_features[std::string(context::responder_role)] =
        unit.p2_utterance ? std::string(to_string(unit.p2_utterance->speaker_role)) : "none";
    units.push_back(std::move(unit));
  }
  return units;
}

void write_units(std::ostream& out, const UnitCorpus& corpus) {
  for (const auto& u : corpus.utterances) {
    json obj;
    obj["type"] = "utterance";
    obj.update(utterance_to_json(u));
    out << obj.dump() << '\n';
  }
  for (const auto& unit : corpus.units) {
    json obj;
    obj["type"] = "unit";
    obj["unit_id"] = unit.unit_id;
    obj["case_id"] = unit.p1_utterance.case_id;
    obj["p1_index"] = unit.p1_utterance.index;
    obj["p2_index"] = unit.p2_utterance ? json(unit.p2_utterance->index) : json(nullptr);
    obj["context"] = unit.context_features;
    out << obj.dump() << '\n';
  }
}

UnitCorpus read_units(std::istream& in) {
  UnitCorpus corpus;
  std::map<std::pair<std::string, std::size_t>, std::size_t> position;
  std::set<std::string> unit_ids;
  IndexChecker checker;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    const json obj = parse_line(line, line_no);
    const std::string type = obj.is_object() ? obj.value("type", "") : "";
    if (type == "utterance") {
      auto u = utterance_from_json(obj, line_no, true);
      checker.add(u, line_no);
      position[{u.case_id, u.index}] = corpus.utterances.size();
      corpus.utterances.push_back(std::move(u));
    } else if (type == "unit") {
      AnalysisUnit unit;
      try {
        unit.unit_id = obj.at("unit_id").get<std::string>();
        const auto case_id = obj.at("case_id").get<std::string>();
        auto lookup = [&](std::size_t index) -> const Utterance& {
          auto it = position.find({case_id, index});
          if (it == position.end()) {
            throw ParseError(line_no, "unit references unknown utterance " + case_id + ":" +
                                          std::to_string(index));
          }
          return corpus.utterances[it->second];
        };
        unit.p1_utterance = lookup(obj.at("p1_index").get<std::size_t>());
        if (!obj.at("p2_index").is_null()) {
          unit.p2_utterance = lookup(obj.at("p2_index").get<std::size_t>());
        }
        unit.context_features = obj.at("context").get<ContextFeatures>();
      } catch (const json::exception& e) {
        throw ParseError(line_no, std::string("malformed unit: ") + e.what());
      }
      if (unit.p1_utterance.speaker_role != SpeakerRole::advocate) {
        throw ParseError(line_no, "unit p1 is not an advocate turn");
      }
      if (!unit_ids.insert(unit.unit_id).second) {
        throw ParseError(line_no, "duplicate unit_id " + unit.unit_id);
      }
      corpus.units.push_back(std::move(unit));
    } else {
      throw ParseError(line_no, "unknown record type");
    }
  }
  checker.finish();
  return corpus;
}

}  // namespace medlang
