#include "medlang/measure.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "medlang/crossfit.hpp"
#include "medlang/error.hpp"
#include "medlang/random.hpp"
#include "medlang/text.hpp"

namespace medlang {
namespace {

constexpr std::string_view kDefaultLexicon[] = {
    "i think", "i mean",  "i don't think so", "sort of",    "kind of",
    "perhaps", "maybe",   "i guess",          "i believe",  "somewhat"};

bool contains_sequence(const std::vector<std::string>& tokens, const std::vector<std::string>& phrase) {
  if (phrase.empty() || phrase.size() > tokens.size()) return false;
  return std::search(tokens.begin(), tokens.end(), phrase.begin(), phrase.end()) != tokens.end();
}

}  // namespace

HedgingLexicon::HedgingLexicon(const std::vector<std::string>& phrases) {
  std::set<std::vector<std::string>> unique;
  for (const auto& phrase : phrases) {
    auto tokens = text::tokenize(phrase);
    if (!tokens.empty()) unique.insert(std::move(tokens));
  }
  if (unique.empty()) throw ConfigError("hedging lexicon is empty");
  phrases_.assign(unique.begin(), unique.end());
}

HedgingLexicon HedgingLexicon::load(std::istream& in) {
  std::vector<std::string> phrases;
  std::string line;
  while (std::getline(in, line)) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (!text::trim(line).empty()) phrases.push_back(line);
  }
  return HedgingLexicon(phrases);
}

HedgingLexicon HedgingLexicon::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open lexicon file " + path);
  return load(in);
}

HedgingLexicon HedgingLexicon::defaults() {
  return HedgingLexicon(std::vector<std::string>(std::begin(kDefaultLexicon), std::end(kDefaultLexicon)));
}

std::vector<std::string> HedgingLexicon::phrase_strings() const {
  std::vector<std::string> out;
  for (const auto& tokens : phrases_) {
    std::string joined;
    for (const auto& t : tokens) joined += (joined.empty() ? "" : " ") + t;
    out.push_back(std::move(joined));
  }
  return out;
}

HonorificMap::HonorificMap() : HonorificMap(std::map<std::string, int>{{"Ms.", 1}, {"Mr.", 0}}) {}

HonorificMap::HonorificMap(const std::map<std::string, int>& mapping) {
  std::set<int> values;
  for (const auto& [key, value] : mapping) {
    auto tokens = text::tokenize(key);
    if (tokens.size() != 1) throw ConfigError("honorific '" + key + "' must be a single token");
    if (value != 0 && value != 1) throw ConfigError("honorific levels must be 0 or 1");
    if (!map_.emplace(tokens.front(), value).second) throw ConfigError("duplicate honorific " + key);
    values.insert(value);
  }
  if (map_.size() != 2 || values.size() != 2) {
    throw ConfigError("honorific map must be a bijection onto {0, 1}");
  }
}

std::optional<int> HonorificMap::lookup(std::string_view normalized_token) const {
  auto it = map_.find(std::string(normalized_token));
  if (it == map_.end()) return std::nullopt;
  return it->second;
}

std::string advocate_surname(std::string_view speaker_id) {
  std::string id(speaker_id);
  std::replace(id.begin(), id.end(), '_', ' ');
  auto tokens = text::tokenize(id);
  return tokens.empty() ? std::string() : tokens.back();
}

std::optional<int> label_treatment(const std::vector<Utterance>& case_utterances,
                                   std::string_view advocate_id, const HonorificMap& honorifics) {
  const std::string surname = advocate_surname(advocate_id);
  if (surname.empty()) return std::nullopt;
  std::vector<const Utterance*> chief_turns;
  for (const auto& u : case_utterances) {
    if (u.speaker_role == SpeakerRole::chief_justice) chief_turns.push_back(&u);
  }
  std::sort(chief_turns.begin(), chief_turns.end(),
            [](const Utterance* a, const Utterance* b) { return a->index < b->index; });
  for (const Utterance* turn : chief_turns) {
    const auto tokens = text::tokenize(turn->text);
    for (std::size_t i = 0; i + 1 < tokens.size(); ++i) {
      if (tokens[i + 1] != surname) continue;
      if (auto level = honorifics.lookup(tokens[i])) return level;
    }
  }
  return std::nullopt;
}

int label_interruption(const AnalysisUnit& unit, bool strict_dash) {
  if (!unit.has_response()) {
    throw DataError("unit " + unit.unit_id + " has no responding turn; outcome undefined");
  }
  return text::ends_with_interruption_marker(unit.p1_utterance.text, strict_dash) ? 1 : 0;
}

int measure_hedging(std::string_view text, const HedgingLexicon& lexicon) {
  const auto tokens = text::tokenize(text);
  for (const auto& phrase : lexicon.phrases()) {
    if (contains_sequence(tokens, phrase)) return 1;
  }
  return 0;
}

int measure_disfluency(std::string_view text, bool strict_dash) {
  const auto tokens = text::tokenize(text);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (text::is_dash_token(tokens[i])) continue;
    if (i + 3 < tokens.size() && tokens[i + 1] == "-" && tokens[i + 2] == "-" &&
        tokens[i + 3] == tokens[i]) {
      return 1;
    }
    if (!strict_dash && i + 2 < tokens.size() && tokens[i + 1] == "--" && tokens[i + 2] == tokens[i]) {
      return 1;
    }
  }
  return 0;
}

BuildResult build_records(const UnitCorpus& corpus, const MeasurementSpec& spec, int n_folds,
                          std::uint64_t seed) {
  if (n_folds < 2) throw ConfigError("build_records needs at least 2 folds");
  const auto cases = group_by_case(corpus.utterances);
  std::map<std::pair<std::string, std::string>, std::optional<int>> treatment_cache;

  BuildResult result;
  std::vector<CausalRecord> records;
  std::vector<std::string> texts;
  for (const auto& unit : corpus.units) {
    if (!unit.has_response()) {
      result.exclusions.push_back({unit.unit_id, std::string(exclusion_reasons::no_response)});
      continue;
    }
    const auto& p1 = unit.p1_utterance;
    auto key = std::make_pair(p1.case_id, p1.speaker_id);
    auto cached = treatment_cache.find(key);
    if (cached == treatment_cache.end()) {
      auto it = cases.find(p1.case_id);
      auto label = it == cases.end() ? std::nullopt
                                     : label_treatment(it->second, p1.speaker_id, spec.honorifics);
      cached = treatment_cache.emplace(key, label).first;
    }
    if (!cached->second) {
      result.exclusions.push_back({unit.unit_id, std::string(exclusion_reasons::no_introduction)});
      continue;
    }
    CausalRecord r;
    r.unit_id = unit.unit_id;
    r.t = *cached->second;
    for (const auto& name : spec.confounders) {
      auto it = unit.context_features.find(name);
      r.x[name] = it == unit.context_features.end() ? std::string(context::unknown_level) : it->second;
    }
    r.m[std::string(mediator_names::hedging)] = measure_hedging(p1.text, spec.hedging_lexicon);
    r.m[std::string(mediator_names::disfluency)] = measure_disfluency(p1.text, spec.strict_dash);
    r.y = label_interruption(unit, spec.strict_dash);
    records.push_back(std::move(r));
    texts.push_back(p1.text);
  }

  std::vector<std::string> ids;
  for (const auto& r : records) ids.push_back(r.unit_id);
  const CrossFitPlan plan = make_plan(ids, n_folds, derive_seed(seed, "folds"));
  for (auto& r : records) r.fold = plan.fold_of(r.unit_id);

  RecordSchema schema;
  schema.n_folds = n_folds;
  for (const auto& name : spec.confounders) {
    std::set<std::string> levels;
    for (const auto& r : records) levels.insert(r.x.at(name));
    schema.confounders.push_back({name, {levels.begin(), levels.end()}});
  }
  schema.mediators.push_back({std::string(mediator_names::disfluency), 2, false});
  schema.mediators.push_back({std::string(mediator_names::hedging), 2, false});

  if (spec.topics.enabled) {
    const std::string topic(mediator_names::topic);
    const int k = spec.topics.model.k;
    for (auto& r : records) r.m_folds[topic].assign(n_folds, 0);
    for (int f = 0; f < n_folds; ++f) {
      std::vector<std::string> training;
      for (std::size_t i = 0; i < records.size(); ++i) {
        if (plan.train[f].contains(records[i].unit_id)) training.push_back(texts[i]);
      }
      TopicModelConfig config = spec.topics.model;
      config.seed = derive_seed(seed, "topic", static_cast<std::uint64_t>(f));
      const TopicModel model = fit_topic_model(training, config);
      for (std::size_t i = 0; i < records.size(); ++i) {
        records[i].m_folds[topic][f] = measure_topic(model, texts[i]);
      }
    }
    for (auto& r : records) r.m[topic] = r.m_folds[topic][r.fold];
    schema.mediators.push_back({topic, k + 1, true});
  }

  validate_records(records, schema);
  result.records = RecordSet{std::move(schema), std::move(records)};
  return result;
}

}  // namespace medlang
