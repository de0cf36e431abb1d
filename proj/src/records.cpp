#include "medlang/records.hpp"

#include <algorithm>
#include <set>

#include "json.hpp"

#include "medlang/error.hpp"
#include "medlang/text.hpp"

namespace medlang {
namespace {

using json = nlohmann::ordered_json;

json schema_to_json(const RecordSchema& schema) {
  json obj;
  obj["type"] = "schema";
  obj["n_folds"] = schema.n_folds;
  obj["confounders"] = json::array();
  for (const auto& c : schema.confounders) {
    obj["confounders"].push_back({{"name", c.name}, {"levels", c.levels}});
  }
  obj["mediators"] = json::array();
  for (const auto& m : schema.mediators) {
    obj["mediators"].push_back(
        {{"name", m.name}, {"levels", m.n_levels}, {"fold_specific", m.fold_specific}});
  }
  return obj;
}

RecordSchema schema_from_json(const json& obj) {
  RecordSchema schema;
  schema.n_folds = obj.at("n_folds").get<int>();
  for (const auto& c : obj.at("confounders")) {
    schema.confounders.push_back(
        {c.at("name").get<std::string>(), c.at("levels").get<std::vector<std::string>>()});
  }
  for (const auto& m : obj.at("mediators")) {
    schema.mediators.push_back({m.at("name").get<std::string>(), m.at("levels").get<int>(),
                                m.value("fold_specific", false)});
  }
  return schema;
}

json record_to_json(const CausalRecord& r) {
  json obj;
  obj["type"] = "record";
  obj["unit_id"] = r.unit_id;
  obj["t"] = r.t;
  obj["x"] = r.x;
  obj["m"] = r.m;
  if (!r.m_folds.empty()) obj["m_folds"] = r.m_folds;
  obj["y"] = r.y;
  obj["fold"] = r.fold;
  if (r.valence) obj["valence"] = *r.valence;
  return obj;
}

CausalRecord record_from_json(const json& obj) {
  CausalRecord r;
  r.unit_id = obj.at("unit_id").get<std::string>();
  r.t = obj.at("t").get<int>();
  r.x = obj.at("x").get<std::map<std::string, std::string>>();
  r.m = obj.at("m").get<std::map<std::string, int>>();
  if (obj.contains("m_folds")) r.m_folds = obj["m_folds"].get<std::map<std::string, std::vector<int>>>();
  r.y = obj.at("y").get<int>();
  r.fold = obj.at("fold").get<int>();
  if (obj.contains("valence") && !obj["valence"].is_null()) r.valence = obj["valence"].get<int>();
  return r;
}

}  // namespace

int RecordSchema::n_cells() const {
  int cells = 1;
  for (const auto& c : confounders) cells *= static_cast<int>(c.levels.size());
  return cells;
}

int RecordSchema::cell_index(const std::map<std::string, std::string>& x) const {
  int cell = 0;
  for (const auto& c : confounders) {
    auto it = x.find(c.name);
    if (it == x.end()) throw DataError("record lacks confounder '" + c.name + "'");
    auto level = std::find(c.levels.begin(), c.levels.end(), it->second);
    if (level == c.levels.end()) {
      throw DataError("confounder '" + c.name + "' level '" + it->second + "' is not declared");
    }
    cell = cell * static_cast<int>(c.levels.size()) + static_cast<int>(level - c.levels.begin());
  }
  return cell;
}

std::vector<std::string> RecordSchema::cell_levels(int cell) const {
  std::vector<std::string> levels(confounders.size());
  for (std::size_t j = confounders.size(); j > 0; --j) {
    const auto& c = confounders[j - 1];
    const int n = static_cast<int>(c.levels.size());
    levels[j - 1] = c.levels[cell % n];
    cell /= n;
  }
  return levels;
}

const MediatorDomain& RecordSchema::mediator(const std::string& name) const {
  for (const auto& m : mediators) {
    if (m.name == name) return m;
  }
  throw ConfigError("unknown mediator '" + name + "'");
}

bool RecordSchema::has_mediator(const std::string& name) const {
  return std::any_of(mediators.begin(), mediators.end(),
                     [&](const MediatorDomain& m) { return m.name == name; });
}

int CausalRecord::training_level(const MediatorDomain& mediator, int training_fold) const {
  if (mediator.fold_specific) {
    auto it = m_folds.find(mediator.name);
    if (it == m_folds.end() || training_fold < 0 ||
        training_fold >= static_cast<int>(it->second.size())) {
      throw DataError("record " + unit_id + " lacks fold level for mediator " + mediator.name);
    }
    return it->second[training_fold];
  }
  auto it = m.find(mediator.name);
  if (it == m.end()) throw DataError("record " + unit_id + " lacks mediator " + mediator.name);
  return it->second;
}

void validate_records(const std::vector<CausalRecord>& records, const RecordSchema& schema) {
  if (schema.n_folds < 1) throw DataError("schema declares no folds");
  for (const auto& c : schema.confounders) {
    if (c.levels.empty()) throw DataError("confounder '" + c.name + "' has no levels");
    std::set<std::string> unique(c.levels.begin(), c.levels.end());
    if (unique.size() != c.levels.size()) throw DataError("confounder '" + c.name + "' repeats a level");
  }
  for (const auto& m : schema.mediators) {
    if (m.n_levels < 1) throw DataError("mediator '" + m.name + "' has an empty domain");
  }
  std::set<std::string> ids;
  for (const auto& r : records) {
    auto fail = [&](const std::string& what) { throw DataError("record " + r.unit_id + ": " + what); };
    if (!ids.insert(r.unit_id).second) fail("duplicate unit_id");
    if (r.t != 0 && r.t != 1) fail("t outside {0,1}");
    if (r.y != 0 && r.y != 1) fail("y outside {0,1}");
    if (r.fold < 0 || r.fold >= schema.n_folds) fail("fold id out of range");
    if (r.x.size() != schema.confounders.size()) fail("confounder set does not match schema");
    schema.cell_index(r.x);
    if (r.m.size() != schema.mediators.size()) fail("mediator set does not match schema");
    for (const auto& med : schema.mediators) {
      auto it = r.m.find(med.name);
      if (it == r.m.end()) fail("missing mediator " + med.name);
      if (it->second < 0 || it->second >= med.n_levels) fail("mediator " + med.name + " level out of domain");
      if (med.fold_specific) {
        auto f = r.m_folds.find(med.name);
        if (f == r.m_folds.end() || static_cast<int>(f->second.size()) != schema.n_folds) {
          fail("fold-specific mediator " + med.name + " needs one level per fold");
        }
        for (int level : f->second) {
          if (level < 0 || level >= med.n_levels) fail("mediator " + med.name + " fold level out of domain");
        }
        if (f->second[r.fold] != it->second) fail("mediator " + med.name + " disagrees with its own-fold level");
      }
    }
    for (const auto& [name, levels] : r.m_folds) {
      if (!schema.has_mediator(name) || !schema.mediator(name).fold_specific) {
        fail("unexpected fold levels for " + name);
      }
    }
    if (r.valence) fail("valence is reserved and must be absent");
  }
}

void write_records(std::ostream& out, const RecordSet& set) {
  out << schema_to_json(set.schema).dump() << '\n';
  for (const auto& r : set.records) out << record_to_json(r).dump() << '\n';
}

RecordSet read_records(std::istream& in) {
  RecordSet set;
  std::string line;
  std::size_t line_no = 0;
  bool have_schema = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    try {
      const json obj = json::parse(line);
      const std::string type = obj.value("type", "");
      if (type == "schema") {
        if (have_schema) throw ParseError(line_no, "second schema header");
        set.schema = schema_from_json(obj);
        have_schema = true;
      } else if (type == "record") {
        if (!have_schema) throw ParseError(line_no, "record before schema header");
        set.records.push_back(record_from_json(obj));
      } else {
        throw ParseError(line_no, "unknown record type");
      }
    } catch (const json::exception& e) {
      throw ParseError(line_no, std::string("malformed record: ") + e.what());
    }
  }
  if (!have_schema) throw DataError("records file has no schema header");
  validate_records(set.records, set.schema);
  return set;
}

}  // namespace medlang
