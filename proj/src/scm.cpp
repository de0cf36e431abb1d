#include "medlang/scm.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "json.hpp"

#include "medlang/crossfit.hpp"
#include "medlang/error.hpp"
#include "medlang/glm.hpp"
#include "medlang/measure.hpp"
#include "medlang/parallel.hpp"
#include "medlang/random.hpp"

namespace medlang {
namespace {

using json = nlohmann::ordered_json;

double term_value(const LogitTerm& term, int t, int x) {
  return term.intercept + t * term.t + (term.x.empty() ? 0.0 : term.x[x]);
}

// P(M = level | parents) for every level; `shift` is added to every
// non-reference logit (U, coupling and carryover contributions).
void mediator_probs(const ScmMediator& med, int t, int x, double shift, std::vector<double>& out) {
  out.resize(med.n_levels);
  double top = 0.0;
  for (int a = 1; a < med.n_levels; ++a) top = std::max(top, term_value(med.logits[a - 1], t, x) + shift);
  double total = std::exp(-top);
  out[0] = total;
  for (int a = 1; a < med.n_levels; ++a) {
    out[a] = std::exp(term_value(med.logits[a - 1], t, x) + shift - top);
    total += out[a];
  }
  for (double& p : out) p /= total;
}

double outcome_logit(const ScmSpec& spec, const std::vector<int>& levels, int t, int x, int u) {
  double eta = term_value(spec.outcome.base, t, x);
  for (std::size_t j = 0; j < spec.mediators.size(); ++j) {
    const auto& name = spec.mediators[j].name;
    if (auto it = spec.outcome.m.find(name); it != spec.outcome.m.end()) eta += it->second[levels[j]];
    if (auto it = spec.outcome.tm.find(name); it != spec.outcome.tm.end()) eta += t * it->second[levels[j]];
  }
  if (spec.unmeasured) eta += u * spec.unmeasured->on_outcome;
  return eta;
}

double u_shift(const ScmSpec& spec, int u) {
  return spec.unmeasured ? u * spec.unmeasured->on_mediators : 0.0;
}

LogitTerm term_from_json(const json& obj) {
  LogitTerm term;
  term.intercept = obj.value("intercept", 0.0);
  term.t = obj.value("t", 0.0);
  if (obj.contains("x")) term.x = obj["x"].get<std::vector<double>>();
  return term;
}

json term_to_json(const LogitTerm& term) {
  return {{"intercept", term.intercept}, {"t", term.t}, {"x", term.x}};
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError("invalid SCM spec: " + what);
}

void check_term(const LogitTerm& term, std::size_t levels, const std::string& where) {
  require(std::isfinite(term.intercept) && std::isfinite(term.t), where + " has a non-finite coefficient");
  require(term.x.empty() || term.x.size() == levels, where + " needs one x coefficient per confounder level");
  for (double v : term.x) require(std::isfinite(v), where + " has a non-finite coefficient");
}

}  // namespace

double sigmoid(double v) {
  if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
  const double e = std::exp(v);
  return e / (1.0 + e);
}

const ScmMediator& ScmSpec::mediator(const std::string& name) const {
  for (const auto& m : mediators) {
    if (m.name == name) return m;
  }
  throw ConfigError("SCM has no mediator '" + name + "'");
}

void ScmSpec::validate() const {
  const std::size_t levels = confounder_levels.size();
  require(levels > 0, "confounder needs at least one level");
  require(std::set<std::string>(confounder_levels.begin(), confounder_levels.end()).size() == levels,
          "confounder levels repeat");
  require(confounder_probs.size() == levels, "confounder probs must match levels");
  double total = 0.0;
  for (double p : confounder_probs) {
    require(std::isfinite(p) && p >= 0.0, "confounder probability outside [0, 1]");
    total += p;
  }
  require(std::abs(total - 1.0) <= 1e-9, "confounder probabilities must sum to 1");
  check_term(treatment, levels, "treatment");
  require(!mediators.empty(), "at least one mediator is required");
  std::set<std::string> names;
  for (const auto& m : mediators) {
    require(names.insert(m.name).second, "mediator names repeat");
    require(m.n_levels >= 2, "mediator " + m.name + " needs at least two levels");
    require(static_cast<int>(m.logits.size()) == m.n_levels - 1,
            "mediator " + m.name + " needs one logit per non-reference level");
    for (const auto& term : m.logits) check_term(term, levels, "mediator " + m.name);
  }
  check_term(outcome.base, levels, "outcome");
  for (const auto* table : {&outcome.m, &outcome.tm}) {
    for (const auto& [name, coefs] : *table) {
      require(names.contains(name), "outcome references unknown mediator " + name);
      require(static_cast<int>(coefs.size()) == mediator(name).n_levels,
              "outcome coefficients for " + name + " need one entry per level");
      for (double v : coefs) require(std::isfinite(v), "outcome has a non-finite coefficient");
    }
  }
  if (unmeasured) {
    require(unmeasured->p >= 0.0 && unmeasured->p <= 1.0, "unmeasured confounder p outside [0, 1]");
    require(std::isfinite(unmeasured->on_mediators) && std::isfinite(unmeasured->on_outcome),
            "unmeasured confounder has a non-finite coefficient");
  }
  require(std::isfinite(coupling) && std::isfinite(carryover), "knob values must be finite");
  require(coupling == 0.0 || mediators.size() >= 2, "mediator coupling needs two mediators");

  // Exhaustive check of every conditional law over its finite parent grid.
  std::vector<double> probs;
  auto check_probs = [&](const std::vector<double>& p, const std::string& what) {
    double s = 0.0;
    for (double v : p) {
      require(std::isfinite(v) && v >= 0.0 && v <= 1.0, what + " yields an invalid probability");
      s += v;
    }
    require(std::abs(s - 1.0) <= 1e-9, what + " does not sum to one");
  };
  const int u_levels = unmeasured ? 2 : 1;
  int max_parent = 0;
  if (coupling != 0.0) max_parent = mediators[0].n_levels - 1;
  for (int x = 0; x < static_cast<int>(levels); ++x) {
    const double pt = sigmoid(term_value(treatment, 1, x));
    require(std::isfinite(pt), "treatment law");
    for (int t = 0; t < 2; ++t) {
      for (int u = 0; u < u_levels; ++u) {
        for (int yprev = 0; yprev < (carryover != 0.0 ? 2 : 1); ++yprev) {
          for (std::size_t j = 0; j < mediators.size(); ++j) {
            const int parents = (j == 1 && coupling != 0.0) ? max_parent + 1 : 1;
            for (int parent = 0; parent < parents; ++parent) {
              mediator_probs(mediators[j], t, x, u_shift(*this, u) + coupling * parent + carryover * yprev,
                             probs);
              check_probs(probs, "mediator " + mediators[j].name);
            }
          }
        }
        std::vector<int> combo(mediators.size(), 0);
        while (true) {
          const double py = sigmoid(outcome_logit(*this, combo, t, x, u));
          require(std::isfinite(py), "outcome law");
          std::size_t j = 0;
          while (j < combo.size() && ++combo[j] == mediators[j].n_levels) combo[j++] = 0;
          if (j == combo.size()) break;
        }
      }
    }
  }
}

ScmSpec parse_scm_spec(std::istream& in) {
  ScmSpec spec;
  try {
    const json obj = json::parse(in);
    const auto& conf = obj.at("confounder");
    spec.confounder_name = conf.value("name", "x");
    spec.confounder_levels = conf.at("levels").get<std::vector<std::string>>();
    spec.confounder_probs = conf.at("probs").get<std::vector<double>>();
    spec.treatment = term_from_json(obj.at("treatment"));
    for (const auto& m : obj.at("mediators")) {
      ScmMediator med;
      med.name = m.at("name").get<std::string>();
      med.n_levels = m.value("levels", 2);
      for (const auto& term : m.at("logits")) med.logits.push_back(term_from_json(term));
      spec.mediators.push_back(std::move(med));
    }
    const auto& out = obj.at("outcome");
    spec.outcome.base = term_from_json(out);
    if (out.contains("m")) spec.outcome.m = out["m"].get<std::map<std::string, std::vector<double>>>();
    if (out.contains("tm")) spec.outcome.tm = out["tm"].get<std::map<std::string, std::vector<double>>>();
    if (obj.contains("unmeasured") && !obj["unmeasured"].is_null()) {
      const auto& u = obj["unmeasured"];
      spec.unmeasured = UnmeasuredConfounder{u.value("p", 0.5), u.value("on_mediators", 0.0),
                                             u.value("on_outcome", 0.0)};
    }
    spec.coupling = obj.value("coupling", 0.0);
    spec.carryover = obj.value("carryover", 0.0);
    spec.seed = obj.value("seed", std::uint64_t{0});
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed SCM spec: ") + e.what());
  }
  spec.validate();
  return spec;
}

ScmSpec load_scm_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open SCM spec " + path);
  return parse_scm_spec(in);
}

void write_scm_spec(std::ostream& out, const ScmSpec& spec) {
  json obj;
  obj["confounder"] = {{"name", spec.confounder_name},
                       {"levels", spec.confounder_levels},
                       {"probs", spec.confounder_probs}};
  obj["treatment"] = term_to_json(spec.treatment);
  obj["mediators"] = json::array();
  for (const auto& m : spec.mediators) {
    json med = {{"name", m.name}, {"levels", m.n_levels}, {"logits", json::array()}};
    for (const auto& term : m.logits) med["logits"].push_back(term_to_json(term));
    obj["mediators"].push_back(med);
  }
  json outcome = term_to_json(spec.outcome.base);
  outcome["m"] = spec.outcome.m;
  outcome["tm"] = spec.outcome.tm;
  obj["outcome"] = outcome;
  if (spec.unmeasured) {
    obj["unmeasured"] = {{"p", spec.unmeasured->p},
                         {"on_mediators", spec.unmeasured->on_mediators},
                         {"on_outcome", spec.unmeasured->on_outcome}};
  }
  obj["coupling"] = spec.coupling;
  obj["carryover"] = spec.carryover;
  obj["seed"] = spec.seed;
  out << obj.dump(2) << '\n';
}

OracleResult exact_effects(const ScmSpec& spec, const std::string& mediator) {
  spec.validate();
  if (spec.coupling != 0.0 || spec.carryover != 0.0) {
    throw ConfigError("the exact oracle requires mediator coupling and temporal carryover to be zero");
  }
  std::size_t target = spec.mediators.size();
  for (std::size_t j = 0; j < spec.mediators.size(); ++j) {
    if (spec.mediators[j].name == mediator) target = j;
  }
  if (target == spec.mediators.size()) throw ConfigError("SCM has no mediator '" + mediator + "'");

  const std::size_t n_med = spec.mediators.size();
  const int u_levels = spec.unmeasured ? 2 : 1;
  OracleResult result;
  result.mediator = mediator;
  // probs[t][j] = P(M^j | T = t, x, u)
  std::array<std::vector<std::vector<double>>, 2> probs;
  for (auto& p : probs) p.resize(n_med);
  for (int x = 0; x < static_cast<int>(spec.confounder_levels.size()); ++x) {
    const double px = spec.confounder_probs[x];
    if (px == 0.0) continue;
    for (int u = 0; u < u_levels; ++u) {
      const double pu = spec.unmeasured ? (u == 1 ? spec.unmeasured->p : 1.0 - spec.unmeasured->p) : 1.0;
      if (pu == 0.0) continue;
      for (int t = 0; t < 2; ++t) {
        for (std::size_t j = 0; j < n_med; ++j) mediator_probs(spec.mediators[j], t, x, u_shift(spec, u), probs[t][j]);
      }
      for (int t = 0; t < 2; ++t) {
        for (int tp = 0; tp < 2; ++tp) {
          double value = 0.0;
          std::vector<int> combo(n_med, 0);
          while (true) {
            double weight = 1.0;
            for (std::size_t j = 0; j < n_med; ++j) weight *= probs[j == target ? tp : t][j][combo[j]];
            value += weight * sigmoid(outcome_logit(spec, combo, t, x, u));
            std::size_t j = 0;
            while (j < n_med && ++combo[j] == spec.mediators[j].n_levels) combo[j++] = 0;
            if (j == n_med) break;
          }
          result.e[t][tp] += px * pu * value;
        }
      }
    }
  }
  result.nde_true = result.e[1][0] - result.e[0][0];
  result.nie_true = result.e[0][1] - result.e[0][0];
  result.nie_reversed_true = result.e[1][1] - result.e[1][0];
  result.te_true = result.e[1][1] - result.e[0][0];
  return result;
}

std::vector<OracleResult> exact_effects(const ScmSpec& spec) {
  std::vector<OracleResult> out;
  for (const auto& m : spec.mediators) out.push_back(exact_effects(spec, m.name));
  return out;
}

std::string synthetic_case_id(std::size_t i) {
  std::ostringstream id;
  id << "syn" << std::setw(7) << std::setfill('0') << i;
  return id.str();
}

RecordSet generate(const ScmSpec& spec, std::size_t n, std::uint64_t seed, int n_folds) {
  spec.validate();
  RecordSet set;
  set.schema.n_folds = n_folds;
  set.schema.confounders.push_back({spec.confounder_name, spec.confounder_levels});
  for (const auto& m : spec.mediators) set.schema.mediators.push_back({m.name, m.n_levels, false});
  std::sort(set.schema.mediators.begin(), set.schema.mediators.end(),
            [](const MediatorDomain& a, const MediatorDomain& b) { return a.name < b.name; });
  if (n == 0) return set;

  Rng rng(derive_seed(seed, "scm"));
  std::vector<double> probs;
  std::vector<int> levels(spec.mediators.size());
  int previous_y = 0;
  set.records.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    CausalRecord r;
    r.unit_id = synthetic_case_id(i) + ":1";
    const int x = rng.categorical(spec.confounder_probs);
    r.t = rng.bernoulli(sigmoid(term_value(spec.treatment, 1, x))) ? 1 : 0;
    const int u = spec.unmeasured && rng.bernoulli(spec.unmeasured->p) ? 1 : 0;
    for (std::size_t j = 0; j < spec.mediators.size(); ++j) {
      double shift = u_shift(spec, u) + spec.carryover * previous_y;
      if (j == 1) shift += spec.coupling * levels[0];
      mediator_probs(spec.mediators[j], r.t, x, shift, probs);
      levels[j] = rng.categorical(probs);
      r.m[spec.mediators[j].name] = levels[j];
    }
    r.y = rng.bernoulli(sigmoid(outcome_logit(spec, levels, r.t, x, u))) ? 1 : 0;
    previous_y = r.y;
    r.x[spec.confounder_name] = spec.confounder_levels[x];
    set.records.push_back(std::move(r));
  }

  std::vector<std::string> ids;
  ids.reserve(n);
  for (const auto& r : set.records) ids.push_back(r.unit_id);
  const CrossFitPlan plan = make_plan(ids, n_folds, derive_seed(seed, "folds"));
  for (auto& r : set.records) r.fold = plan.fold_of(r.unit_id);
  return set;
}

RenderedTranscript render_transcript(const RecordSet& data, const ScmSpec& spec) {
  const std::string hedging(mediator_names::hedging);
  const std::string disfluency(mediator_names::disfluency);
  for (const auto& m : spec.mediators) {
    if ((m.name != hedging && m.name != disfluency) || m.n_levels != 2) {
      throw ConfigError("only binary hedging and disfluency mediators can be rendered, not " + m.name);
    }
  }
  static constexpr std::array<std::string_view, 6> kSentences = {
      "the statute requires notice before the agency acts",
      "the record shows the claim was filed on time",
      "our position is that the lower court applied the wrong standard",
      "the treaty leaves that question to the courts of each country",
      "congress drafted the provision with that exact case in mind",
      "the plan administrator followed the documents on file"};
  static constexpr std::array<std::string_view, 8> kSurnames = {
      "Adams", "Baker", "Carter", "Diaz", "Evans", "Foster", "Garcia", "Hughes"};

  RenderedTranscript out;
  for (std::size_t i = 0; i < data.records.size(); ++i) {
    const auto& r = data.records[i];
    const std::string case_id = r.unit_id.substr(0, r.unit_id.find(':'));
    const std::string surname(kSurnames[i % kSurnames.size()]);

    auto level = [&](const std::string& name) {
      auto it = r.m.find(name);
      return it == r.m.end() ? 0 : it->second;
    };
    std::string sentence(kSentences[i % kSentences.size()]);
    std::string advocate;
    if (level(hedging) == 1) {
      advocate = "I think " + sentence;
    } else {
      sentence[0] = static_cast<char>(sentence[0] - 'a' + 'A');
      advocate = sentence;
    }
    advocate += level(disfluency) == 1 ? ", and - - and the text controls" : ", and the text controls";
    advocate += r.y == 1 ? ". But if I - -" : ".";

    out.utterances.push_back({case_id, 0, "John Roberts", SpeakerRole::chief_justice,
                              "We will hear argument next in case " + case_id + ". " +
                                  (r.t == 1 ? "Ms. " : "Mr. ") + surname + "."});
    out.utterances.push_back({case_id, 1, "Jordan " + surname, SpeakerRole::advocate, advocate});
    out.utterances.push_back(
        {case_id, 2, "Justice Kagan", SpeakerRole::justice, "What does the record say about that?"});
    out.metadata[case_id] = {{spec.confounder_name, r.x.at(spec.confounder_name)}};
  }
  return out;
}

ViolationKnob parse_knob(const std::string& name) {
  if (name == "unmeasured_confounder") return ViolationKnob::unmeasured_confounder;
  if (name == "mediator_coupling") return ViolationKnob::mediator_coupling;
  if (name == "temporal_carryover") return ViolationKnob::temporal_carryover;
  throw ConfigError("unknown knob '" + name + "'");
}

std::string to_string(ViolationKnob knob) {
  switch (knob) {
    case ViolationKnob::unmeasured_confounder: return "unmeasured_confounder";
    case ViolationKnob::mediator_coupling: return "mediator_coupling";
    case ViolationKnob::temporal_carryover: return "temporal_carryover";
  }
  return "";
}

ScmSpec with_knob(const ScmSpec& spec, ViolationKnob knob, double magnitude) {
  ScmSpec out = spec;
  switch (knob) {
    case ViolationKnob::unmeasured_confounder: {
      const double p = spec.unmeasured ? spec.unmeasured->p : 0.5;
      out.unmeasured = UnmeasuredConfounder{p, magnitude, magnitude};
      break;
    }
    case ViolationKnob::mediator_coupling:
      out.coupling = magnitude;
      break;
    case ViolationKnob::temporal_carryover:
      out.carryover = magnitude;
      break;
  }
  out.validate();
  return out;
}

std::vector<StudyRow> violation_study(const ScmSpec& base, ViolationKnob knob, const std::vector<double>& grid,
                                      std::size_t n, std::uint64_t seed, const StudyOptions& options) {
  const auto oracle = exact_effects(with_knob(base, knob, 0.0));
  std::vector<std::vector<StudyRow>> per_point(grid.size());
  EstimationConfig estimation = options.estimation;
  estimation.threads = 1;
  parallel_for(grid.size(), options.estimation.threads, [&](std::size_t g) {
    const ScmSpec spec = with_knob(base, knob, grid[g]);
    const RecordSet data = generate(spec, n, seed, options.n_folds);
    for (std::size_t j = 0; j < base.mediators.size(); ++j) {
      const EffectPoint est = point_effects(data, base.mediators[j].name, estimation);
      StudyRow row;
      row.magnitude = grid[g];
      row.mediator = base.mediators[j].name;
      row.nde = est.nde;
      row.nie = est.nie;
      row.nde_oracle = oracle[j].nde_true;
      row.nie_oracle = oracle[j].nie_true;
      row.nde_bias = est.nde - row.nde_oracle;
      row.nie_bias = est.nie - row.nie_oracle;
      per_point[g].push_back(row);
    }
  });
  std::vector<StudyRow> rows;
  for (auto& point : per_point) rows.insert(rows.end(), point.begin(), point.end());
  return rows;
}

void write_study_csv(std::ostream& out, const std::vector<StudyRow>& rows) {
  out << "magnitude,mediator,nde,nie,nde_oracle,nie_oracle,nde_bias,nie_bias\r\n";
  for (const auto& r : rows) {
    out << format_double(r.magnitude) << ',' << csv_field(r.mediator) << ',' << format_double(r.nde) << ','
        << format_double(r.nie) << ',' << format_double(r.nde_oracle) << ',' << format_double(r.nie_oracle)
        << ',' << format_double(r.nde_bias) << ',' << format_double(r.nie_bias) << "\r\n";
  }
}

}  // namespace medlang
