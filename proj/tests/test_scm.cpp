#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <sstream>

#include "mc_oracle.hpp"
#include "medlang/corpus.hpp"
#include "medlang/error.hpp"
#include "medlang/measure.hpp"
#include "medlang/scm.hpp"
#include "test_data.hpp"

using namespace medlang;

namespace {

const char* kFixtures[] = {"binary", "two_mediators", "unmeasured", "three_level", "null", "study"};

ScmSpec fixture(const std::string& name) {
  return load_scm_spec(testing::source_path("fixtures/scm/" + name + ".json"));
}

ScmSpec parse(const std::string& text) {
  std::istringstream in(text);
  return parse_scm_spec(in);
}

const std::string kMinimal = R"({
  "confounder": {"levels": ["a", "b"], "probs": [0.5, 0.5]},
  "treatment": {"intercept": 0.0},
  "mediators": [{"name": "hedging", "levels": 2, "logits": [{"intercept": 0.0, "t": 1.0}]}],
  "outcome": {"intercept": 0.0, "t": 1.0, "m": {"hedging": [0.0, 1.0]}}
})";

}  // namespace

TEST_CASE("spec validation") {
  CHECK_NOTHROW(parse(kMinimal).validate());
  SUBCASE("probabilities must sum to one") {
    auto s = parse(kMinimal);
    s.confounder_probs = {0.5, 0.6};
    CHECK_THROWS_AS(s.validate(), ConfigError);
  }
  SUBCASE("x coefficients must match the levels") {
    auto s = parse(kMinimal);
    s.treatment.x = {0.1, 0.2, 0.3};
    CHECK_THROWS_AS(s.validate(), ConfigError);
  }
  SUBCASE("non-finite coefficient") {
    auto s = parse(kMinimal);
    s.outcome.base.t = std::nan("");
    CHECK_THROWS_AS(s.validate(), ConfigError);
  }
  SUBCASE("coupling needs two mediators") {
    auto s = parse(kMinimal);
    s.coupling = 0.5;
    CHECK_THROWS_AS(s.validate(), ConfigError);
  }
  SUBCASE("outcome references a known mediator") {
    auto s = parse(kMinimal);
    s.outcome.m["topic"] = {0.0, 1.0};
    CHECK_THROWS_AS(s.validate(), ConfigError);
  }
  CHECK_THROWS_AS(parse("{}"), ConfigError);
  CHECK_THROWS_AS(load_scm_spec("/nonexistent.json"), ConfigError);
}

TEST_CASE("spec file round trip") {
  for (const char* name : kFixtures) {
    const auto s = fixture(name);
    std::ostringstream out;
    write_scm_spec(out, s);
    const auto back = parse(out.str());
    std::ostringstream again;
    write_scm_spec(again, back);
    CHECK(again.str() == out.str());
  }
}

TEST_CASE("generate") {
  const auto s = fixture("binary");
  CHECK(generate(s, 0, 1).records.empty());
  std::ostringstream a, b;
  write_records(a, generate(s, 500, 9));
  write_records(b, generate(s, 500, 9));
  CHECK(a.str() == b.str());
  std::ostringstream c;
  write_records(c, generate(s, 500, 10));
  CHECK(c.str() != a.str());
}

TEST_CASE("constant outcome probability is reproduced") {
  auto s = parse(kMinimal);
  s.outcome = {};
  s.outcome.base.intercept = std::log(0.3 / 0.7);
  const auto data = generate(s, 100000, 4);
  double mean = 0.0;
  for (const auto& r : data.records) mean += r.y;
  mean /= data.records.size();
  CHECK(std::abs(mean - 0.3) <= 0.005);
}

TEST_CASE("rendered transcripts measure back to the sampled records") {
  for (const char* name : {"two_mediators", "binary"}) {
    const auto spec = fixture(name);
    const auto data = generate(spec, 300, 12);
    const auto rendered = render_transcript(data, spec);
    std::ostringstream text;
    write_transcript(text, rendered.utterances);
    UnitCorpus corpus;
    corpus.utterances = parse_transcript_string(text.str());
    corpus.units = extract_units(corpus.utterances, rendered.metadata);
    MeasurementSpec m;
    m.topics.enabled = false;
    m.confounders = {spec.confounder_name};
    const auto built = build_records(corpus, m, 2, 12);
    CHECK(built.exclusions.empty());
    REQUIRE(built.records.records.size() == data.records.size());
    for (std::size_t i = 0; i < data.records.size(); ++i) {
      const auto& want = data.records[i];
      const auto& got = built.records.records[i];
      CHECK(got.unit_id == want.unit_id);
      CHECK(got.t == want.t);
      CHECK(got.y == want.y);
      CHECK(got.x == want.x);
      CHECK(got.fold == want.fold);
      for (const auto& [mediator, level] : want.m) CHECK(got.m.at(mediator) == level);
    }
  }
}

TEST_CASE("rendering refuses mediators it cannot express") {
  const auto spec = fixture("three_level");
  CHECK_THROWS_AS(render_transcript(generate(spec, 10, 1), spec), ConfigError);
}

TEST_CASE("oracle special cases") {
  SUBCASE("outcome independent of treatment") {
    auto s = parse(kMinimal);
    s.outcome.base.t = 0.0;
    const auto r = exact_effects(s, "hedging");
    CHECK(r.nde_true == 0.0);
    CHECK(r.nie_true != 0.0);
  }
  SUBCASE("mediator independent of treatment") {
    auto s = parse(kMinimal);
    s.mediators[0].logits[0].t = 0.0;
    const auto r = exact_effects(s, "hedging");
    CHECK(r.nie_true == 0.0);
    CHECK(r.nde_true != 0.0);
  }
  SUBCASE("null spec") {
    const auto r = exact_effects(fixture("null"), "hedging");
    CHECK(r.nde_true == 0.0);
    CHECK(r.nie_true == 0.0);
    CHECK(r.te_true == 0.0);
  }
  SUBCASE("knobs are refused") {
    CHECK_THROWS_AS(exact_effects(with_knob(fixture("study"), ViolationKnob::mediator_coupling, 0.5)), ConfigError);
    CHECK_THROWS_AS(exact_effects(with_knob(fixture("study"), ViolationKnob::temporal_carryover, 0.5)),
                    ConfigError);
  }
}

TEST_CASE("oracle decomposition identity") {
  for (const char* name : kFixtures) {
    for (const auto& r : exact_effects(fixture(name))) {
      CHECK(std::abs(r.te_true - r.nde_true - r.nie_reversed_true) <= 1e-12);
      CHECK(std::abs(r.nde_true - (r.e[1][0] - r.e[0][0])) <= 1e-15);
      CHECK(std::abs(r.nie_true - (r.e[0][1] - r.e[0][0])) <= 1e-15);
    }
  }
}

TEST_CASE("property: oracle and counterfactual Monte Carlo agree within 3 standard errors") {
  for (const char* name : kFixtures) {
    const auto spec = fixture(name);
    const auto exact = exact_effects(spec);
    const auto mc = testing::monte_carlo_effects(spec, 10'000'000, 20260101);
    for (std::size_t j = 0; j < exact.size(); ++j) {
      INFO(name << " / " << exact[j].mediator);
      auto within = [](double truth, const testing::McEstimate& est) {
        return std::abs(truth - est.mean) <= 3.0 * est.se + 1e-12;
      };
      CHECK(within(exact[j].nde_true, mc[j].nde));
      CHECK(within(exact[j].nie_true, mc[j].nie));
      CHECK(within(exact[j].te_true, mc[j].te));
      CHECK(within(exact[j].nie_reversed_true, mc[j].nie_reversed));
    }
  }
}

TEST_CASE("knobs") {
  const auto s = fixture("study");
  CHECK(parse_knob("mediator_coupling") == ViolationKnob::mediator_coupling);
  CHECK(to_string(ViolationKnob::temporal_carryover) == "temporal_carryover");
  CHECK_THROWS_AS(parse_knob("indexical_inversion"), ConfigError);
  CHECK(with_knob(s, ViolationKnob::mediator_coupling, 1.5).coupling == 1.5);
  CHECK(with_knob(s, ViolationKnob::temporal_carryover, 0.7).carryover == 0.7);
  const auto u = with_knob(s, ViolationKnob::unmeasured_confounder, 2.0);
  REQUIRE(u.unmeasured.has_value());
  CHECK(u.unmeasured->on_outcome == 2.0);
}

TEST_CASE("violation study rows") {
  const auto s = fixture("study");
  const auto rows = violation_study(s, ViolationKnob::mediator_coupling, {0.0, 2.0}, 4000, 5);
  REQUIRE(rows.size() == 4);
  const auto oracle = exact_effects(s);
  for (const auto& r : rows) {
    const auto& o = r.mediator == "disfluency" ? oracle[0] : oracle[1];
    CHECK(r.nde_oracle == o.nde_true);
    CHECK(r.nde_bias == r.nde - r.nde_oracle);
    CHECK(r.nie_bias == r.nie - r.nie_oracle);
  }
  StudyOptions threaded;
  threaded.estimation.threads = 3;
  const auto again = violation_study(s, ViolationKnob::mediator_coupling, {0.0, 2.0}, 4000, 5, threaded);
  for (std::size_t i = 0; i < rows.size(); ++i) CHECK(again[i].nde == rows[i].nde);
  std::ostringstream csv;
  write_study_csv(csv, rows);
  CHECK(csv.str().rfind("magnitude,mediator,nde,nie,nde_oracle,nie_oracle,nde_bias,nie_bias\r\n", 0) == 0);
}
