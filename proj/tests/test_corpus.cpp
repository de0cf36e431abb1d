#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sstream>

#include "json.hpp"
#include "medlang/corpus.hpp"
#include "medlang/error.hpp"
#include "medlang/random.hpp"
#include "test_data.hpp"

using namespace medlang;

namespace {

std::string line(const std::string& case_id, int index, const std::string& speaker, const std::string& role,
                 const std::string& text) {
  return nlohmann::json{{"case_id", case_id}, {"index", index}, {"speaker_id", speaker}, {"speaker_role", role},
                        {"text", text}}
             .dump() +
         "\n";
}

Utterance utt(const std::string& case_id, std::size_t index, SpeakerRole role, const std::string& text = "words") {
  return {case_id, index, "speaker" + std::to_string(index), role, text};
}

// Independent reader used as the reference for file-order parsing.
std::vector<Utterance> reference_read(const std::string& data) {
  std::vector<Utterance> out;
  std::istringstream in(data);
  std::string l;
  while (std::getline(in, l)) {
    if (l.empty()) continue;
    auto j = nlohmann::json::parse(l);
    Utterance u;
    u.case_id = j["case_id"];
    u.index = j["index"];
    u.speaker_id = j["speaker_id"];
    const std::string role = j["speaker_role"];
    u.speaker_role = role == "advocate" ? SpeakerRole::advocate
                     : role == "justice" ? SpeakerRole::justice
                                         : SpeakerRole::chief_justice;
    u.text = j["text"];
    out.push_back(u);
  }
  return out;
}

}  // namespace

TEST_CASE("Scalia's turn parses as a justice utterance") {
  const auto u = parse_transcript_string(
      line("2008-07-636", 0, "Antonin Scalia", "justice",
           "Well, if it's an alienation, but his point is that a waiver is not an alienation."));
  REQUIRE(u.size() == 1);
  CHECK(u[0].speaker_role == SpeakerRole::justice);
  CHECK(u[0].speaker_id == "Antonin Scalia");
  CHECK(u[0].index == 0);
}

TEST_CASE("empty input gives no utterances") {
  CHECK(parse_transcript_string("").empty());
  CHECK(parse_transcript_string("\n\n").empty());
}

TEST_CASE("interleaved cases keep file order and per-case indices") {
  const std::string data = line("a", 0, "x", "justice", "one") + line("b", 0, "y", "advocate", "two") +
                           line("a", 1, "z", "advocate", "three") + line("b", 1, "w", "chief_justice", "four") +
                           line("a", 2, "x", "justice", "five");
  CHECK(parse_transcript_string(data) == reference_read(data));
}

TEST_CASE("parse errors carry line numbers and causes") {
  const std::string good = line("a", 0, "x", "justice", "one");
  SUBCASE("malformed line") {
    try {
      parse_transcript_string(good + "{not json\n");
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.line() == 2);
    }
  }
  SUBCASE("unknown role is named") {
    try {
      parse_transcript_string(good + line("a", 1, "x", "clerk", "two"));
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.line() == 2);
      CHECK(std::string(e.what()).find("clerk") != std::string::npos);
    }
  }
  SUBCASE("duplicate index") { CHECK_THROWS_AS(parse_transcript_string(good + good), DataError); }
  SUBCASE("gap in indices") {
    CHECK_THROWS_AS(parse_transcript_string(good + line("a", 2, "x", "justice", "two")), DataError);
  }
  SUBCASE("extra field") {
    CHECK_THROWS_AS(parse_transcript_string(R"({"case_id":"a","index":0,"speaker_id":"x","speaker_role":"justice","text":"t","extra":1})"
                                            "\n"),
                    ParseError);
  }
  SUBCASE("blank text") { CHECK_THROWS_AS(parse_transcript_string(line("a", 0, "x", "justice", "   ")), ParseError); }
}

TEST_CASE("round trip through write_transcript") {
  const auto original = parse_transcript_string(testing::read_file(testing::source_path("fixtures/table1_full.jsonl")));
  std::ostringstream out;
  write_transcript(out, original);
  CHECK(parse_transcript_string(out.str()) == original);
}

TEST_CASE("minimal pair gives one unit with a response") {
  const auto units = extract_units({utt("c", 0, SpeakerRole::advocate), utt("c", 1, SpeakerRole::justice)});
  REQUIRE(units.size() == 1);
  CHECK(units[0].has_response());
  CHECK(units[0].p2_utterance->index == 1);
  CHECK(units[0].unit_id == "c:0");
}

TEST_CASE("justice, advocate, advocate, justice gives two units") {
  const auto units = extract_units({utt("c", 0, SpeakerRole::justice), utt("c", 1, SpeakerRole::advocate),
                                    utt("c", 2, SpeakerRole::advocate), utt("c", 3, SpeakerRole::justice)});
  REQUIRE(units.size() == 2);
  CHECK_FALSE(units[0].has_response());
  CHECK(units[1].has_response());
  CHECK(units[1].p2_utterance->index == 3);
}

TEST_CASE("responses do not cross case boundaries") {
  const auto units = extract_units({utt("a", 0, SpeakerRole::advocate), utt("b", 0, SpeakerRole::justice)});
  REQUIRE(units.size() == 1);
  CHECK_FALSE(units[0].has_response());
}

TEST_CASE("Table 1(B): Adams's long turn is answered by Scalia") {
  const auto u = parse_transcript_string(testing::read_file(testing::source_path("fixtures/table1_excerpts.jsonl")));
  const auto units = extract_units(u);
  REQUIRE(units.size() == 2);
  const auto& adams = units[1];
  CHECK(adams.p1_utterance.speaker_id == "Ann O'Connell Adams");
  REQUIRE(adams.has_response());
  CHECK(adams.p2_utterance->text.rfind("Have they exercised it?", 0) == 0);
  CHECK(adams.context_features.at("responder_role") == "justice");
}

TEST_CASE("context features") {
  std::vector<Utterance> u;
  const char* texts[] = {"first - -", "second - -", "third--", "fourth"};
  for (std::size_t i = 0; i < 4; ++i) {
    u.push_back({"c", 2 * i, "adv", SpeakerRole::advocate, texts[i]});
    u.push_back({"c", 2 * i + 1, "j", i == 3 ? SpeakerRole::chief_justice : SpeakerRole::justice, "reply"});
  }
  CaseMetadata meta{{"c", {{"issue_area", "civil rights"}}}};
  SUBCASE("lenient dash") {
    const auto units = extract_units(u, meta);
    REQUIRE(units.size() == 4);
    CHECK(units[0].context_features.at("prior_interruptions") == "0");
    CHECK(units[1].context_features.at("prior_interruptions") == "1");
    CHECK(units[2].context_features.at("prior_interruptions") == "2+");
    CHECK(units[3].context_features.at("prior_interruptions") == "2+");
    CHECK(units[0].context_features.at("issue_area") == "civil rights");
    CHECK(units[3].context_features.at("responder_role") == "chief_justice");
  }
  SUBCASE("strict dash ignores --") {
    ExtractOptions options;
    options.strict_dash = true;
    const auto units = extract_units(u, meta, options);
    CHECK(units[3].context_features.at("prior_interruptions") == "2+");
    CHECK(units[2].context_features.at("prior_interruptions") == "2+");
  }
  SUBCASE("missing metadata") {
    const auto units = extract_units(u);
    CHECK(units[0].context_features.at("issue_area") == "unknown");
  }
}

TEST_CASE("bucket_prior_interruptions") {
  CHECK(bucket_prior_interruptions(0) == "0");
  CHECK(bucket_prior_interruptions(1) == "1");
  CHECK(bucket_prior_interruptions(2) == "2+");
  CHECK(bucket_prior_interruptions(17) == "2+");
}

TEST_CASE("property: one unit per advocate utterance, in order") {
  Rng rng(2024);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Utterance> u;
    const int cases = 1 + static_cast<int>(rng.index(4));
    std::size_t advocates = 0;
    for (int c = 0; c < cases; ++c) {
      const int n = static_cast<int>(rng.index(8));
      for (int i = 0; i < n; ++i) {
        const auto role = static_cast<SpeakerRole>(rng.index(3));
        if (role == SpeakerRole::advocate) ++advocates;
        u.push_back(utt("case" + std::to_string(c), i, role));
      }
    }
    const auto units = extract_units(u);
    REQUIRE(units.size() == advocates);
    std::size_t k = 0;
    for (const auto& x : u) {
      if (x.speaker_role != SpeakerRole::advocate) continue;
      CHECK(units[k].p1_utterance == x);
      if (units[k].has_response()) {
        CHECK(units[k].p2_utterance->index == x.index + 1);
        CHECK(is_responder(units[k].p2_utterance->speaker_role));
      }
      ++k;
    }
    CHECK(extract_units(u).size() == units.size());
  }
}

TEST_CASE("units file round trip") {
  UnitCorpus corpus;
  corpus.utterances = parse_transcript_string(testing::read_file(testing::source_path("fixtures/table1_full.jsonl")));
  CaseMetadata meta{{"2008-07-636", {{"issue_area", "economic activity"}}}};
  corpus.units = extract_units(corpus.utterances, meta);
  std::ostringstream out;
  write_units(out, corpus);
  std::istringstream in(out.str());
  const UnitCorpus back = read_units(in);
  CHECK(back.utterances == corpus.utterances);
  REQUIRE(back.units.size() == corpus.units.size());
  for (std::size_t i = 0; i < back.units.size(); ++i) {
    CHECK(back.units[i].unit_id == corpus.units[i].unit_id);
    CHECK(back.units[i].p1_utterance == corpus.units[i].p1_utterance);
    CHECK(back.units[i].p2_utterance == corpus.units[i].p2_utterance);
    CHECK(back.units[i].context_features == corpus.units[i].context_features);
  }
  std::ostringstream again;
  write_units(again, back);
  CHECK(again.str() == out.str());
}
