#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numeric>

#include "medlang/error.hpp"
#include "medlang/topic_model.hpp"
#include "test_data.hpp"

using namespace medlang;

namespace {

TopicModelConfig small_config(std::uint64_t seed) {
  TopicModelConfig c;
  c.k = 2;
  c.sweeps = 200;
  c.burn_in = 100;
  c.seed = seed;
  return c;
}

}  // namespace

TEST_CASE("planted topics are recovered up to permutation") {
  const auto planted = testing::planted_corpus(400, 40, 17);
  const auto model = fit_topic_model(planted.documents, small_config(3));
  REQUIRE(model.vocabulary == planted.vocabulary);
  auto row = [&](int k) {
    auto r = model.topic_row(k);
    return std::vector<double>(r.begin(), r.end());
  };
  const double same = std::min(testing::cosine(row(0), planted.topics[0]), testing::cosine(row(1), planted.topics[1]));
  const double swapped =
      std::min(testing::cosine(row(0), planted.topics[1]), testing::cosine(row(1), planted.topics[0]));
  CHECK(std::max(same, swapped) >= 0.95);

  // a document drawn purely from a planted topic maps to the matching topic
  const int topic_of_court = same > swapped ? 0 : 1;
  CHECK(measure_topic(model, "courta courtb courtc courta courtd") == topic_of_court);
  CHECK(measure_topic(model, "rivera riverb riverc") == 1 - topic_of_court);
}

TEST_CASE("distributions are normalised") {
  const auto planted = testing::planted_corpus(100, 30, 5);
  const auto model = fit_topic_model(planted.documents, small_config(1));
  for (int k = 0; k < model.k; ++k) {
    auto r = model.topic_row(k);
    CHECK(std::abs(std::accumulate(r.begin(), r.end(), 0.0) - 1.0) <= 1e-9);
  }
  for (std::size_t d = 0; d < model.n_documents(); ++d) {
    auto r = model.doc_row(d);
    CHECK(std::abs(std::accumulate(r.begin(), r.end(), 0.0) - 1.0) <= 1e-9);
  }
  const auto p = infer_proportions(model, planted.documents[0]);
  CHECK(std::abs(std::accumulate(p.begin(), p.end(), 0.0) - 1.0) <= 1e-9);
}

TEST_CASE("fixed seed reproduces the fit exactly") {
  const auto planted = testing::planted_corpus(100, 30, 5);
  const auto a = fit_topic_model(planted.documents, small_config(8));
  const auto b = fit_topic_model(planted.documents, small_config(8));
  CHECK(a.assignments == b.assignments);
  CHECK(a.topic_word == b.topic_word);
  CHECK(a.doc_topic == b.doc_topic);
}

TEST_CASE("degenerate inputs") {
  const std::vector<std::string> docs = {"court river", "river court"};
  TopicModelConfig c = small_config(1);
  c.k = 1;
  CHECK_THROWS_AS(fit_topic_model(docs, c), ConfigError);
  c.k = 2;
  const std::vector<std::string> stop_only = {"the and of", "- -", "..."};
  CHECK_THROWS_AS(fit_topic_model(stop_only, c), DataError);
}

TEST_CASE("out-of-vocabulary text maps to the reserved level") {
  const auto planted = testing::planted_corpus(50, 20, 2);
  const auto model = fit_topic_model(planted.documents, small_config(1));
  CHECK(measure_topic(model, "zebra quokka") == 2);
  CHECK(measure_topic(model, "") == 2);
  CHECK(infer_proportions(model, "zebra").empty());
}

TEST_CASE("exact tie goes to the lowest topic") {
  TopicModel m;
  m.vocabulary = {"court", "river"};
  m.k = 3;
  m.alpha = 0.1;
  m.beta = 0.01;
  m.topic_word = {0.5, 0.5, 0.5, 0.5, 0.5, 0.5};
  CHECK(measure_topic(m, "court river") == 0);
}

TEST_CASE("stop words and dashes are not topic tokens") {
  CHECK(topic_tokens("The court - - and the River.") == std::vector<std::string>{"court", "river"});
}
