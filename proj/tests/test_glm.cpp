#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <sstream>

#include "medlang/crossfit.hpp"
#include "medlang/error.hpp"
#include "medlang/glm.hpp"
#include "medlang/logit.hpp"
#include "test_data.hpp"

using namespace medlang;
using testing::Draw;
using testing::logistic;

namespace {

CrossFitPlan plan_of(const RecordSet& s) { return plan_from_records(s.records, s.schema.n_folds); }

// Hand-built set with explicit folds; x has one level.
RecordSet hand_set(const std::vector<std::tuple<int, int, int, int>>& rows, int m_levels = 2) {
  RecordSet s;
  s.schema.confounders = {{"x", {"only"}}};
  s.schema.mediators = {{"m", m_levels, false}};
  int i = 0;
  for (const auto& [t, m, y, fold] : rows) {
    CausalRecord r;
    r.unit_id = "r" + std::to_string(i++);
    r.t = t;
    r.m["m"] = m;
    r.y = y;
    r.fold = fold;
    r.x["x"] = "only";
    s.records.push_back(r);
  }
  return s;
}

}  // namespace

TEST_CASE("mediator independent of treatment: arms agree within 0.02 at N = 200000") {
  const auto s = testing::synthetic_records(200000, 3, 2, 1, [](Rng& rng, int x) {
    Draw d;
    d.t = rng.bernoulli(logistic(0.3 * x - 0.2));
    d.m = rng.bernoulli(logistic(-0.4 + 0.5 * x));
    d.y = rng.bernoulli(0.3);
    return d;
  });
  const auto g = fit_mediator_model(s, "m", plan_of(s));
  double worst = 0.0;
  for (const auto& table : g.folds)
    for (int cell = 0; cell < 3; ++cell)
      for (int m = 0; m < 2; ++m) worst = std::max(worst, std::abs(table(m, 1, cell) - table(m, 0, cell)));
  CHECK(worst <= 0.02);
}

TEST_CASE("perfectly balanced toy gives 0.5 everywhere") {
  std::vector<std::tuple<int, int, int, int>> rows;
  for (int fold = 0; fold < 2; ++fold)
    for (int t = 0; t < 2; ++t)
      for (int m = 0; m < 2; ++m)
        for (int rep = 0; rep < 26; ++rep) rows.emplace_back(t, m, rep % 2, fold);
  const auto s = hand_set(rows);
  const auto g = fit_mediator_model(s, "m", plan_of(s));
  for (const auto& table : g.folds)
    for (double p : table.prob) CHECK(p == doctest::Approx(0.5).epsilon(0.01));
  const auto f = fit_outcome_model(s, "m", plan_of(s));
  for (const auto& table : f.folds)
    for (double p : table.mean) CHECK(p == doctest::Approx(0.5).epsilon(0.01));
}

TEST_CASE("single-class mediator in a training fold is smoothed toward that class") {
  std::vector<std::tuple<int, int, int, int>> rows;
  const int per_cell = 40;
  for (int t = 0; t < 2; ++t)
    for (int rep = 0; rep < per_cell; ++rep) {
      rows.emplace_back(t, 1, rep % 2, 1);         // fold 1: only class 1
      rows.emplace_back(t, rep % 2, rep % 3 == 0, 0);  // fold 0: mixed
    }
  const auto s = hand_set(rows);
  const auto g = fit_mediator_model(s, "m", plan_of(s));
  // fold 0's tables are trained on fold 1
  const double bound = 0.5 / (per_cell + 1.0);
  for (int t = 0; t < 2; ++t) {
    CHECK(g.folds[0](1, t, 0) == doctest::Approx(1.0 - bound).epsilon(1e-6));
    CHECK(g.folds[0](1, t, 0) > 0.98);
  }
  REQUIRE_FALSE(g.smoothed.empty());
  for (const auto& c : g.smoothed) {
    CHECK(c.fold == 0);
    CHECK(c.model == ModelKind::mediator);
  }
}

TEST_CASE("outcome independent of treatment given mediator: within 0.02 at N = 200000") {
  const auto s = testing::synthetic_records(200000, 2, 2, 2, [](Rng& rng, int x) {
    Draw d;
    d.t = rng.bernoulli(0.5);
    d.m = rng.bernoulli(logistic(-0.2 + 0.8 * d.t));
    d.y = rng.bernoulli(logistic(-0.5 + 0.9 * d.m + 0.4 * x));
    return d;
  });
  const auto f = fit_outcome_model(s, "m", plan_of(s));
  double worst = 0.0;
  for (const auto& table : f.folds)
    for (int cell = 0; cell < 2; ++cell)
      for (int m = 0; m < 2; ++m) worst = std::max(worst, std::abs(table(m, 1, cell) - table(m, 0, cell)));
  CHECK(worst <= 0.02);
}

TEST_CASE("constant outcome") {
  const auto s = testing::synthetic_records(2000, 2, 2, 3, [](Rng& rng, int) {
    Draw d;
    d.t = rng.bernoulli(0.5);
    d.m = rng.bernoulli(0.5);
    d.y = 1;
    return d;
  });
  const auto f = fit_outcome_model(s, "m", plan_of(s));
  for (const auto& table : f.folds)
    for (double p : table.mean) {
      CHECK(p <= 1.0);
      CHECK(p >= 0.99);
    }
  CHECK_FALSE(f.smoothed.empty());
}

TEST_CASE("known logistic laws are recovered within 0.01 at N = 200000") {
  const double bx[] = {0.0, 0.5, -0.7};
  const auto s = testing::synthetic_records(200000, 3, 2, 4, [&](Rng& rng, int x) {
    Draw d;
    d.t = rng.bernoulli(0.5);
    d.m = rng.bernoulli(logistic(-0.3 + 0.9 * d.t + bx[x]));
    d.y = rng.bernoulli(logistic(-1.0 + 0.6 * d.t + 0.8 * d.m - 0.5 * d.t * d.m + bx[x]));
    return d;
  });
  const auto plan = plan_of(s);
  const auto g = fit_mediator_model(s, "m", plan);
  const auto f = fit_outcome_model(s, "m", plan);
  double worst_g = 0.0, worst_f = 0.0;
  for (int fold = 0; fold < 2; ++fold)
    for (int x = 0; x < 3; ++x)
      for (int t = 0; t < 2; ++t) {
        worst_g = std::max(worst_g, std::abs(g.folds[fold](1, t, x) - logistic(-0.3 + 0.9 * t + bx[x])));
        for (int m = 0; m < 2; ++m) {
          const double truth = logistic(-1.0 + 0.6 * t + 0.8 * m - 0.5 * t * m + bx[x]);
          worst_f = std::max(worst_f, std::abs(f.folds[fold](m, t, x) - truth));
        }
      }
  CHECK(worst_g <= 0.01);
  CHECK(worst_f <= 0.01);
}

TEST_CASE("interaction term vanishes when its true coefficient is zero (N = 50000)") {
  const auto s = testing::synthetic_records(50000, 2, 2, 5, [](Rng& rng, int x) {
    Draw d;
    d.t = rng.bernoulli(0.5);
    d.m = rng.bernoulli(logistic(0.4 * d.t - 0.2));
    d.y = rng.bernoulli(logistic(-0.6 + 0.7 * d.t + 0.9 * d.m + 0.3 * x));
    return d;
  });
  GlmOptions additive;
  additive.interaction = false;
  const auto with = fit_outcome_model(s, "m", plan_of(s));
  const auto without = fit_outcome_model(s, "m", plan_of(s), additive);
  double worst = 0.0;
  for (int fold = 0; fold < 2; ++fold)
    for (std::size_t i = 0; i < with.folds[fold].mean.size(); ++i)
      worst = std::max(worst, std::abs(with.folds[fold].mean[i] - without.folds[fold].mean[i]));
  CHECK(worst <= 0.01);
}

TEST_CASE("property: tables normalise and are invariant to record order") {
  for (std::uint64_t seed = 10; seed < 15; ++seed) {
    auto s = testing::synthetic_records(3000, 3, 4, seed, [](Rng& rng, int x) {
      Draw d;
      d.t = rng.bernoulli(0.4);
      const double w[] = {1.0, 0.5 + d.t, 0.3 + 0.2 * x, 0.8};
      d.m = rng.categorical(w);
      d.y = rng.bernoulli(0.2 + 0.1 * d.m);
      return d;
    });
    const auto plan = plan_of(s);
    const auto g = fit_mediator_model(s, "m", plan);
    const auto f = fit_outcome_model(s, "m", plan);
    for (const auto& table : g.folds)
      for (int t = 0; t < 2; ++t)
        for (int cell = 0; cell < 3; ++cell) {
          double sum = 0.0;
          for (int m = 0; m < 4; ++m) {
            const double p = table(m, t, cell);
            CHECK(p >= 0.0);
            CHECK(p <= 1.0);
            sum += p;
          }
          CHECK(std::abs(sum - 1.0) <= 1e-9);
        }
    for (const auto& table : f.folds)
      for (double v : table.mean) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
      }

    Rng rng(seed);
    rng.shuffle(s.records);
    const auto g2 = fit_mediator_model(s, "m", plan);
    const auto f2 = fit_outcome_model(s, "m", plan);
    for (int fold = 0; fold < 2; ++fold) {
      for (std::size_t i = 0; i < g.folds[fold].prob.size(); ++i)
        CHECK(std::abs(g.folds[fold].prob[i] - g2.folds[fold].prob[i]) <= 1e-12);
      for (std::size_t i = 0; i < f.folds[fold].mean.size(); ++i)
        CHECK(std::abs(f.folds[fold].mean[i] - f2.folds[fold].mean[i]) <= 1e-12);
    }
  }
}

TEST_CASE("saturated multinomial fit reproduces cell proportions") {
  Eigen::MatrixXd design(2, 2);
  design << 1, 0, 1, 1;
  Eigen::MatrixXd counts(2, 3);
  counts << 10, 20, 70, 30, 30, 40;
  const auto fit = fit_multinomial(design, counts);
  CHECK(fit.converged);
  const auto p = multinomial_probabilities(design, fit.coefficients);
  CHECK(p(0, 0) == doctest::Approx(0.1).epsilon(1e-6));
  CHECK(p(0, 2) == doctest::Approx(0.7).epsilon(1e-6));
  CHECK(p(1, 1) == doctest::Approx(0.3).epsilon(1e-6));
}

TEST_CASE("non-convergence raises a numerical error") {
  Eigen::MatrixXd design(2, 2);
  design << 1, 0, 1, 1;
  Eigen::MatrixXd counts(2, 2);
  counts << 90, 10, 20, 80;
  IrlsOptions tight;
  tight.max_iterations = 1;
  CHECK_THROWS_AS(fit_multinomial(design, counts, tight), NumericalError);
}

TEST_CASE("audit CSV") {
  std::vector<std::tuple<int, int, int, int>> rows;
  for (int fold = 0; fold < 2; ++fold)
    for (int t = 0; t < 2; ++t)
      for (int m = 0; m < 2; ++m) rows.emplace_back(t, m, m, fold);
  auto s = hand_set(rows);
  s.schema.confounders[0].levels = {"only, \"quoted\""};
  for (auto& r : s.records) r.x["x"] = "only, \"quoted\"";
  const auto plan = plan_of(s);
  std::ostringstream g_csv, f_csv;
  write_mediator_tables_csv(g_csv, s.schema, {fit_mediator_model(s, "m", plan)});
  write_outcome_tables_csv(f_csv, s.schema, {fit_outcome_model(s, "m", plan)});
  const std::string g_text = g_csv.str();
  CHECK(g_text.rfind("fold,mediator,m,t,x,value\r\n", 0) == 0);
  CHECK(g_text.find("\"only, \"\"quoted\"\"\"") != std::string::npos);
  // header + folds * t * cells * m
  CHECK(std::count(g_text.begin(), g_text.end(), '\n') == 1 + 2 * 2 * 1 * 2);
  const std::string f_text = f_csv.str();
  CHECK(std::count(f_text.begin(), f_text.end(), '\n') == 1 + 2 * 2 * 2 * 1);
}

TEST_CASE("csv helpers") {
  CHECK(csv_field("plain") == "plain");
  CHECK(csv_field("a,b") == "\"a,b\"");
  CHECK(csv_field("say \"hi\"") == "\"say \"\"hi\"\"\"");
  CHECK(csv_field("two\nlines") == "\"two\nlines\"");
  CHECK(format_double(0.1) == "0.1");
  CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);
}

TEST_CASE("unknown mediator") {
  const auto s = hand_set({{0, 0, 0, 0}, {1, 1, 1, 1}});
  CHECK_THROWS(fit_mediator_model(s, "nope", plan_of(s)));
}
