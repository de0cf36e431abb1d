#include "test_data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "medlang/crossfit.hpp"

namespace medlang::testing {

std::string source_path(const std::string& relative) { return std::string(MEDLANG_SOURCE_DIR) + "/" + relative; }

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

RecordSet synthetic_records(std::size_t n, int x_levels, int m_levels, std::uint64_t seed,
                            const std::function<Draw(Rng&, int)>& law, int n_folds) {
  RecordSet set;
  Confounder x{"x", {}};
  for (int i = 0; i < x_levels; ++i) x.levels.push_back("x" + std::to_string(i));
  set.schema.confounders = {x};
  set.schema.mediators = {{"m", m_levels, false}};
  set.schema.n_folds = n_folds;
  Rng rng(seed);
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < n; ++i) {
    const int level = static_cast<int>(rng.index(static_cast<std::uint64_t>(x_levels)));
    const Draw d = law(rng, level);
    CausalRecord r;
    r.unit_id = "u" + std::to_string(i);
    r.t = d.t;
    r.x["x"] = x.levels[level];
    r.m["m"] = d.m;
    r.y = d.y;
    ids.push_back(r.unit_id);
    set.records.push_back(std::move(r));
  }
  if (n >= static_cast<std::size_t>(n_folds)) {
    const CrossFitPlan plan = make_plan(ids, n_folds, seed ^ 0x5eedULL);
    for (auto& r : set.records) r.fold = plan.fold_of(r.unit_id);
  }
  return set;
}

double logistic(double v) { return 1.0 / (1.0 + std::exp(-v)); }

PlantedCorpus planted_corpus(std::size_t n_docs, std::size_t doc_length, std::uint64_t seed) {
  PlantedCorpus c;
  const int words = 20;
  std::vector<std::vector<std::string>> names(2);
  std::vector<std::vector<double>> weights(2);
  for (int k = 0; k < 2; ++k) {
    for (int w = 0; w < words; ++w) {
      names[k].push_back(std::string(k == 0 ? "court" : "river") + static_cast<char>('a' + w));
      weights[k].push_back(1.0 / (1.0 + w % 7));
    }
  }
  for (int k = 0; k < 2; ++k) c.vocabulary.insert(c.vocabulary.end(), names[k].begin(), names[k].end());
  std::sort(c.vocabulary.begin(), c.vocabulary.end());
  for (int k = 0; k < 2; ++k) {
    std::vector<double> row(c.vocabulary.size(), 0.0);
    double total = 0.0;
    for (double w : weights[k]) total += w;
    for (int w = 0; w < words; ++w) {
      const auto pos = std::lower_bound(c.vocabulary.begin(), c.vocabulary.end(), names[k][w]) - c.vocabulary.begin();
      row[pos] = weights[k][w] / total;
    }
    c.topics.push_back(row);
  }
  Rng rng(seed);
  for (std::size_t d = 0; d < n_docs; ++d) {
    const int z = static_cast<int>(rng.index(2));
    std::string doc;
    for (std::size_t i = 0; i < doc_length; ++i) {
      const int k = rng.bernoulli(0.9) ? z : 1 - z;
      if (!doc.empty()) doc += ' ';
      doc += names[k][rng.categorical(weights[k])];
    }
    c.documents.push_back(doc);
    c.dominant.push_back(z);
  }
  return c;
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  return ab / std::sqrt(aa * bb);
}

}  // namespace medlang::testing
