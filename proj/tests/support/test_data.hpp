#ifndef MEDLANG_TESTS_TEST_DATA_HPP
#define MEDLANG_TESTS_TEST_DATA_HPP

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "medlang/random.hpp"
#include "medlang/records.hpp"

namespace medlang::testing {

std::string source_path(const std::string& relative);
std::string read_file(const std::string& path);

struct Draw {
  int t = 0;
  int m = 0;
  int y = 0;
};

/// n records with one confounder "x" (levels "x0".."x{k-1}", uniform) and
/// one mediator "m"; folds from make_plan over the ids.
RecordSet synthetic_records(std::size_t n, int x_levels, int m_levels, std::uint64_t seed,
                            const std::function<Draw(Rng&, int)>& law, int n_folds = 2);

double logistic(double v);

/// Two topics over disjoint vocabularies (20 words each, non-uniform weights).
/// Each document draws a dominant topic and takes 90% of its tokens from it.
struct PlantedCorpus {
  std::vector<std::string> documents;
  std::vector<int> dominant;
  std::vector<std::string> vocabulary;      // sorted
  std::vector<std::vector<double>> topics;  // over `vocabulary`
};
PlantedCorpus planted_corpus(std::size_t n_docs, std::size_t doc_length, std::uint64_t seed);

double cosine(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace medlang::testing

#endif
