#ifndef MEDLANG_TOPIC_MODEL_HPP
#define MEDLANG_TOPIC_MODEL_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace medlang {

struct TopicModelConfig {
  int k = 20;
  double alpha = 0.1;
  double beta = 0.01;
  int sweeps = 1000;
  int burn_in = 500;
  std::uint64_t seed = 0;
  /// Fold-in iterations used by measure_topic.
  int inference_iterations = 100;
};

/// LDA fitted by collapsed Gibbs sampling. Immutable once returned.
struct TopicModel {
  std::vector<std::string> vocabulary;  // sorted
  int k = 0;
  double alpha = 0.0;
  double beta = 0.0;
  int inference_iterations = 100;
  /// Row-major k x V topic-word distributions, averaged over post burn-in sweeps.
  std::vector<double> topic_word;
  /// Row-major D x k per-document proportions for the training documents.
  std::vector<double> doc_topic;
  /// Final topic assignment of every kept token, per training document.
  std::vector<std::vector<int>> assignments;

  std::size_t vocab_size() const { return vocabulary.size(); }
  std::size_t n_documents() const { return k == 0 ? 0 : doc_topic.size() / k; }
  std::span<const double> topic_row(int topic) const;
  std::span<const double> doc_row(std::size_t doc) const;
  std::optional<int> word_id(std::string_view word) const;
};

/// Tokens kept for topic modelling: the shared tokenizer minus stop words,
/// dash tokens and tokens without an alphanumeric character.
std::vector<std::string> topic_tokens(std::string_view text);

/// Throws ConfigError for k < 2 and DataError when no token survives
/// preprocessing.
TopicModel fit_topic_model(std::span<const std::string> corpus, const TopicModelConfig& config);
TopicModel fit_topic_model_tokens(const std::vector<std::vector<std::string>>& documents,
                                  const TopicModelConfig& config);

/// Topic proportions of an unseen text with the topic-word matrix held fixed
/// (deterministic fold-in). Empty when the text has no in-vocabulary token.
std::vector<double> infer_proportions(const TopicModel& model, std::string_view text);

/// Dominant topic of the text; ties go to the lowest index. Text without any
/// in-vocabulary token maps to the reserved level k.
int measure_topic(const TopicModel& model, std::string_view text);

}  // namespace medlang

#endif  // MEDLANG_TOPIC_MODEL_HPP
