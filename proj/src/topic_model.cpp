#include "medlang/topic_model.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <map>

#include "medlang/error.hpp"
#include "medlang/random.hpp"
#include "medlang/text.hpp"

namespace medlang {
namespace {

constexpr std::array<std::string_view, 128> kStopWords = {
    "a", "about", "above", "after", "again", "against", "all", "am", "an", "and",
    "any", "are", "as", "at", "be", "because", "been", "before", "being", "below",
    "between", "both", "but", "by", "can", "could", "did", "do", "does", "doing",
    "don't", "down", "during", "each", "few", "for", "from", "further", "had", "has",
    "have", "having", "he", "her", "here", "hers", "herself", "him", "himself", "his",
    "how", "i", "i'm", "if", "in", "into", "is", "it", "it's", "its",
    "itself", "just", "me", "more", "most", "my", "myself", "no", "nor", "not",
    "now", "of", "off", "on", "once", "only", "or", "other", "our", "ours",
    "ourselves", "out", "over", "own", "same", "she", "should", "so", "some", "such",
    "than", "that", "that's", "the", "their", "theirs", "them", "themselves", "then", "there",
    "these", "they", "this", "those", "through", "to", "too", "under", "until", "up",
    "very", "was", "we", "well", "were", "what", "when", "where", "which", "while",
    "who", "whom", "why", "will", "with", "would", "you", "your"};

bool is_stop_word(std::string_view token) {
  static const auto sorted = [] {
    auto words = kStopWords;
    std::sort(words.begin(), words.end());
    return words;
  }();
  return std::binary_search(sorted.begin(), sorted.end(), token);
}

bool has_alnum(std::string_view token) {
  return std::any_of(token.begin(), token.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) != 0 || (static_cast<unsigned char>(c) & 0x80);
  });
}

}  // namespace

std::span<const double> TopicModel::topic_row(int topic) const {
  return std::span<const double>(topic_word).subspan(static_cast<std::size_t>(topic) * vocab_size(),
                                                     vocab_size());
}

std::span<const double> TopicModel::doc_row(std::size_t doc) const {
  return std::span<const double>(doc_topic).subspan(doc * k, k);
}

std::optional<int> TopicModel::word_id(std::string_view word) const {
  auto it = std::lower_bound(vocabulary.begin(), vocabulary.end(), word);
  if (it == vocabulary.end() || *it != word) return std::nullopt;
  return static_cast<int>(it - vocabulary.begin());
}

std::vector<std::string> topic_tokens(std::string_view text) {
  std::vector<std::string> kept;
  for (auto& token : text::tokenize(text)) {
    if (text::is_dash_token(token) || !has_alnum(token) || is_stop_word(token)) continue;
    kept.push_back(std::move(token));
  }
  return kept;
}

TopicModel fit_topic_model(std::span<const std::string> corpus, const TopicModelConfig& config) {
  std::vector<std::vector<std::string>> documents;
  documents.reserve(corpus.size());
  for (const auto& doc : corpus) documents.push_back(topic_tokens(doc));
  return fit_topic_model_tokens(documents, config);
}

TopicModel fit_topic_model_tokens(const std::vector<std::vector<std::string>>& documents,
                                  const TopicModelConfig& config) {
  if (config.k < 2) throw ConfigError("topic model needs k >= 2");
  if (config.alpha <= 0.0 || config.beta <= 0.0) throw ConfigError("topic priors must be positive");
  if (config.sweeps <= config.burn_in || config.burn_in < 0) {
    throw ConfigError("topic model needs sweeps > burn_in >= 0");
  }

  TopicModel model;
  model.k = config.k;
  model.alpha = config.alpha;
  model.beta = config.beta;
  model.inference_iterations = config.inference_iterations;
  {
    std::vector<std::string> vocab;
    for (const auto& doc : documents) vocab.insert(vocab.end(), doc.begin(), doc.end());
    std::sort(vocab.begin(), vocab.end());
    vocab.erase(std::unique(vocab.begin(), vocab.end()), vocab.end());
    model.vocabulary = std::move(vocab);
  }
  if (model.vocabulary.empty()) throw DataError("topic model vocabulary is empty after preprocessing");

  const int k = config.k;
  const std::size_t n_words = model.vocab_size();
  const std::size_t n_docs = documents.size();

  std::vector<std::vector<int>> words(n_docs);
  for (std::size_t d = 0; d < n_docs; ++d) {
    words[d].reserve(documents[d].size());
    for (const auto& token : documents[d]) words[d].push_back(*model.word_id(token));
  }

  std::vector<int> doc_topic_count(n_docs * k, 0);
  std::vector<int> topic_word_count(k * n_words, 0);
  std::vector<int> topic_count(k, 0);
  auto& z = model.assignments;
  z.assign(n_docs, {});

  Rng rng(config.seed);
  for (std::size_t d = 0; d < n_docs; ++d) {
    z[d].resize(words[d].size());
    for (std::size_t n = 0; n < words[d].size(); ++n) {
      const int topic = static_cast<int>(rng.index(k));
      z[d][n] = topic;
      ++doc_topic_count[d * k + topic];
      ++topic_word_count[topic * n_words + words[d][n]];
      ++topic_count[topic];
    }
  }

  const double v_beta = static_cast<double>(n_words) * config.beta;
  const double k_alpha = k * config.alpha;
  std::vector<double> weights(k);
  model.topic_word.assign(k * n_words, 0.0);
  model.doc_topic.assign(n_docs * k, 0.0);

  for (int sweep = 0; sweep < config.sweeps; ++sweep) {
    for (std::size_t d = 0; d < n_docs; ++d) {
      int* dt = &doc_topic_count[d * k];
      for (std::size_t n = 0; n < words[d].size(); ++n) {
        const int w = words[d][n];
        const int old_topic = z[d][n];
        --dt[old_topic];
        --topic_word_count[old_topic * n_words + w];
        --topic_count[old_topic];
        for (int t = 0; t < k; ++t) {
          weights[t] = (dt[t] + config.alpha) * (topic_word_count[t * n_words + w] + config.beta) /
                       (topic_count[t] + v_beta);
        }
        const int topic = rng.categorical(weights);
        z[d][n] = topic;
        ++dt[topic];
        ++topic_word_count[topic * n_words + w];
        ++topic_count[topic];
      }
    }
    if (sweep < config.burn_in) continue;
    for (int t = 0; t < k; ++t) {
      const double denom = topic_count[t] + v_beta;
      for (std::size_t w = 0; w < n_words; ++w) {
        model.topic_word[t * n_words + w] += (topic_word_count[t * n_words + w] + config.beta) / denom;
      }
    }
    for (std::size_t d = 0; d < n_docs; ++d) {
      const double denom = static_cast<double>(words[d].size()) + k_alpha;
      for (int t = 0; t < k; ++t) {
        model.doc_topic[d * k + t] += (doc_topic_count[d * k + t] + config.alpha) / denom;
      }
    }
  }

  // Average the accumulated samples, then renormalise rows so each sums to
  // one up to a single rounding.
  auto normalise_rows = [](std::vector<double>& m, std::size_t rows, std::size_t cols) {
    for (std::size_t r = 0; r < rows; ++r) {
      double total = 0.0;
      for (std::size_t c = 0; c < cols; ++c) total += m[r * cols + c];
      for (std::size_t c = 0; c < cols; ++c) m[r * cols + c] /= total;
    }
  };
  normalise_rows(model.topic_word, k, n_words);
  normalise_rows(model.doc_topic, n_docs, k);
  return model;
}

std::vector<double> infer_proportions(const TopicModel& model, std::string_view text) {
  std::vector<int> ids;
  for (const auto& token : topic_tokens(text)) {
    if (auto id = model.word_id(token)) ids.push_back(*id);
  }
  if (ids.empty()) return {};

  const int k = model.k;
  const std::size_t n_words = model.vocab_size();
  std::vector<double> theta(k, 1.0 / k);
  std::vector<double> next(k), resp(k);
  const double denom = static_cast<double>(ids.size()) + k * model.alpha;
  for (int iter = 0; iter < model.inference_iterations; ++iter) {
    std::fill(next.begin(), next.end(), model.alpha);
    for (int w : ids) {
      double total = 0.0;
      for (int t = 0; t < k; ++t) {
        resp[t] = theta[t] * model.topic_word[t * n_words + w];
        total += resp[t];
      }
      for (int t = 0; t < k; ++t) next[t] += resp[t] / total;
    }
    for (int t = 0; t < k; ++t) theta[t] = next[t] / denom;
  }
  return theta;
}

int measure_topic(const TopicModel& model, std::string_view text) {
  const auto theta = infer_proportions(model, text);
  if (theta.empty()) return model.k;
  return static_cast<int>(std::max_element(theta.begin(), theta.end()) - theta.begin());
}

}  // namespace medlang
