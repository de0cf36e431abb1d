#ifndef MEDLANG_GLM_HPP
#define MEDLANG_GLM_HPP

#include <cstddef>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "medlang/crossfit.hpp"
#include "medlang/logit.hpp"
#include "medlang/records.hpp"

namespace medlang {

struct GlmOptions {
  IrlsOptions irls;
  /// Pseudo-count added to every class of a cell that is empty or misses a class.
  double pseudo_count = 0.5;
  /// Include the T x M interaction in the outcome model.
  bool interaction = true;
};

struct FitDiagnostics {
  double log_likelihood = 0.0;
  int iterations = 0;
};

enum class ModelKind { mediator, outcome };

/// A table cell that received pseudo-counts. m is -1 for mediator-model cells.
struct SmoothedCell {
  int fold = 0;
  std::string mediator;
  ModelKind model = ModelKind::mediator;
  int m = -1;
  int t = 0;
  int cell = 0;
};

/// P(M = m | T = t, X = cell) over the full finite grid for one fold.
struct MediatorTable {
  int n_levels = 0;
  int n_cells = 0;
  std::vector<double> prob;  // [(t * n_cells + cell) * n_levels + m]

  double operator()(int m, int t, int cell) const {
    return prob[(static_cast<std::size_t>(t) * n_cells + cell) * n_levels + m];
  }
  double& at(int m, int t, int cell) {
    return prob[(static_cast<std::size_t>(t) * n_cells + cell) * n_levels + m];
  }
  static MediatorTable zeros(int n_levels, int n_cells);
};

/// E[Y | M = m, T = t, X = cell] over the full finite grid for one fold.
struct OutcomeTable {
  int n_levels = 0;
  int n_cells = 0;
  std::vector<double> mean;  // [(m * 2 + t) * n_cells + cell]

  double operator()(int m, int t, int cell) const {
    return mean[(static_cast<std::size_t>(m) * 2 + t) * n_cells + cell];
  }
  double& at(int m, int t, int cell) {
    return mean[(static_cast<std::size_t>(m) * 2 + t) * n_cells + cell];
  }
  static OutcomeTable zeros(int n_levels, int n_cells);
};

/// Cross-fitted mediator model: entry f was trained on the training set of fold f.
struct FittedMediatorModel {
  std::string mediator_name;
  std::vector<MediatorTable> folds;
  std::vector<FitDiagnostics> diagnostics;
  std::vector<SmoothedCell> smoothed;
};

struct FittedOutcomeModel {
  std::string mediator_name;
  std::vector<OutcomeTable> folds;
  std::vector<FitDiagnostics> diagnostics;
  std::vector<SmoothedCell> smoothed;
};

/// Records of one mediator reduced to integer codes. Shared by the fitting,
/// evaluation and bootstrap paths so resampling never touches strings.
struct EncodedMediation {
  std::string mediator_name;
  int n_levels = 0;
  int n_cells = 0;
  int n_folds = 0;
  std::vector<int> radices;  // confounder level counts
  std::vector<int> t, cell, y, fold;
  std::vector<int> level;  // row-major n x n_folds training levels

  std::size_t size() const { return t.size(); }
  int training_level(std::size_t row, int f) const { return level[row * n_folds + f]; }
};

/// Folds are taken from the plan; DataError on records outside the schema.
EncodedMediation encode_mediation(const RecordSet& data, const std::string& mediator,
                                  const CrossFitPlan& plan);

/// Multinomial (binary: logistic) regression of M on (1, T, X dummies) per
/// fold, fitted by IRLS on the training rows, materialised over the grid.
FittedMediatorModel fit_mediator_model(const RecordSet& data, const std::string& mediator,
                                       const CrossFitPlan& plan, const GlmOptions& options = {});
/// Logistic regression of Y on (1, T, M dummies, T x M dummies, X dummies).
FittedOutcomeModel fit_outcome_model(const RecordSet& data, const std::string& mediator,
                                     const CrossFitPlan& plan, const GlmOptions& options = {});

/// Fits on a multiset of rows (indices may repeat) of encoded data.
FittedMediatorModel fit_mediator_rows(const EncodedMediation& data, std::span<const std::size_t> rows,
                                      const GlmOptions& options = {});
FittedOutcomeModel fit_outcome_rows(const EncodedMediation& data, std::span<const std::size_t> rows,
                                    const GlmOptions& options = {});

/// Audit CSV: fold, mediator, m, t, <confounder columns>, value.
void write_mediator_tables_csv(std::ostream& out, const RecordSchema& schema,
                               const std::vector<FittedMediatorModel>& models);
void write_outcome_tables_csv(std::ostream& out, const RecordSchema& schema,
                              const std::vector<FittedOutcomeModel>& models);

/// RFC 4180 field quoting.
std::string csv_field(const std::string& value);
/// Shortest round-trip decimal representation.
std::string format_double(double value);

}  // namespace medlang

#endif  // MEDLANG_GLM_HPP
