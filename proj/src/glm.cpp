#include "medlang/glm.hpp"

#include <charconv>
#include <numeric>

#include "medlang/error.hpp"

namespace medlang {
namespace {

int dummy_width(const std::vector<int>& radices) {
  int width = 0;
  for (int r : radices) width += r - 1;
  return width;
}

// Writes the confounder dummies of `cell` into row starting at column `col`.
void put_confounder_dummies(Eigen::MatrixXd& design, Eigen::Index row, Eigen::Index col,
                            const std::vector<int>& radices, int cell) {
  std::vector<int> levels(radices.size());
  for (std::size_t j = radices.size(); j > 0; --j) {
    levels[j - 1] = cell % radices[j - 1];
    cell /= radices[j - 1];
  }
  for (std::size_t j = 0; j < radices.size(); ++j) {
    if (levels[j] > 0) design(row, col + levels[j] - 1) = 1.0;
    col += radices[j] - 1;
  }
}

Eigen::MatrixXd mediator_design(const EncodedMediation& d) {
  const Eigen::Index rows = 2 * d.n_cells;
  Eigen::MatrixXd design = Eigen::MatrixXd::Zero(rows, 2 + dummy_width(d.radices));
  for (int t = 0; t < 2; ++t) {
    for (int cell = 0; cell < d.n_cells; ++cell) {
      const Eigen::Index r = t * d.n_cells + cell;
      design(r, 0) = 1.0;
      design(r, 1) = t;
      put_confounder_dummies(design, r, 2, d.radices, cell);
    }
  }
  return design;
}

Eigen::MatrixXd outcome_design(const EncodedMediation& d, bool interaction) {
  const int k = d.n_levels;
  const Eigen::Index rows = static_cast<Eigen::Index>(k) * 2 * d.n_cells;
  const Eigen::Index m_cols = k - 1;
  const Eigen::Index x_col = 2 + m_cols + (interaction ? m_cols : 0);
  Eigen::MatrixXd design = Eigen::MatrixXd::Zero(rows, x_col + dummy_width(d.radices));
  for (int m = 0; m < k; ++m) {
    for (int t = 0; t < 2; ++t) {
      for (int cell = 0; cell < d.n_cells; ++cell) {
        const Eigen::Index r = (static_cast<Eigen::Index>(m) * 2 + t) * d.n_cells + cell;
        design(r, 0) = 1.0;
        design(r, 1) = t;
        if (m > 0) {
          design(r, 2 + m - 1) = 1.0;
          if (interaction) design(r, 2 + m_cols + m - 1) = t;
        }
        put_confounder_dummies(design, r, x_col, d.radices, cell);
      }
    }
  }
  return design;
}

// Adds the pseudo-count to every class of rows that are empty or miss a
// class; returns the indices of the smoothed rows.
std::vector<Eigen::Index> smooth(Eigen::MatrixXd& counts, double pseudo) {
  std::vector<Eigen::Index> smoothed;
  for (Eigen::Index r = 0; r < counts.rows(); ++r) {
    if (counts.row(r).minCoeff() <= 0.0) {
      counts.row(r).array() += pseudo;
      smoothed.push_back(r);
    }
  }
  return smoothed;
}

void check_rows(const EncodedMediation& data, std::span<const std::size_t> rows) {
  for (std::size_t r : rows) {
    if (r >= data.size()) throw DataError("row index out of range");
  }
}

}  // namespace

MediatorTable MediatorTable::zeros(int n_levels, int n_cells) {
  return {n_levels, n_cells, std::vector<double>(static_cast<std::size_t>(2) * n_cells * n_levels, 0.0)};
}

OutcomeTable OutcomeTable::zeros(int n_levels, int n_cells) {
  return {n_levels, n_cells, std::vector<double>(static_cast<std::size_t>(2) * n_cells * n_levels, 0.0)};
}

EncodedMediation encode_mediation(const RecordSet& data, const std::string& mediator,
                                  const CrossFitPlan& plan) {
  const MediatorDomain& domain = data.schema.mediator(mediator);
  if (domain.fold_specific && plan.n_folds != data.schema.n_folds) {
    throw DataError("mediator " + mediator + " was measured per fold; the plan must keep the " +
                    std::to_string(data.schema.n_folds) + " record folds");
  }
  EncodedMediation e;
  e.mediator_name = mediator;
  e.n_levels = domain.n_levels;
  e.n_cells = data.schema.n_cells();
  e.n_folds = plan.n_folds;
  for (const auto& c : data.schema.confounders) e.radices.push_back(static_cast<int>(c.levels.size()));
  const std::size_t n = data.records.size();
  e.t.reserve(n);
  e.cell.reserve(n);
  e.y.reserve(n);
  e.fold.reserve(n);
  e.level.reserve(n * plan.n_folds);
  for (const auto& r : data.records) {
    e.t.push_back(r.t);
    e.cell.push_back(data.schema.cell_index(r.x));
    e.y.push_back(r.y);
    e.fold.push_back(plan.fold_of(r.unit_id));
    for (int f = 0; f < plan.n_folds; ++f) {
      const int level = r.training_level(domain, f);
      if (level < 0 || level >= domain.n_levels) {
        throw DataError("record " + r.unit_id + ": mediator level outside the declared domain");
      }
      e.level.push_back(level);
    }
  }
  return e;
}

FittedMediatorModel fit_mediator_rows(const EncodedMediation& data, std::span<const std::size_t> rows,
                                      const GlmOptions& options) {
  check_rows(data, rows);
  const Eigen::MatrixXd design = mediator_design(data);
  FittedMediatorModel model;
  model.mediator_name = data.mediator_name;
  for (int f = 0; f < data.n_folds; ++f) {
    Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(design.rows(), data.n_levels);
    for (std::size_t r : rows) {
      if (data.fold[r] == f) continue;
      counts(data.t[r] * data.n_cells + data.cell[r], data.training_level(r, f)) += 1.0;
    }
    for (Eigen::Index row : smooth(counts, options.pseudo_count)) {
      model.smoothed.push_back({f, data.mediator_name, ModelKind::mediator, -1,
                                static_cast<int>(row / data.n_cells), static_cast<int>(row % data.n_cells)});
    }
    const MultinomialFit fit = fit_multinomial(design, counts, options.irls);
    const Eigen::MatrixXd probs = multinomial_probabilities(design, fit.coefficients);
    MediatorTable table = MediatorTable::zeros(data.n_levels, data.n_cells);
    for (int t = 0; t < 2; ++t) {
      for (int cell = 0; cell < data.n_cells; ++cell) {
        for (int m = 0; m < data.n_levels; ++m) table.at(m, t, cell) = probs(t * data.n_cells + cell, m);
      }
    }
    model.folds.push_back(std::move(table));
    model.diagnostics.push_back({fit.log_likelihood, fit.iterations});
  }
  return model;
}

FittedOutcomeModel fit_outcome_rows(const EncodedMediation& data, std::span<const std::size_t> rows,
                                    const GlmOptions& options) {
  check_rows(data, rows);
  const Eigen::MatrixXd design = outcome_design(data, options.interaction);
  FittedOutcomeModel model;
  model.mediator_name = data.mediator_name;
  for (int f = 0; f < data.n_folds; ++f) {
    Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(design.rows(), 2);
    for (std::size_t r : rows) {
      if (data.fold[r] == f) continue;
      const int m = data.training_level(r, f);
      counts((static_cast<Eigen::Index>(m) * 2 + data.t[r]) * data.n_cells + data.cell[r], data.y[r]) += 1.0;
    }
    for (Eigen::Index row : smooth(counts, options.pseudo_count)) {
      const int cell = static_cast<int>(row % data.n_cells);
      const int mt = static_cast<int>(row / data.n_cells);
      model.smoothed.push_back({f, data.mediator_name, ModelKind::outcome, mt / 2, mt % 2, cell});
    }
    const MultinomialFit fit = fit_multinomial(design, counts, options.irls);
    const Eigen::MatrixXd probs = multinomial_probabilities(design, fit.coefficients);
    OutcomeTable table = OutcomeTable::zeros(data.n_levels, data.n_cells);
    for (int m = 0; m < data.n_levels; ++m) {
      for (int t = 0; t < 2; ++t) {
        for (int cell = 0; cell < data.n_cells; ++cell) {
          table.at(m, t, cell) = probs((static_cast<Eigen::Index>(m) * 2 + t) * data.n_cells + cell, 1);
        }
      }
    }
    model.folds.push_back(std::move(table));
    model.diagnostics.push_back({fit.log_likelihood, fit.iterations});
  }
  return model;
}

FittedMediatorModel fit_mediator_model(const RecordSet& data, const std::string& mediator,
                                       const CrossFitPlan& plan, const GlmOptions& options) {
  const EncodedMediation encoded = encode_mediation(data, mediator, plan);
  std::vector<std::size_t> rows(encoded.size());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return fit_mediator_rows(encoded, rows, options);
}

FittedOutcomeModel fit_outcome_model(const RecordSet& data, const std::string& mediator,
                                     const CrossFitPlan& plan, const GlmOptions& options) {
  const EncodedMediation encoded = encode_mediation(data, mediator, plan);
  std::vector<std::size_t> rows(encoded.size());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return fit_outcome_rows(encoded, rows, options);
}

std::string csv_field(const std::string& value) {
  if (value.find_first_of(",\"\r\n") == std::string::npos) return value;
  std::string out = "\"";
  for (char c : value) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string format_double(double value) {
  char buffer[64];
  auto [end, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
  return std::string(buffer, end);
}

namespace {

void write_header(std::ostream& out, const RecordSchema& schema) {
  out << "fold,mediator,m,t";
  for (const auto& c : schema.confounders) out << ',' << csv_field(c.name);
  out << ",value\r\n";
}

template <typename Table>
void write_rows(std::ostream& out, const RecordSchema& schema, const std::string& mediator, int fold,
                const Table& table) {
  for (int m = 0; m < table.n_levels; ++m) {
    for (int t = 0; t < 2; ++t) {
      for (int cell = 0; cell < table.n_cells; ++cell) {
        out << fold << ',' << csv_field(mediator) << ',' << m << ',' << t;
        for (const auto& level : schema.cell_levels(cell)) out << ',' << csv_field(level);
        out << ',' << format_double(table(m, t, cell)) << "\r\n";
      }
    }
  }
}

}  // namespace

void write_mediator_tables_csv(std::ostream& out, const RecordSchema& schema,
                               const std::vector<FittedMediatorModel>& models) {
  write_header(out, schema);
  for (const auto& model : models) {
    for (std::size_t f = 0; f < model.folds.size(); ++f) {
      write_rows(out, schema, model.mediator_name, static_cast<int>(f), model.folds[f]);
    }
  }
}

void write_outcome_tables_csv(std::ostream& out, const RecordSchema& schema,
                              const std::vector<FittedOutcomeModel>& models) {
  write_header(out, schema);
  for (const auto& model : models) {
    for (std::size_t f = 0; f < model.folds.size(); ++f) {
      write_rows(out, schema, model.mediator_name, static_cast<int>(f), model.folds[f]);
    }
  }
}

}  // namespace medlang
