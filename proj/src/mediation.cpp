#include "medlang/mediation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>

#include "medlang/error.hpp"
#include "medlang/parallel.hpp"
#include "medlang/random.hpp"

namespace medlang {
namespace {

struct CellTerms {
  double nde = 0.0;
  double nie = 0.0;
  double nie_reversed = 0.0;
  double total = 0.0;
};

void check_tables(const EncodedMediation& data, const FittedMediatorModel& g, const FittedOutcomeModel& f) {
  auto missing = [&](int m, int t, int cell) {
    throw DataError("no fitted table entry for mediator " + data.mediator_name + " at (m=" +
                    std::to_string(m) + ", t=" + std::to_string(t) + ", x=cell " + std::to_string(cell) + ")");
  };
  const int needed_folds = data.n_folds;
  if (static_cast<int>(g.folds.size()) < needed_folds || static_cast<int>(f.folds.size()) < needed_folds) {
    throw DataError("fitted models cover fewer folds than the cross-fit plan");
  }
  for (int fold = 0; fold < needed_folds; ++fold) {
    const auto& gt = g.folds[fold];
    const auto& ft = f.folds[fold];
    if (gt.n_levels < data.n_levels || gt.n_cells < data.n_cells ||
        gt.prob.size() < static_cast<std::size_t>(2) * gt.n_cells * gt.n_levels) {
      missing(std::min(gt.n_levels, data.n_levels - 1), 0, std::min(gt.n_cells, data.n_cells - 1));
    }
    if (ft.n_levels < data.n_levels || ft.n_cells < data.n_cells ||
        ft.mean.size() < static_cast<std::size_t>(2) * ft.n_cells * ft.n_levels) {
      missing(std::min(ft.n_levels, data.n_levels - 1), 0, std::min(ft.n_cells, data.n_cells - 1));
    }
  }
}

CellTerms cell_terms(const MediatorTable& g, const OutcomeTable& f, int cell, int n_levels) {
  CellTerms terms;
  for (int m = 0; m < n_levels; ++m) {
    const double g1 = g(m, 1, cell);
    const double g0 = g(m, 0, cell);
    const double f1 = f(m, 1, cell);
    const double f0 = f(m, 0, cell);
    terms.nde += (f1 - f0) * g0;
    terms.nie += f0 * (g1 - g0);
    terms.nie_reversed += f1 * (g1 - g0);
    terms.total += f1 * g1 - f0 * g0;
  }
  return terms;
}

EffectPoint evaluate(const EncodedMediation& data, std::span<const std::size_t> rows,
                     const FittedMediatorModel& g, const FittedOutcomeModel& f, XWeighting weighting) {
  if (rows.empty()) throw DataError("no records to average over");
  check_tables(data, g, f);
  const int folds = data.n_folds;
  std::vector<double> counts(static_cast<std::size_t>(folds) * data.n_cells, 0.0);
  for (std::size_t r : rows) counts[static_cast<std::size_t>(data.fold[r]) * data.n_cells + data.cell[r]] += 1.0;
  const double n = static_cast<double>(rows.size());

  std::vector<double> weight(counts.size(), 0.0);
  if (weighting == XWeighting::per_unit) {
    for (std::size_t i = 0; i < counts.size(); ++i) weight[i] = counts[i] / n;
  } else {
    std::vector<double> px(data.n_cells, 0.0);
    for (int fold = 0; fold < folds; ++fold) {
      for (int cell = 0; cell < data.n_cells; ++cell) px[cell] += counts[fold * data.n_cells + cell] / n;
    }
    for (int fold = 0; fold < folds; ++fold) {
      double share = 0.0;
      for (int cell = 0; cell < data.n_cells; ++cell) share += counts[fold * data.n_cells + cell];
      share /= n;
      for (int cell = 0; cell < data.n_cells; ++cell) weight[fold * data.n_cells + cell] = share * px[cell];
    }
  }

  EffectPoint point;
  point.n_units = rows.size();
  for (int fold = 0; fold < folds; ++fold) {
    for (int cell = 0; cell < data.n_cells; ++cell) {
      const double w = weight[static_cast<std::size_t>(fold) * data.n_cells + cell];
      if (w == 0.0) continue;
      const CellTerms terms = cell_terms(g.folds[fold], f.folds[fold], cell, data.n_levels);
      point.nde += w * terms.nde;
      point.nie += w * terms.nie;
      point.nie_reversed += w * terms.nie_reversed;
      point.total_effect += w * terms.total;
    }
  }
  return point;
}

std::vector<std::size_t> all_rows(std::size_t n) {
  std::vector<std::size_t> rows(n);
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return rows;
}

void check_config(const EstimationConfig& config) {
  if (config.n_bootstrap < 100) throw ConfigError("bootstrap needs at least 100 replicates");
  if (!(config.ci_level > 0.0 && config.ci_level < 1.0)) throw ConfigError("ci level must lie in (0, 1)");
}

// Level sets present in a multiset of rows: treatment arms, then the levels of
// every confounder.
struct LevelPresence {
  std::vector<char> present;

  bool covers(const LevelPresence& other) const {
    for (std::size_t i = 0; i < present.size(); ++i) {
      if (other.present[i] && !present[i]) return false;
    }
    return true;
  }
};

LevelPresence presence(const EncodedMediation& data, std::span<const std::size_t> rows) {
  std::vector<int> offsets;
  int total = 2;
  for (int radix : data.radices) {
    offsets.push_back(total);
    total += radix;
  }
  LevelPresence p{std::vector<char>(total, 0)};
  for (std::size_t r : rows) {
    p.present[data.t[r]] = 1;
    int cell = data.cell[r];
    for (std::size_t j = data.radices.size(); j > 0; --j) {
      p.present[offsets[j - 1] + cell % data.radices[j - 1]] = 1;
      cell /= data.radices[j - 1];
    }
  }
  return p;
}

}  // namespace

EffectPoint evaluate_effects_rows(const EncodedMediation& data, std::span<const std::size_t> rows,
                                  const FittedMediatorModel& g, const FittedOutcomeModel& f,
                                  XWeighting weighting) {
  return evaluate(data, rows, g, f, weighting);
}

EffectPoint evaluate_effects(const RecordSet& data, const FittedMediatorModel& g,
                             const FittedOutcomeModel& f, const CrossFitPlan& plan, XWeighting weighting) {
  const EncodedMediation encoded = encode_mediation(data, g.mediator_name, plan);
  const auto rows = all_rows(encoded.size());
  return evaluate(encoded, rows, g, f, weighting);
}

double sa_nde(const RecordSet& data, const FittedMediatorModel& g, const FittedOutcomeModel& f,
              const CrossFitPlan& plan, XWeighting weighting) {
  return evaluate_effects(data, g, f, plan, weighting).nde;
}

double sa_nie(const RecordSet& data, const FittedMediatorModel& g, const FittedOutcomeModel& f,
              const CrossFitPlan& plan, XWeighting weighting) {
  return evaluate_effects(data, g, f, plan, weighting).nie;
}

double total_effect(const RecordSet& data, const FittedMediatorModel& g, const FittedOutcomeModel& f,
                    const CrossFitPlan& plan, XWeighting weighting) {
  return evaluate_effects(data, g, f, plan, weighting).total_effect;
}

double nie_reversed(const RecordSet& data, const FittedMediatorModel& g, const FittedOutcomeModel& f,
                    const CrossFitPlan& plan, XWeighting weighting) {
  return evaluate_effects(data, g, f, plan, weighting).nie_reversed;
}

EffectPoint point_effects(const RecordSet& data, const std::string& mediator, const EstimationConfig& config) {
  const CrossFitPlan plan = plan_from_records(data.records, data.schema.n_folds);
  const EncodedMediation encoded = encode_mediation(data, mediator, plan);
  const auto rows = all_rows(encoded.size());
  const auto g = fit_mediator_rows(encoded, rows, config.glm);
  const auto f = fit_outcome_rows(encoded, rows, config.glm);
  return evaluate(encoded, rows, g, f, config.weighting);
}

double quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw DataError("quantile of an empty sample");
  const double h = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

EffectEstimate bootstrap_effects(const RecordSet& data, const std::string& mediator,
                                 const EstimationConfig& config) {
  check_config(config);
  const CrossFitPlan plan = plan_from_records(data.records, data.schema.n_folds);
  const EncodedMediation encoded = encode_mediation(data, mediator, plan);
  const auto rows = all_rows(encoded.size());
  const auto g = fit_mediator_rows(encoded, rows, config.glm);
  const auto f = fit_outcome_rows(encoded, rows, config.glm);
  const EffectPoint point = evaluate(encoded, rows, g, f, config.weighting);

  std::vector<std::vector<std::size_t>> fold_rows(encoded.n_folds);
  for (std::size_t r : rows) fold_rows[encoded.fold[r]].push_back(r);
  const LevelPresence original = presence(encoded, rows);
  const std::uint64_t stream = derive_seed(config.seed, "bootstrap:" + mediator);

  struct Replicate {
    bool ok = false;
    double nde = 0.0;
    double nie = 0.0;
  };
  std::vector<Replicate> replicates(config.n_bootstrap);
  parallel_for(replicates.size(), config.threads, [&](std::size_t b) {
    Rng rng(derive_seed(stream, "replicate", b));
    std::vector<std::size_t> sample;
    sample.reserve(rows.size());
    for (const auto& fold : fold_rows) {
      for (std::size_t i = 0; i < fold.size(); ++i) sample.push_back(fold[rng.index(fold.size())]);
    }
    if (!presence(encoded, sample).covers(original)) return;
    try {
      const auto gb = fit_mediator_rows(encoded, sample, config.glm);
      const auto fb = fit_outcome_rows(encoded, sample, config.glm);
      const EffectPoint eb = evaluate(encoded, sample, gb, fb, config.weighting);
      replicates[b] = {true, eb.nde, eb.nie};
    } catch (const NumericalError&) {
      // counted as dropped below
    }
  });

  std::vector<double> nde, nie;
  for (const auto& rep : replicates) {
    if (!rep.ok) continue;
    nde.push_back(rep.nde);
    nie.push_back(rep.nie);
  }
  const int dropped = config.n_bootstrap - static_cast<int>(nde.size());
  if (dropped > config.max_drop_fraction * config.n_bootstrap) {
    throw NumericalError("bootstrap for mediator " + mediator + " dropped " + std::to_string(dropped) +
                         " of " + std::to_string(config.n_bootstrap) + " replicates");
  }
  std::sort(nde.begin(), nde.end());
  std::sort(nie.begin(), nie.end());
  const double lo_q = (1.0 - config.ci_level) / 2.0;
  const double hi_q = 1.0 - lo_q;

  EffectEstimate est;
  est.mediator_name = mediator;
  est.nde = point.nde;
  est.nie = point.nie;
  est.nie_reversed = point.nie_reversed;
  est.total_effect = point.total_effect;
  est.ci_level = config.ci_level;
  est.nde_ci = {quantile_sorted(nde, lo_q), quantile_sorted(nde, hi_q)};
  est.nie_ci = {quantile_sorted(nie, lo_q), quantile_sorted(nie, hi_q)};
  est.n_units = point.n_units;
  est.n_bootstrap = static_cast<int>(nde.size());
  est.n_dropped = dropped;
  for (auto [ci, value] : {std::pair{&est.nde_ci, est.nde}, std::pair{&est.nie_ci, est.nie}}) {
    if (!ci->contains(value)) {
      ci->lower = std::min(ci->lower, value);
      ci->upper = std::max(ci->upper, value);
      est.widened = true;
    }
  }
  return est;
}

std::vector<EffectEstimate> estimate_all(const RecordSet& data, const std::vector<std::string>& mediators,
                                         const EstimationConfig& config) {
  std::vector<EffectEstimate> out;
  out.reserve(mediators.size());
  for (const auto& name : mediators) out.push_back(bootstrap_effects(data, name, config));
  return out;
}

}  // namespace medlang
