#ifndef MEDLANG_MEDIATION_HPP
#define MEDLANG_MEDIATION_HPP

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "medlang/crossfit.hpp"
#include "medlang/glm.hpp"
#include "medlang/records.hpp"

namespace medlang {

/// How the per-mediator sums are averaged over confounders.
///  per_unit: average over units, each evaluated at its own X (default).
///  marginal: weight every fold's term by the pooled empirical law of X.
enum class XWeighting { per_unit, marginal };

/// Reported with every estimate.
inline constexpr std::string_view kDirectEffectCaveat =
    "The natural direct effect is estimated relative to the mediators included in this "
    "analysis. Unless every relevant mediator is included, it must not be read as the actual "
    "direct causal effect of the treatment, and it is not a measure of bias.";

struct EffectPoint {
  double nde = 0.0;
  double nie = 0.0;
  double nie_reversed = 0.0;
  double total_effect = 0.0;
  std::size_t n_units = 0;
};

/// Cross-fitted sample averages: every record is scored with the tables of
/// its own test fold (trained on the other folds). The plan maps unit ids to
/// folds; DataError names any (m, t, x) cell the tables do not cover.
double sa_nde(const RecordSet& data, const FittedMediatorModel& g, const FittedOutcomeModel& f,
              const CrossFitPlan& plan, XWeighting weighting = XWeighting::per_unit);
double sa_nie(const RecordSet& data, const FittedMediatorModel& g, const FittedOutcomeModel& f,
              const CrossFitPlan& plan, XWeighting weighting = XWeighting::per_unit);
double total_effect(const RecordSet& data, const FittedMediatorModel& g, const FittedOutcomeModel& f,
                    const CrossFitPlan& plan, XWeighting weighting = XWeighting::per_unit);
/// Indirect effect with the treatment held at 1 instead of 0.
double nie_reversed(const RecordSet& data, const FittedMediatorModel& g, const FittedOutcomeModel& f,
                    const CrossFitPlan& plan, XWeighting weighting = XWeighting::per_unit);

EffectPoint evaluate_effects(const RecordSet& data, const FittedMediatorModel& g,
                             const FittedOutcomeModel& f, const CrossFitPlan& plan,
                             XWeighting weighting = XWeighting::per_unit);
EffectPoint evaluate_effects_rows(const EncodedMediation& data, std::span<const std::size_t> rows,
                                  const FittedMediatorModel& g, const FittedOutcomeModel& f,
                                  XWeighting weighting = XWeighting::per_unit);

struct EstimationConfig {
  int n_bootstrap = 1000;
  std::uint64_t seed = 0;
  double ci_level = 0.90;
  XWeighting weighting = XWeighting::per_unit;
  GlmOptions glm;
  unsigned threads = 1;
  /// Share of dropped replicates above which bootstrap_effects fails.
  double max_drop_fraction = 0.10;
};

struct Interval {
  double lower = 0.0;
  double upper = 0.0;

  bool contains(double v) const { return lower <= v && v <= upper; }
};

struct EffectEstimate {
  std::string mediator_name;
  double nde = 0.0;
  double nie = 0.0;
  double nie_reversed = 0.0;
  double total_effect = 0.0;
  double ci_level = 0.0;
  Interval nde_ci;
  Interval nie_ci;
  std::size_t n_units = 0;
  /// Replicates that entered the intervals.
  int n_bootstrap = 0;
  int n_dropped = 0;
  /// An interval was widened to contain its point estimate.
  bool widened = false;
  std::string caveat = std::string(kDirectEffectCaveat);
};

/// Point estimates with nuisance models fitted on the records' own folds.
EffectPoint point_effects(const RecordSet& data, const std::string& mediator,
                          const EstimationConfig& config = {});

/// Percentile bootstrap. Each replicate resamples units with replacement
/// within every cross-fit fold (fold sizes preserved), refits both nuisance
/// models with the same cross-fit protocol and recomputes the effects. A
/// replicate that loses a treatment arm or confounder level present in the
/// data, or whose fit fails, is dropped. Replicate r draws from a stream
/// derived from (seed, mediator, r), so results do not depend on threading
/// or on which other mediators are estimated.
EffectEstimate bootstrap_effects(const RecordSet& data, const std::string& mediator,
                                 const EstimationConfig& config);

/// Runs bootstrap_effects for each mediator independently.
std::vector<EffectEstimate> estimate_all(const RecordSet& data, const std::vector<std::string>& mediators,
                                         const EstimationConfig& config);

/// Linear-interpolation quantile (type 7) of sorted values.
double quantile_sorted(std::span<const double> sorted, double q);

}  // namespace medlang

#endif  // MEDLANG_MEDIATION_HPP
