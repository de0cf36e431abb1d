#ifndef MEDLANG_SCM_HPP
#define MEDLANG_SCM_HPP

#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "medlang/corpus.hpp"
#include "medlang/mediation.hpp"
#include "medlang/records.hpp"

namespace medlang {

/// Linear predictor intercept + t * treatment + x[level of X].
struct LogitTerm {
  double intercept = 0.0;
  double t = 0.0;
  std::vector<double> x;
};

/// Multinomial logit law P(M | T, X, U): one LogitTerm per non-reference level.
struct ScmMediator {
  std::string name;
  int n_levels = 2;
  std::vector<LogitTerm> logits;
};

/// Logistic law P(Y = 1 | M, T, X, U).
struct ScmOutcome {
  LogitTerm base;
  /// Per mediator, one coefficient per level (level 0 usually 0).
  std::map<std::string, std::vector<double>> m;
  /// T x M interaction coefficients, same layout as `m`.
  std::map<std::string, std::vector<double>> tm;
};

/// Binary unmeasured confounder U ~ Bernoulli(p) acting on every mediator's
/// non-reference logits and on the outcome logit.
struct UnmeasuredConfounder {
  double p = 0.5;
  double on_mediators = 0.0;
  double on_outcome = 0.0;
};

/// Structural equations over finite categorical variables. With
/// coupling == 0, carryover == 0 and no U, sequential ignorability and
/// mediator independence hold by construction.
struct ScmSpec {
  std::string confounder_name = "x";
  std::vector<std::string> confounder_levels;
  std::vector<double> confounder_probs;
  LogitTerm treatment;
  std::vector<ScmMediator> mediators;
  ScmOutcome outcome;
  std::optional<UnmeasuredConfounder> unmeasured;
  /// M^2 <- M^1: added to every non-reference logit of mediators[1] times the level of mediators[0].
  double coupling = 0.0;
  /// Y_{i-1} -> M_i: added to every non-reference mediator logit of unit i times y_{i-1}.
  double carryover = 0.0;
  std::uint64_t seed = 0;

  /// ConfigError unless every law is a valid distribution for every parent
  /// combination (checked exhaustively over the finite grid).
  void validate() const;
  const ScmMediator& mediator(const std::string& name) const;
};

ScmSpec parse_scm_spec(std::istream& in);
ScmSpec load_scm_spec(const std::string& path);
void write_scm_spec(std::ostream& out, const ScmSpec& spec);

double sigmoid(double v);

/// Exact population effects of one mediator, every other mediator following
/// the treatment on the direct path. e[t][t'] = E[Y(t, M^j(t'))].
struct OracleResult {
  std::string mediator;
  double nde_true = 0.0;
  double nie_true = 0.0;
  double nie_reversed_true = 0.0;
  double te_true = 0.0;
  double e[2][2] = {{0.0, 0.0}, {0.0, 0.0}};
};

/// Enumerates the finite (X, U, M) grid. ConfigError when coupling or
/// carryover is active (the oracle is defined under the independence
/// assumptions); U is marginalised as part of the law.
OracleResult exact_effects(const ScmSpec& spec, const std::string& mediator);
std::vector<OracleResult> exact_effects(const ScmSpec& spec);

/// Samples n units in order. Unit i gets id "syn<i>:1" (the advocate turn of
/// rendered case "syn<i>"); folds come from make_plan with the same derived
/// seed build_records uses, so rendered and sampled records agree.
RecordSet generate(const ScmSpec& spec, std::size_t n, std::uint64_t seed, int n_folds = 2);

std::string synthetic_case_id(std::size_t i);

struct RenderedTranscript {
  std::vector<Utterance> utterances;
  CaseMetadata metadata;
};

/// Three-turn cases (chief justice introduction, advocate turn, justice turn)
/// whose measured treatment, hedging, disfluency and interruption equal the
/// sampled values; the confounder goes to the case metadata. Only binary
/// mediators named hedging or disfluency can be rendered.
RenderedTranscript render_transcript(const RecordSet& data, const ScmSpec& spec);

enum class ViolationKnob { unmeasured_confounder, mediator_coupling, temporal_carryover };

ViolationKnob parse_knob(const std::string& name);
std::string to_string(ViolationKnob knob);

/// Copy of spec with the knob set to the given magnitude.
ScmSpec with_knob(const ScmSpec& spec, ViolationKnob knob, double magnitude);

struct StudyOptions {
  int n_folds = 2;
  EstimationConfig estimation;
};

struct StudyRow {
  double magnitude = 0.0;
  std::string mediator;
  double nde = 0.0;
  double nie = 0.0;
  double nde_oracle = 0.0;
  double nie_oracle = 0.0;
  double nde_bias = 0.0;
  double nie_bias = 0.0;
};

/// For each magnitude: generate with the knob active (same seed at every grid
/// point), estimate every mediator, and report estimate minus the oracle of
/// the knob-free spec.
std::vector<StudyRow> violation_study(const ScmSpec& base, ViolationKnob knob,
                                      const std::vector<double>& grid, std::size_t n, std::uint64_t seed,
                                      const StudyOptions& options = {});

void write_study_csv(std::ostream& out, const std::vector<StudyRow>& rows);

}  // namespace medlang

#endif  // MEDLANG_SCM_HPP
