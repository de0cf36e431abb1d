#ifndef MEDLANG_LOGIT_HPP
#define MEDLANG_LOGIT_HPP

#include <Eigen/Dense>

namespace medlang {

struct IrlsOptions {
  int max_iterations = 100;
  /// Converged when the largest absolute coefficient change falls below this.
  double tolerance = 1e-8;
  /// Added to the diagonal of the information matrix.
  double ridge = 1e-6;
};

/// Multinomial logit fit on grouped data; class 0 is the reference.
struct MultinomialFit {
  Eigen::MatrixXd coefficients;  // p x (K - 1)
  double log_likelihood = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Class probabilities (rows x K) for a design under the given coefficients.
Eigen::MatrixXd multinomial_probabilities(const Eigen::MatrixXd& design,
                                          const Eigen::MatrixXd& coefficients);

/// Newton-Raphson / IRLS with step halving on grouped counts. `design` is
/// cells x p, `counts` is cells x K and may hold fractional pseudo-counts.
/// Throws NumericalError when the iteration limit is reached.
MultinomialFit fit_multinomial(const Eigen::MatrixXd& design, const Eigen::MatrixXd& counts,
                               const IrlsOptions& options = {});

}  // namespace medlang

#endif  // MEDLANG_LOGIT_HPP
