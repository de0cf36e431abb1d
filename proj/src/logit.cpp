#include "medlang/logit.hpp"

#include <cmath>
#include <sstream>

#include "medlang/error.hpp"

namespace medlang {
namespace {

double log_likelihood(const Eigen::MatrixXd& probs, const Eigen::MatrixXd& counts) {
  double ll = 0.0;
  for (Eigen::Index c = 0; c < counts.rows(); ++c) {
    for (Eigen::Index k = 0; k < counts.cols(); ++k) {
      if (counts(c, k) > 0.0) ll += counts(c, k) * std::log(probs(c, k));
    }
  }
  return ll;
}

Eigen::MatrixXd unpack(const Eigen::VectorXd& theta, Eigen::Index p, Eigen::Index classes) {
  return Eigen::Map<const Eigen::MatrixXd>(theta.data(), p, classes);
}

}  // namespace

Eigen::MatrixXd multinomial_probabilities(const Eigen::MatrixXd& design,
                                          const Eigen::MatrixXd& coefficients) {
  const Eigen::Index rows = design.rows();
  const Eigen::Index k = coefficients.cols() + 1;
  const Eigen::MatrixXd eta = design * coefficients;
  Eigen::MatrixXd probs(rows, k);
  for (Eigen::Index c = 0; c < rows; ++c) {
    double top = 0.0;
    for (Eigen::Index a = 0; a + 1 < k; ++a) top = std::max(top, eta(c, a));
    double total = std::exp(-top);
    probs(c, 0) = total;
    for (Eigen::Index a = 1; a < k; ++a) {
      probs(c, a) = std::exp(eta(c, a - 1) - top);
      total += probs(c, a);
    }
    probs.row(c) /= total;
  }
  return probs;
}

MultinomialFit fit_multinomial(const Eigen::MatrixXd& design, const Eigen::MatrixXd& counts,
                               const IrlsOptions& options) {
  const Eigen::Index p = design.cols();
  const Eigen::Index k = counts.cols();
  if (k < 2) throw DataError("multinomial fit needs at least two classes");
  if (counts.rows() != design.rows()) throw DataError("design and counts disagree on cell count");
  const Eigen::Index classes = k - 1;
  const Eigen::Index dim = p * classes;

  Eigen::VectorXd theta = Eigen::VectorXd::Zero(dim);
  Eigen::MatrixXd probs = multinomial_probabilities(design, unpack(theta, p, classes));
  double ll = log_likelihood(probs, counts);
  const Eigen::VectorXd totals = counts.rowwise().sum();

  MultinomialFit fit;
  double last_change = 0.0;
  for (int iter = 1; iter <= options.max_iterations; ++iter) {
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(dim);
    Eigen::MatrixXd info = Eigen::MatrixXd::Zero(dim, dim);
    for (Eigen::Index c = 0; c < design.rows(); ++c) {
      if (totals(c) <= 0.0) continue;
      const auto z = design.row(c).transpose();
      const Eigen::MatrixXd zz = z * z.transpose();
      for (Eigen::Index a = 0; a < classes; ++a) {
        const double pa = probs(c, a + 1);
        grad.segment(a * p, p) += (counts(c, a + 1) - totals(c) * pa) * z;
        for (Eigen::Index b = a; b < classes; ++b) {
          const double w = totals(c) * pa * ((a == b ? 1.0 : 0.0) - probs(c, b + 1));
          info.block(a * p, b * p, p, p) += w * zz;
        }
      }
    }
    for (Eigen::Index a = 0; a < classes; ++a) {
      for (Eigen::Index b = a + 1; b < classes; ++b) {
        info.block(b * p, a * p, p, p) = info.block(a * p, b * p, p, p).transpose();
      }
    }
    info.diagonal().array() += options.ridge;
    const Eigen::VectorXd step = info.ldlt().solve(grad);

    double scale = 1.0;
    Eigen::VectorXd candidate = theta + step;
    Eigen::MatrixXd candidate_probs = multinomial_probabilities(design, unpack(candidate, p, classes));
    double candidate_ll = log_likelihood(candidate_probs, counts);
    while (!(candidate_ll >= ll - 1e-12 * std::abs(ll)) && scale > 1e-6) {
      scale *= 0.5;
      candidate = theta + scale * step;
      candidate_probs = multinomial_probabilities(design, unpack(candidate, p, classes));
      candidate_ll = log_likelihood(candidate_probs, counts);
    }
    last_change = (scale * step).cwiseAbs().maxCoeff();
    theta = std::move(candidate);
    probs = std::move(candidate_probs);
    ll = candidate_ll;
    fit.iterations = iter;
    if (!std::isfinite(ll)) break;
    if (last_change < options.tolerance) {
      fit.converged = true;
      break;
    }
  }
  fit.coefficients = unpack(theta, p, classes);
  fit.log_likelihood = ll;
  if (!fit.converged) {
    std::ostringstream msg;
    msg << "IRLS did not converge after " << fit.iterations << " iterations (log-likelihood " << ll
        << ", last max coefficient change " << last_change << ")";
    throw NumericalError(msg.str());
  }
  return fit;
}

}  // namespace medlang
