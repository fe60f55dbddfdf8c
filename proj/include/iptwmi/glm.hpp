#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "iptwmi/errors.hpp"
#include "iptwmi/linalg.hpp"
#include "iptwmi/rng.hpp"

namespace iptwmi {

struct IrlsOptions {
  double tolerance = 1e-8;        // on the max-abs score
  int max_iterations = 50;
  double separation_bound = 15.0;  // |coefficient| beyond this means separation
  int max_halvings = 30;
};

// Result of a binomial (logit) or Gaussian GLM fit. Coefficients are ordered
// as the design columns (intercept first by convention).
struct GlmFit {
  Vector coefficients;
  CovMatrix covariance;  // inverse observed information (Gaussian: sigma^2 (X'X)^-1)
  bool converged = false;
  int iterations = 0;
  double dispersion = 1.0;  // residual variance for the Gaussian model
  double log_likelihood = 0.0;
  std::vector<double> log_likelihood_path;  // one entry per accepted iterate
  double max_abs_score = 0.0;
};

namespace detail {

inline double logistic_loglik(const Matrix& x, const Vector& y, const Vector& beta) {
  Vector eta = x * beta;
  double ll = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    double e = eta(i);
    // log(1 + exp(e)) without overflow
    double log1pexp = std::max(e, 0.0) + std::log1p(std::exp(-std::abs(e)));
    ll += y(i) * e - log1pexp;
  }
  return ll;
}

inline void require_full_rank(const Matrix& x, const char* who) {
  if (x.rows() <= x.cols()) {
    throw ParameterError(std::string(who) + ": need more rows than design columns");
  }
  Matrix xtx = x.transpose() * x;
  Eigen::LLT<Matrix> llt(xtx);
  if (llt.info() != Eigen::Success || !(llt.rcond() > 1e-12)) {
    throw ParameterError(std::string(who) + ": design matrix is rank deficient");
  }
}

}  // namespace detail

// Logistic regression by iteratively reweighted least squares (Newton-Raphson
// on the log-likelihood) with step-halving whenever a full step decreases the
// likelihood. `start` enables warm starts across repeated fits.
inline GlmFit fit_logistic(const Matrix& design, const Vector& response, const IrlsOptions& opts = {},
                           const Vector* start = nullptr) {
  const Eigen::Index n = design.rows();
  const Eigen::Index p = design.cols();
  if (response.size() != n) {
    throw ParameterError("fit_logistic: response length does not match design rows");
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (response(i) != 0.0 && response(i) != 1.0) {
      throw ParameterError("fit_logistic: response must be 0/1");
    }
  }
  if (n < 2 || p < 1) {
    throw ParameterError("fit_logistic: empty design");
  }
  if (n > p) {
    detail::require_full_rank(design, "fit_logistic");
  }

  GlmFit fit;
  Vector beta = Vector::Zero(p);
  if (start != nullptr && start->size() == p && start->allFinite()) {
    beta = *start;
  }
  double ll = detail::logistic_loglik(design, response, beta);
  fit.log_likelihood_path.push_back(ll);

  Matrix weighted(n, p);
  for (int it = 0;; ++it) {
    Vector prob = expit(design * beta);
    Vector score = design.transpose() * (response - prob);
    fit.max_abs_score = score.cwiseAbs().maxCoeff();
    if (fit.max_abs_score < opts.tolerance) {
      fit.converged = true;
      fit.iterations = it;
      break;
    }
    if (it >= opts.max_iterations) {
      fit.iterations = it;
      break;
    }
    Vector w = prob.array() * (1.0 - prob.array());
    weighted = design.array().colwise() * w.array().sqrt();
    Matrix info = Matrix::Zero(p, p);
    info.selfadjointView<Eigen::Lower>().rankUpdate(weighted.transpose());
    info = info.selfadjointView<Eigen::Lower>();
    Eigen::LDLT<Matrix> ldlt(info);
    Vector step = ldlt.solve(score);
    if (ldlt.info() != Eigen::Success || !step.allFinite()) {
      throw SeparationError("fit_logistic: information matrix became singular (separation)");
    }

    Vector candidate = beta + step;
    double ll_new = detail::logistic_loglik(design, response, candidate);
    int halvings = 0;
    while (!(ll_new >= ll - 1e-12 * std::abs(ll)) && halvings < opts.max_halvings) {
      step *= 0.5;
      candidate = beta + step;
      ll_new = detail::logistic_loglik(design, response, candidate);
      ++halvings;
    }
    if (candidate.cwiseAbs().maxCoeff() > opts.separation_bound) {
      throw SeparationError("fit_logistic: coefficient exceeded the separation bound");
    }
    beta = candidate;
    ll = ll_new;
    fit.log_likelihood_path.push_back(ll);
  }

  fit.coefficients = beta;
  fit.log_likelihood = ll;
  Vector prob = expit(design * beta);
  Vector w = prob.array() * (1.0 - prob.array());
  weighted = design.array().colwise() * w.array().sqrt();
  Matrix info = weighted.transpose() * weighted;
  Eigen::LLT<Matrix> llt(info);
  if (llt.info() != Eigen::Success) {
    throw SeparationError("fit_logistic: information matrix not invertible at the estimate");
  }
  fit.covariance = llt.solve(Matrix::Identity(p, p));
  return fit;
}

// Ordinary least squares with covariance sigma_hat^2 (X'X)^-1.
inline GlmFit fit_linear(const Matrix& design, const Vector& response) {
  const Eigen::Index n = design.rows();
  const Eigen::Index p = design.cols();
  if (response.size() != n) {
    throw ParameterError("fit_linear: response length does not match design rows");
  }
  if (n <= p) {
    throw ParameterError("fit_linear: need more rows than design columns");
  }
  Matrix xtx = design.transpose() * design;
  Eigen::LLT<Matrix> llt(xtx);
  if (llt.info() != Eigen::Success || !(llt.rcond() > 1e-12)) {
    throw ParameterError("fit_linear: design matrix is rank deficient");
  }
  GlmFit fit;
  fit.coefficients = llt.solve(design.transpose() * response);
  Vector resid = response - design * fit.coefficients;
  fit.dispersion = resid.squaredNorm() / static_cast<double>(n - p);
  fit.covariance = fit.dispersion * llt.solve(Matrix::Identity(p, p));
  fit.converged = true;
  fit.iterations = 1;
  return fit;
}

struct LinearDraw {
  Vector coefficients;
  double sigma = 0.0;
};

// One draw of (beta, sigma) from the posterior of a normal linear model under
// the non-informative prior: sigma^2 ~ SSR / chi^2_{n-p}, beta ~ N(beta_hat, sigma^2 (X'X)^-1).
inline LinearDraw fit_linear_bayes_draw(const Matrix& design, const Vector& response, RngStream& rng) {
  const Eigen::Index n = design.rows();
  const Eigen::Index p = design.cols();
  if (response.size() != n) {
    throw ParameterError("fit_linear_bayes_draw: response length does not match design rows");
  }
  if (n <= p + 1) {
    throw ParameterError("fit_linear_bayes_draw: need n > p + 1");
  }
  Matrix xtx = design.transpose() * design;
  Eigen::LLT<Matrix> llt(xtx);
  if (llt.info() != Eigen::Success || !(llt.rcond() > 1e-12)) {
    throw ParameterError("fit_linear_bayes_draw: design matrix is rank deficient");
  }
  Vector beta_hat = llt.solve(design.transpose() * response);
  double ssr = (response - design * beta_hat).squaredNorm();
  double df = static_cast<double>(n - p);
  LinearDraw draw;
  draw.sigma = std::sqrt(ssr / rng.chi_squared(df));
  Vector e(p);
  for (Eigen::Index j = 0; j < p; ++j) {
    e(j) = rng.normal();
  }
  // X'X = L L^T, so L^-T e has covariance (X'X)^-1.
  Vector u = llt.matrixU().solve(e);
  draw.coefficients = beta_hat + draw.sigma * u;
  return draw;
}

// Large-sample posterior draw N(alpha_hat, covariance) for a converged logistic fit.
inline Vector logistic_posterior_draw(const GlmFit& fit, RngStream& rng) {
  if (!fit.converged) {
    throw EstimationError("logistic_posterior_draw: fit did not converge");
  }
  return mvn_draw(rng, fit.coefficients, covariance_factor(fit.covariance, true));
}

}  // namespace iptwmi
