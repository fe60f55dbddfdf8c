#pragma once

#include <array>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "iptwmi/errors.hpp"
#include "iptwmi/glm.hpp"
#include "iptwmi/linalg.hpp"

namespace iptwmi {

enum class EffectMeasure { LogRR, LogOR, RD };

inline constexpr std::array<EffectMeasure, 3> kAllMeasures{EffectMeasure::LogRR, EffectMeasure::LogOR,
                                                           EffectMeasure::RD};

inline const char* to_string(EffectMeasure m) {
  switch (m) {
    case EffectMeasure::LogRR:
      return "logRR";
    case EffectMeasure::LogOR:
      return "logOR";
    case EffectMeasure::RD:
      return "RD";
  }
  return "?";
}

enum class VarianceFlavor { Uncorrected, PsCorrected, PsPlusMi };

inline const char* to_string(VarianceFlavor f) {
  switch (f) {
    case VarianceFlavor::Uncorrected:
      return "uncorrected";
    case VarianceFlavor::PsCorrected:
      return "ps_corrected";
    case VarianceFlavor::PsPlusMi:
      return "ps_plus_mi";
  }
  return "?";
}

inline constexpr double kZ975 = 1.96;

// Fitted propensity-score model: scores = expit(design * alpha).
struct FittedPS {
  Vector alpha;
  CovMatrix alpha_cov;
  Vector scores;
  int iterations = 0;
};

struct MarginalMeans {
  double mu1 = 0.0;
  double mu0 = 0.0;
  std::vector<std::string> warnings;
};

struct EffectEstimate {
  EffectMeasure measure = EffectMeasure::LogRR;
  double estimate = 0.0;
  double variance = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double mu1 = 0.0;
  double mu0 = 0.0;
  VarianceFlavor variance_flavor = VarianceFlavor::Uncorrected;
  std::vector<std::string> warnings;

  bool covers(double truth) const { return ci_low <= truth && truth <= ci_high; }
};

// Quadratic-form corrected variance; clamped records a negative raw value set to zero.
struct VarianceValue {
  double value = 0.0;
  bool clamped = false;
};

// Propensity-score options. `clip` optionally truncates scores to [clip, 1 - clip].
struct PsOptions {
  IrlsOptions irls{};
  double clip = 0.0;
};

inline Vector clip_scores(Vector scores, double clip) {
  if (clip > 0.0) {
    scores = scores.cwiseMax(clip).cwiseMin(1.0 - clip);
  }
  return scores;
}

inline void require_both_arms(const Vector& z, const char* who) {
  double treated = z.sum();
  if (treated < 1.0 || treated > static_cast<double>(z.size()) - 1.0) {
    throw EstimationError(std::string(who) + ": both treatment arms must be non-empty");
  }
}

inline FittedPS estimate_ps(const Matrix& design, const Vector& z, const PsOptions& opts = {},
                            const Vector* start = nullptr) {
  require_both_arms(z, "estimate_ps");
  GlmFit fit = fit_logistic(design, z, opts.irls, start);
  if (!fit.converged) {
    throw EstimationError("estimate_ps: propensity model did not converge");
  }
  FittedPS ps;
  ps.alpha = fit.coefficients;
  ps.alpha_cov = fit.covariance;
  ps.scores = clip_scores(expit(design * fit.coefficients), opts.clip);
  ps.iterations = fit.iterations;
  return ps;
}

namespace detail {

struct ArmSums {
  double s1 = 0.0;   // sum Z / e
  double s0 = 0.0;   // sum (1 - Z) / (1 - e)
  double sy1 = 0.0;  // sum Y Z / e
  double sy0 = 0.0;  // sum Y (1 - Z) / (1 - e)
};

inline void check_inputs(const Vector& y, const Vector& z, const Vector& scores, const char* who) {
  if (y.size() != z.size() || z.size() != scores.size()) {
    throw ParameterError(std::string(who) + ": y, z and scores must have the same length");
  }
  require_both_arms(z, who);
  for (Eigen::Index i = 0; i < scores.size(); ++i) {
    if (!(scores(i) > 0.0 && scores(i) < 1.0)) {
      throw EstimationError(std::string(who) + ": scores must lie strictly inside (0, 1)");
    }
  }
}

inline ArmSums arm_sums(const Vector& y, const Vector& z, const Vector& e) {
  ArmSums s;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    if (z(i) == 1.0) {
      double w = 1.0 / e(i);
      s.s1 += w;
      s.sy1 += w * y(i);
    } else {
      double w = 1.0 / (1.0 - e(i));
      s.s0 += w;
      s.sy0 += w * y(i);
    }
  }
  return s;
}

}  // namespace detail

// Normalized (ratio-of-sums) IPTW marginal means.
inline MarginalMeans iptw_means(const Vector& y, const Vector& z, const Vector& scores) {
  detail::check_inputs(y, z, scores, "iptw_means");
  auto s = detail::arm_sums(y, z, scores);
  MarginalMeans m;
  m.mu1 = s.sy1 / s.s1;
  m.mu0 = s.sy0 / s.s0;
  for (Eigen::Index i = 0; i < scores.size(); ++i) {
    if (scores(i) < 1e-12 || scores(i) > 1.0 - 1e-12) {
      m.warnings.emplace_back("extreme weight: score outside [1e-12, 1 - 1e-12]");
      break;
    }
  }
  return m;
}

inline double effect(double mu1, double mu0, EffectMeasure measure) {
  switch (measure) {
    case EffectMeasure::RD:
      return mu1 - mu0;
    case EffectMeasure::LogRR:
      if (!(mu1 > 0.0 && mu0 > 0.0)) {
        throw DomainError("effect: log RR needs positive marginal means");
      }
      return std::log(mu1 / mu0);
    case EffectMeasure::LogOR:
      if (!(mu1 > 0.0 && mu1 < 1.0 && mu0 > 0.0 && mu0 < 1.0)) {
        throw DomainError("effect: log OR needs marginal means inside (0, 1)");
      }
      return std::log(mu1 / (1.0 - mu1)) - std::log(mu0 / (1.0 - mu0));
  }
  return 0.0;
}

// Delta-method factors (K1, K0) turning mean-scale variances into the measure's scale.
inline std::pair<double, double> k_factors(double mu1, double mu0, EffectMeasure measure) {
  switch (measure) {
    case EffectMeasure::RD:
      return {1.0, 1.0};
    case EffectMeasure::LogRR:
      if (!(mu1 > 0.0 && mu0 > 0.0)) {
        throw DomainError("k_factors: log RR needs positive marginal means");
      }
      return {1.0 / mu1, 1.0 / mu0};
    case EffectMeasure::LogOR:
      if (!(mu1 > 0.0 && mu1 < 1.0 && mu0 > 0.0 && mu0 < 1.0)) {
        throw DomainError("k_factors: log OR needs marginal means inside (0, 1)");
      }
      return {1.0 / (mu1 * (1.0 - mu1)), 1.0 / (mu0 * (1.0 - mu0))};
  }
  return {1.0, 1.0};
}

// Variance treating the scores as known:
//   K1^2 sum (Y - mu1)^2 Z / e^2 / (sum Z / e)^2 + K0^2 sum (Y - mu0)^2 (1 - Z) / (1 - e)^2 / (sum (1 - Z)/(1 - e))^2
inline double var_uncorrected(const Vector& y, const Vector& z, const Vector& scores, double mu1, double mu0,
                              EffectMeasure measure) {
  detail::check_inputs(y, z, scores, "var_uncorrected");
  auto [k1, k0] = k_factors(mu1, mu0, measure);
  auto s = detail::arm_sums(y, z, scores);
  double q1 = 0.0;
  double q0 = 0.0;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    double e = scores(i);
    if (z(i) == 1.0) {
      double r = (y(i) - mu1) / e;
      q1 += r * r;
    } else {
      double r = (y(i) - mu0) / (1.0 - e);
      q0 += r * r;
    }
  }
  return k1 * k1 * q1 / (s.s1 * s.s1) + k0 * k0 * q0 / (s.s0 * s.s0);
}

// Gradient of the estimate with respect to the PS parameters, up to sign:
//   v = K1 sum x (Y - mu1) Z (1 - e) / e / sum(Z/e) + K0 sum x (Y - mu0)(1 - Z) e / (1 - e) / sum((1-Z)/(1-e))
inline Vector correction_vector(const Vector& y, const Vector& z, const Matrix& design, const Vector& scores,
                                double mu1, double mu0, EffectMeasure measure) {
  detail::check_inputs(y, z, scores, "correction_vector");
  if (design.rows() != z.size()) {
    throw ParameterError("correction_vector: design rows do not match data length");
  }
  auto [k1, k0] = k_factors(mu1, mu0, measure);
  auto s = detail::arm_sums(y, z, scores);
  Vector a1 = Vector::Zero(design.cols());
  Vector a0 = Vector::Zero(design.cols());
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    double e = scores(i);
    if (z(i) == 1.0) {
      a1 += design.row(i).transpose() * ((y(i) - mu1) * (1.0 - e) / e);
    } else {
      a0 += design.row(i).transpose() * ((y(i) - mu0) * e / (1.0 - e));
    }
  }
  return (k1 / s.s1) * a1 + (k0 / s.s0) * a0;
}

inline VarianceValue clamp_variance(double raw) {
  if (raw < 0.0) {
    return {0.0, true};
  }
  return {raw, false};
}

// V_un - v' C_alpha v, the variance accounting for estimation of the PS parameters.
inline VarianceValue var_ps_corrected(const Vector& y, const Vector& z, const Matrix& design, const Vector& scores,
                                      const CovMatrix& alpha_cov, double mu1, double mu0, EffectMeasure measure) {
  if (alpha_cov.rows() != design.cols() || alpha_cov.cols() != design.cols()) {
    throw ParameterError("var_ps_corrected: alpha covariance is not conformable with the design");
  }
  double v_un = var_uncorrected(y, z, scores, mu1, mu0, measure);
  Vector v = correction_vector(y, z, design, scores, mu1, mu0, measure);
  return clamp_variance(v_un - v.dot(alpha_cov * v));
}

// V_un - v' {W - (1 + 1/M) B} v evaluated at averaged covariates and pooled scores.
inline VarianceValue var_mipar(const Vector& y, const Vector& z, const Matrix& avg_design, const Vector& pooled_scores,
                               const CovMatrix& within, const CovMatrix& between, int m, double mu1, double mu0,
                               EffectMeasure measure) {
  const auto p = avg_design.cols();
  if (within.rows() != p || within.cols() != p || between.rows() != p || between.cols() != p) {
    throw ParameterError("var_mipar: W and B must be conformable with the design");
  }
  if (m < 2) {
    throw ParameterError("var_mipar: need at least two imputations");
  }
  double v_un = var_uncorrected(y, z, pooled_scores, mu1, mu0, measure);
  Vector v = correction_vector(y, z, avg_design, pooled_scores, mu1, mu0, measure);
  Matrix middle = within - (1.0 + 1.0 / m) * between;
  return clamp_variance(v_un - v.dot(middle * v));
}

inline EffectEstimate make_estimate(EffectMeasure measure, double mu1, double mu0, double variance,
                                    VarianceFlavor flavor) {
  EffectEstimate e;
  e.measure = measure;
  e.mu1 = mu1;
  e.mu0 = mu0;
  e.estimate = effect(mu1, mu0, measure);
  e.variance = variance;
  e.variance_flavor = flavor;
  double half = kZ975 * std::sqrt(std::max(variance, 0.0));
  e.ci_low = e.estimate - half;
  e.ci_high = e.estimate + half;
  return e;
}

// Point estimate plus a pooled variance (already on the measure scale).
inline EffectEstimate make_pooled_estimate(EffectMeasure measure, double estimate, double variance,
                                           VarianceFlavor flavor, double mu1, double mu0) {
  EffectEstimate e;
  e.measure = measure;
  e.estimate = estimate;
  e.variance = variance;
  e.variance_flavor = flavor;
  e.mu1 = mu1;
  e.mu0 = mu0;
  double half = kZ975 * std::sqrt(std::max(variance, 0.0));
  e.ci_low = estimate - half;
  e.ci_high = estimate + half;
  return e;
}

// Rubin's rules for a scalar: mean estimate and W_bar + (1 + 1/M) B.
struct RubinPooled {
  double estimate = 0.0;
  double within = 0.0;
  double between = 0.0;
  double variance = 0.0;
};

inline RubinPooled rubin_pool(const std::vector<double>& estimates, const std::vector<double>& variances) {
  const std::size_t m = estimates.size();
  if (m < 2 || variances.size() != m) {
    throw ParameterError("rubin_pool: need at least two estimates with matching variances");
  }
  // Deviations from the first estimate, so coinciding estimates give B = 0 exactly.
  RubinPooled r;
  const double ref = estimates.front();
  double shift = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    shift += estimates[k] - ref;
    r.within += variances[k];
  }
  shift /= static_cast<double>(m);
  r.within /= static_cast<double>(m);
  r.estimate = ref + shift;
  for (double t : estimates) {
    const double d = (t - ref) - shift;
    r.between += d * d;
  }
  r.between /= static_cast<double>(m - 1);
  r.variance = r.within + (1.0 + 1.0 / static_cast<double>(m)) * r.between;
  return r;
}

// Within (mean of per-imputation covariances) and between (divisor M - 1)
// covariance of the PS parameters across M imputations.
struct MIVarianceInputs {
  CovMatrix within;
  CovMatrix between;
  Vector alpha_bar;
  int m = 0;
};

inline MIVarianceInputs mi_variance_inputs(const std::vector<Vector>& alphas, const std::vector<CovMatrix>& covs) {
  const std::size_t m = alphas.size();
  if (m < 2 || covs.size() != m) {
    throw ParameterError("mi_variance_inputs: need at least two imputations with matching covariances");
  }
  const auto p = alphas.front().size();
  MIVarianceInputs in;
  in.m = static_cast<int>(m);
  in.alpha_bar = Vector::Zero(p);
  in.within = CovMatrix::Zero(p, p);
  for (std::size_t k = 0; k < m; ++k) {
    if (alphas[k].size() != p || covs[k].rows() != p || covs[k].cols() != p) {
      throw ParameterError("mi_variance_inputs: inconsistent parameter dimensions");
    }
    in.alpha_bar += alphas[k];
    in.within += covs[k];
  }
  in.alpha_bar /= static_cast<double>(m);
  in.within /= static_cast<double>(m);
  in.between = CovMatrix::Zero(p, p);
  for (const auto& a : alphas) {
    Vector d = a - in.alpha_bar;
    in.between += d * d.transpose();
  }
  in.between /= static_cast<double>(m - 1);
  return in;
}

}  // namespace iptwmi
