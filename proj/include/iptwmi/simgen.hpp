#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "iptwmi/dataset.hpp"
#include "iptwmi/errors.hpp"
#include "iptwmi/linalg.hpp"
#include "iptwmi/rng.hpp"

namespace iptwmi {

// logit P(Z = 1 | x) = -1.15 + 0.7 x1 + 0.6 x2 + 0.6 x3
inline constexpr double kTreatmentCoef[4] = {-1.15, 0.7, 0.6, 0.6};
// logit P(Y = 1 | z, x) = -1.5 + 0.5 x1 + 0.5 x2 + 0.3 x3 + theta_c z
inline constexpr double kOutcomeCoef[4] = {-1.5, 0.5, 0.5, 0.3};

inline constexpr double kMcarYzRate = 0.30;

enum class Variant { Base, MissYzMcar, Rate10, Rate60, N500 };

inline const char* to_string(Variant v) {
  switch (v) {
    case Variant::Base:
      return "BASE";
    case Variant::MissYzMcar:
      return "MISS_YZ_MCAR";
    case Variant::Rate10:
      return "RATE_10";
    case Variant::Rate60:
      return "RATE_60";
    case Variant::N500:
      return "N_500";
  }
  return "?";
}

inline Variant variant_from_string(const std::string& s) {
  for (Variant v : {Variant::Base, Variant::MissYzMcar, Variant::Rate10, Variant::Rate60, Variant::N500}) {
    if (s == to_string(v)) {
      return v;
    }
  }
  throw InputError("unknown scenario variant '" + s + "'");
}

struct ScenarioConfig {
  std::string name;
  std::size_t n = 2000;
  double rho = 0.6;
  double target_rr = 2.0;
  std::optional<double> theta_c;  // calibrated when absent
  double gamma_y = -0.4;
  std::optional<double> gamma_0;  // resolved from the missingness-rate target when absent
  double missing_rate_target = 0.30;
  bool include_outcome = true;
  int m = 10;
  int cycles = 10;
  int reps = 500;
  std::uint64_t seed = 20170101;
  Variant variant = Variant::Base;
  std::size_t calibration_draws = 10'000'000;
};

struct ScenarioTruth {
  double log_rr = 0.0;
  double log_or = 0.0;
  double rd = 0.0;
  double mu1 = 0.0;
  double mu0 = 0.0;
};

// ---------------------------------------------------------------------------
// JSON schema: the ScenarioConfig fields; unknown keys are rejected.

inline void to_json(nlohmann::json& j, const ScenarioConfig& c) {
  j = nlohmann::json{{"name", c.name},
                     {"n", c.n},
                     {"rho", c.rho},
                     {"target_rr", c.target_rr},
                     {"gamma_y", c.gamma_y},
                     {"missing_rate_target", c.missing_rate_target},
                     {"include_outcome", c.include_outcome},
                     {"M", c.m},
                     {"cycles", c.cycles},
                     {"reps", c.reps},
                     {"seed", c.seed},
                     {"variant", to_string(c.variant)},
                     {"calibration_draws", c.calibration_draws}};
  j["theta_c"] = c.theta_c ? nlohmann::json(*c.theta_c) : nlohmann::json(nullptr);
  j["gamma_0"] = c.gamma_0 ? nlohmann::json(*c.gamma_0) : nlohmann::json(nullptr);
}

inline ScenarioConfig scenario_from_json(const nlohmann::json& j) {
  if (!j.is_object()) {
    throw InputError("scenario config must be a JSON object");
  }
  static const std::vector<std::string> known{"name",  "n",      "rho",     "target_rr",         "theta_c",
                                              "gamma_y", "gamma_0", "missing_rate_target", "include_outcome",
                                              "M",     "cycles", "reps",    "seed",              "variant",
                                              "calibration_draws"};
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::find(known.begin(), known.end(), it.key()) == known.end()) {
      throw InputError("scenario config: unknown key '" + it.key() + "'");
    }
  }
  ScenarioConfig c;
  try {
    if (j.contains("name")) c.name = j.at("name").get<std::string>();
    if (j.contains("n")) c.n = j.at("n").get<std::size_t>();
    if (j.contains("rho")) c.rho = j.at("rho").get<double>();
    if (j.contains("target_rr")) c.target_rr = j.at("target_rr").get<double>();
    if (j.contains("theta_c") && !j.at("theta_c").is_null()) c.theta_c = j.at("theta_c").get<double>();
    if (j.contains("gamma_y")) c.gamma_y = j.at("gamma_y").get<double>();
    if (j.contains("gamma_0") && !j.at("gamma_0").is_null()) c.gamma_0 = j.at("gamma_0").get<double>();
    if (j.contains("missing_rate_target")) c.missing_rate_target = j.at("missing_rate_target").get<double>();
    if (j.contains("include_outcome")) c.include_outcome = j.at("include_outcome").get<bool>();
    if (j.contains("M")) c.m = j.at("M").get<int>();
    if (j.contains("cycles")) c.cycles = j.at("cycles").get<int>();
    if (j.contains("reps")) c.reps = j.at("reps").get<int>();
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("variant")) c.variant = variant_from_string(j.at("variant").get<std::string>());
    if (j.contains("calibration_draws")) c.calibration_draws = j.at("calibration_draws").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("scenario config: ") + e.what());
  }
  if (c.n < 50 || !(c.rho > -0.5 && c.rho < 1.0) || c.target_rr < 1.0 || c.m < 2 || c.cycles < 1 || c.reps < 1 ||
      !(c.missing_rate_target > 0.0 && c.missing_rate_target < 1.0)) {
    throw InputError("scenario config: value out of range");
  }
  return c;
}

// One of the sixteen main scenarios: RR in {1, 2} x rho in {0.3, 0.6} x
// (outcome predicts missingness or not), with Y in the imputation model for
// 1-8 and excluded for 9-16.
inline ScenarioConfig main_scenario(int number) {
  if (number < 1 || number > 16) {
    throw InputError("scenario number must be in 1..16");
  }
  int k = (number - 1) % 8;
  ScenarioConfig c;
  c.name = "scenario" + std::to_string(number);
  c.target_rr = (k / 2) % 2 == 0 ? 1.0 : 2.0;
  c.rho = k < 4 ? 0.3 : 0.6;
  c.gamma_y = k % 2 == 0 ? -0.4 : 0.0;
  c.include_outcome = number <= 8;
  return c;
}

// ---------------------------------------------------------------------------
// Calibration

namespace detail {

// Outcome linear predictor without the treatment term, over covariate draws.
inline std::vector<double> outcome_linear_predictors(double rho, RngStream& rng, std::size_t draws) {
  std::vector<double> lin(draws);
  const std::size_t block = 1 << 16;
  for (std::size_t start = 0; start < draws; start += block) {
    std::size_t len = std::min(block, draws - start);
    Matrix x = mvn_sample(rng, len, rho);
    for (std::size_t i = 0; i < len; ++i) {
      double x3 = x(static_cast<Eigen::Index>(i), 2) > 0.0 ? 1.0 : 0.0;
      lin[start + i] = kOutcomeCoef[0] + kOutcomeCoef[1] * x(static_cast<Eigen::Index>(i), 0) +
                       kOutcomeCoef[2] * x(static_cast<Eigen::Index>(i), 1) + kOutcomeCoef[3] * x3;
    }
  }
  return lin;
}

inline double mean_expit(const std::vector<double>& lin, double shift) {
  double s = 0.0;
  for (double v : lin) {
    s += expit(v + shift);
  }
  return s / static_cast<double>(lin.size());
}

inline double calibrate_on(const std::vector<double>& lin, double target_rr, double tol) {
  if (target_rr == 1.0) {
    return 0.0;
  }
  const double mu0 = mean_expit(lin, 0.0);
  auto rr = [&](double theta) { return mean_expit(lin, theta) / mu0; };
  double lo = 0.0;
  double hi = 10.0;
  if (rr(hi) < target_rr) {
    throw ParameterError("calibrate_theta_c: target RR not reachable (bracket failure)");
  }
  double mid = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    mid = 0.5 * (lo + hi);
    double r = rr(mid);
    if (std::abs(r - target_rr) < tol) {
      break;
    }
    (r < target_rr ? lo : hi) = mid;
  }
  return mid;
}

inline ScenarioTruth truth_on(const std::vector<double>& lin, double theta_c) {
  ScenarioTruth t;
  t.mu0 = mean_expit(lin, 0.0);
  t.mu1 = theta_c == 0.0 ? t.mu0 : mean_expit(lin, theta_c);
  t.log_rr = std::log(t.mu1 / t.mu0);
  t.log_or = std::log(t.mu1 / (1.0 - t.mu1)) - std::log(t.mu0 / (1.0 - t.mu0));
  t.rd = t.mu1 - t.mu0;
  return t;
}

}  // namespace detail

// theta_c such that the marginal RR E[expit(lin + theta)] / E[expit(lin)]
// over simulated covariates hits target_rr (bisection, tolerance on the RR).
inline double calibrate_theta_c(double rho, double target_rr, RngStream& rng, std::size_t n_mc = 10'000'000,
                                double tol = 1e-3) {
  if (target_rr < 1.0) {
    throw ParameterError("calibrate_theta_c: target RR must be at least 1");
  }
  if (target_rr == 1.0) {
    return 0.0;
  }
  auto lin = detail::outcome_linear_predictors(rho, rng, n_mc);
  return detail::calibrate_on(lin, target_rr, tol);
}

// Marginal potential-outcome means and the three true contrasts.
inline ScenarioTruth truth_for(double rho, double theta_c, RngStream& rng, std::size_t n_mc = 10'000'000) {
  auto lin = detail::outcome_linear_predictors(rho, rng, n_mc);
  return detail::truth_on(lin, theta_c);
}

// gamma_0 such that the marginal probability of missingness
// E[expit(gamma_0 + z + x2 + gamma_y y)] equals rate_target.
inline double solve_gamma0(double rate_target, double gamma_y, double rho, double theta_c, RngStream& rng,
                           std::size_t n_mc = 1'000'000) {
  if (!(rate_target > 0.0 && rate_target < 1.0)) {
    throw ParameterError("solve_gamma0: rate must lie in (0, 1)");
  }
  std::vector<double> offset(n_mc);
  const std::size_t block = 1 << 16;
  for (std::size_t start = 0; start < n_mc; start += block) {
    std::size_t len = std::min(block, n_mc - start);
    Matrix x = mvn_sample(rng, len, rho);
    for (std::size_t i = 0; i < len; ++i) {
      const auto r = static_cast<Eigen::Index>(i);
      double x3 = x(r, 2) > 0.0 ? 1.0 : 0.0;
      double z = rng.bernoulli(expit(kTreatmentCoef[0] + kTreatmentCoef[1] * x(r, 0) + kTreatmentCoef[2] * x(r, 1) +
                                     kTreatmentCoef[3] * x3))
                     ? 1.0
                     : 0.0;
      double y = rng.bernoulli(expit(kOutcomeCoef[0] + kOutcomeCoef[1] * x(r, 0) + kOutcomeCoef[2] * x(r, 1) +
                                     kOutcomeCoef[3] * x3 + theta_c * z))
                     ? 1.0
                     : 0.0;
      offset[start + i] = z + x(r, 1) + gamma_y * y;
    }
  }
  double lo = -30.0;
  double hi = 30.0;
  if (detail::mean_expit(offset, lo) > rate_target || detail::mean_expit(offset, hi) < rate_target) {
    throw ParameterError("solve_gamma0: bracket failure");
  }
  for (int it = 0; it < 100 && hi - lo > 1e-7; ++it) {
    double mid = 0.5 * (lo + hi);
    (detail::mean_expit(offset, mid) < rate_target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// Config with theta_c, gamma_0, n and the rate target made explicit.
struct ResolvedScenario {
  ScenarioConfig config;
  ScenarioTruth truth;
};

inline ResolvedScenario resolve(ScenarioConfig c) {
  if (c.variant == Variant::N500) {
    c.n = 500;
  } else if (c.variant == Variant::Rate10) {
    c.missing_rate_target = 0.10;
  } else if (c.variant == Variant::Rate60) {
    c.missing_rate_target = 0.60;
  }
  RngStream calib(c.seed ^ 0x5ca1ab1eULL, 0xca11b);
  auto lin = detail::outcome_linear_predictors(c.rho, calib, c.calibration_draws);
  if (!c.theta_c) {
    c.theta_c = detail::calibrate_on(lin, c.target_rr, 1e-3);
  }
  if (!c.gamma_0) {
    const bool published_pair = std::abs(c.missing_rate_target - 0.30) < 1e-12;
    if (published_pair && c.gamma_y == 0.0) {
      c.gamma_0 = -1.5;
    } else if (published_pair && std::abs(c.gamma_y + 0.4) < 1e-12) {
      c.gamma_0 = -1.3;
    } else {
      RngStream g(c.seed ^ 0x9a33a0ULL, 0x6a33a);
      c.gamma_0 = solve_gamma0(c.missing_rate_target, c.gamma_y, c.rho, *c.theta_c, g);
    }
  }
  ResolvedScenario r;
  r.truth = detail::truth_on(lin, *c.theta_c);
  r.config = c;
  return r;
}

// ---------------------------------------------------------------------------
// Data generation

struct GeneratedData {
  Dataset full;      // before missingness is imposed
  Dataset observed;  // X1, X3 masked where R1, R3 = 1 (and Y, Z for MISS_YZ_MCAR)
};

inline GeneratedData generate(const ScenarioConfig& c, RngStream& rng) {
  if (!c.theta_c || !c.gamma_0) {
    throw ParameterError("generate: config must be resolved (theta_c and gamma_0 set)");
  }
  const std::size_t n = c.variant == Variant::N500 ? 500 : c.n;
  const double theta = *c.theta_c;
  const double g0 = *c.gamma_0;
  Matrix x = mvn_sample(rng, n, c.rho);

  GeneratedData out;
  Dataset& d = out.full;
  d.outcome = {"Y", ColumnKind::Binary, std::vector<double>(n)};
  d.treatment = {"Z", ColumnKind::Binary, std::vector<double>(n)};
  d.covariates = {{"X1", ColumnKind::Continuous, std::vector<double>(n)},
                  {"X2", ColumnKind::Continuous, std::vector<double>(n)},
                  {"X3", ColumnKind::Binary, std::vector<double>(n)}};
  std::vector<std::uint8_t> r1(n);
  std::vector<std::uint8_t> r3(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    double x1 = x(row, 0);
    double x2 = x(row, 1);
    double x3 = x(row, 2) > 0.0 ? 1.0 : 0.0;
    double z = rng.bernoulli(
                   expit(kTreatmentCoef[0] + kTreatmentCoef[1] * x1 + kTreatmentCoef[2] * x2 + kTreatmentCoef[3] * x3))
                   ? 1.0
                   : 0.0;
    double y = rng.bernoulli(expit(kOutcomeCoef[0] + kOutcomeCoef[1] * x1 + kOutcomeCoef[2] * x2 +
                                   kOutcomeCoef[3] * x3 + theta * z))
                   ? 1.0
                   : 0.0;
    double p_miss = expit(g0 + z + x2 + c.gamma_y * y);
    r1[i] = rng.bernoulli(p_miss) ? 1 : 0;
    r3[i] = rng.bernoulli(p_miss) ? 1 : 0;
    d.covariates[0].values[i] = x1;
    d.covariates[1].values[i] = x2;
    d.covariates[2].values[i] = x3;
    d.treatment.values[i] = z;
    d.outcome.values[i] = y;
  }
  out.observed = d;
  for (std::size_t i = 0; i < n; ++i) {
    if (r1[i]) out.observed.covariates[0].values[i] = kMissing;
    if (r3[i]) out.observed.covariates[2].values[i] = kMissing;
  }
  if (c.variant == Variant::MissYzMcar) {
    for (std::size_t i = 0; i < n; ++i) {
      if (rng.bernoulli(kMcarYzRate)) out.observed.outcome.values[i] = kMissing;
      if (rng.bernoulli(kMcarYzRate)) out.observed.treatment.values[i] = kMissing;
    }
  }
  return out;
}

}  // namespace iptwmi
