#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "iptwmi/dataset.hpp"
#include "iptwmi/errors.hpp"
#include "iptwmi/glm.hpp"
#include "iptwmi/rng.hpp"

namespace iptwmi {

struct ImputationConfig {
  int m = 10;
  int cycles = 10;
  bool include_outcome = true;
  RngStream rng{};
  bool pmm = false;  // predictive mean matching for continuous columns
  int pmm_donors = 5;
  int max_separation_retries = 5;
  IrlsOptions irls{};
};

// M completed copies of a dataset. Observed cells are identical in every copy.
struct ImputationSet {
  std::vector<Dataset> completed;
  ImputationConfig config;

  std::size_t size() const { return completed.size(); }
};

namespace detail {

// Column-major working table for one chain: covariates, then Z, then Y.
class ChainTable {
 public:
  explicit ChainTable(const Dataset& d) : n_(d.rows()) {
    for (const auto& c : d.covariates) {
      cols_.push_back(&c);
    }
    cols_.push_back(&d.treatment);
    cols_.push_back(&d.outcome);
    values_.resize(n_, cols_.size());
    observed_rows_.resize(cols_.size());
    missing_rows_.resize(cols_.size());
    for (std::size_t j = 0; j < cols_.size(); ++j) {
      for (std::size_t i = 0; i < n_; ++i) {
        double v = cols_[j]->values[i];
        values_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
        (is_missing(v) ? missing_rows_[j] : observed_rows_[j]).push_back(i);
      }
    }
  }

  std::size_t vars() const { return cols_.size(); }
  std::size_t outcome_index() const { return cols_.size() - 1; }
  std::size_t treatment_index() const { return cols_.size() - 2; }
  ColumnKind kind(std::size_t j) const { return cols_[j]->kind; }
  const std::string& name(std::size_t j) const { return cols_[j]->name; }
  const std::vector<std::size_t>& observed(std::size_t j) const { return observed_rows_[j]; }
  const std::vector<std::size_t>& missing(std::size_t j) const { return missing_rows_[j]; }
  Matrix& values() { return values_; }
  const Matrix& values() const { return values_; }

  double& at(std::size_t i, std::size_t j) {
    return values_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }

  // Fill the missing cells of column j with draws from its observed values.
  void draw_from_marginal(std::size_t j, RngStream& rng) {
    const auto& obs = observed_rows_[j];
    for (auto i : missing_rows_[j]) {
      at(i, j) = cols_[j]->values[obs[rng.index(obs.size())]];
    }
  }

  Matrix design(const std::vector<std::size_t>& rows, const std::vector<std::size_t>& predictors) const {
    Matrix x(rows.size(), predictors.size() + 1);
    x.col(0).setOnes();
    for (std::size_t r = 0; r < rows.size(); ++r) {
      for (std::size_t k = 0; k < predictors.size(); ++k) {
        x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k + 1)) =
            values_(static_cast<Eigen::Index>(rows[r]), static_cast<Eigen::Index>(predictors[k]));
      }
    }
    return x;
  }

  Vector column(const std::vector<std::size_t>& rows, std::size_t j) const {
    Vector v(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      v(static_cast<Eigen::Index>(r)) = values_(static_cast<Eigen::Index>(rows[r]), static_cast<Eigen::Index>(j));
    }
    return v;
  }

  Dataset to_dataset(const Dataset& like) const {
    Dataset out = like;
    for (std::size_t j = 0; j < cols_.size(); ++j) {
      Column* c = j < like.covariates.size() ? &out.covariates[j]
                  : j == treatment_index()   ? &out.treatment
                                             : &out.outcome;
      for (auto i : missing_rows_[j]) {
        c->values[i] = values_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      }
    }
    return out;
  }

 private:
  std::size_t n_;
  std::vector<const Column*> cols_;
  Matrix values_;
  std::vector<std::vector<std::size_t>> observed_rows_;
  std::vector<std::vector<std::size_t>> missing_rows_;
};

inline std::vector<std::size_t> imputation_predictors(const ChainTable& t, std::size_t target, bool include_outcome) {
  std::vector<std::size_t> p;
  for (std::size_t j = 0; j < t.vars(); ++j) {
    if (j == target) {
      continue;
    }
    if (j == t.outcome_index() && !include_outcome) {
      continue;
    }
    p.push_back(j);
  }
  return p;
}

inline void impute_continuous(ChainTable& t, std::size_t target, const std::vector<std::size_t>& predictors,
                              const ImputationConfig& cfg, RngStream& rng) {
  Matrix x_obs = t.design(t.observed(target), predictors);
  Vector y_obs = t.column(t.observed(target), target);
  LinearDraw draw = fit_linear_bayes_draw(x_obs, y_obs, rng);
  Matrix x_mis = t.design(t.missing(target), predictors);
  Vector mean = x_mis * draw.coefficients;
  if (!cfg.pmm) {
    for (std::size_t r = 0; r < t.missing(target).size(); ++r) {
      t.at(t.missing(target)[r], target) = mean(static_cast<Eigen::Index>(r)) + draw.sigma * rng.normal();
    }
    return;
  }
  // Type-1 matching: observed rows predicted at beta_hat, missing rows at the drawn beta.
  GlmFit ols = fit_linear(x_obs, y_obs);
  Vector pred_obs = x_obs * ols.coefficients;
  const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(std::max(cfg.pmm_donors, 1)),
                                              static_cast<std::size_t>(pred_obs.size()));
  std::vector<std::size_t> order(static_cast<std::size_t>(pred_obs.size()));
  for (std::size_t r = 0; r < t.missing(target).size(); ++r) {
    double target_mean = mean(static_cast<Eigen::Index>(r));
    for (std::size_t q = 0; q < order.size(); ++q) {
      order[q] = q;
    }
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                      [&](std::size_t a, std::size_t b) {
                        return std::abs(pred_obs(static_cast<Eigen::Index>(a)) - target_mean) <
                               std::abs(pred_obs(static_cast<Eigen::Index>(b)) - target_mean);
                      });
    std::size_t donor = order[rng.index(k)];
    t.at(t.missing(target)[r], target) = y_obs(static_cast<Eigen::Index>(donor));
  }
}

inline void impute_binary(ChainTable& t, std::size_t target, const std::vector<std::size_t>& predictors,
                          const ImputationConfig& cfg, RngStream& rng, Vector& warm_start) {
  Matrix x_obs = t.design(t.observed(target), predictors);
  Vector y_obs = t.column(t.observed(target), target);
  GlmFit fit;
  for (int attempt = 0;; ++attempt) {
    try {
      fit = fit_logistic(x_obs, y_obs, cfg.irls, warm_start.size() == x_obs.cols() ? &warm_start : nullptr);
      if (!fit.converged) {
        throw SeparationError("logistic imputation model did not converge");
      }
      break;
    } catch (const SeparationError& e) {
      if (attempt >= cfg.max_separation_retries) {
        throw StrategyFailure("impute: conditional model for '" + t.name(target) + "' failed after " +
                              std::to_string(attempt + 1) + " attempts: " + e.what());
      }
      // Re-draw the current imputations of the partially observed predictors and refit.
      for (auto j : predictors) {
        if (!t.missing(j).empty()) {
          t.draw_from_marginal(j, rng);
        }
      }
      x_obs = t.design(t.observed(target), predictors);
      warm_start.resize(0);
    }
  }
  warm_start = fit.coefficients;
  Vector alpha = logistic_posterior_draw(fit, rng);
  Matrix x_mis = t.design(t.missing(target), predictors);
  Vector prob = expit(x_mis * alpha);
  for (std::size_t r = 0; r < t.missing(target).size(); ++r) {
    t.at(t.missing(target)[r], target) = rng.bernoulli(prob(static_cast<Eigen::Index>(r))) ? 1.0 : 0.0;
  }
}

}  // namespace detail

// Multiple imputation by chained equations. Each of the M chains uses its own
// sub-stream of cfg.rng: missing cells start as draws from the observed
// marginal, then `cycles` sweeps visit the partially observed columns in
// declaration order (covariates, then Z, then Y). Continuous columns use a
// Bayesian normal linear model, binary columns a logistic model with a
// normal-approximation posterior draw. Predictors are all other columns,
// with Y included only when cfg.include_outcome is set.
inline ImputationSet impute(const Dataset& data, const ImputationConfig& cfg) {
  if (cfg.m < 2) {
    throw ParameterError("impute: M must be at least 2");
  }
  if (cfg.cycles < 1) {
    throw ParameterError("impute: cycles must be at least 1");
  }
  data.validate();
  ImputationSet set;
  set.config = cfg;

  detail::ChainTable proto(data);
  std::vector<std::size_t> visit;
  bool any_complete = false;
  for (std::size_t j = 0; j < proto.vars(); ++j) {
    if (!proto.missing(j).empty()) {
      visit.push_back(j);
      std::size_t q = detail::imputation_predictors(proto, j, cfg.include_outcome).size();
      if (proto.observed(j).size() < q + 2) {
        throw ParameterError("impute: column '" + proto.name(j) + "' has too few observed rows");
      }
    } else {
      any_complete = true;
    }
  }
  if (visit.empty()) {
    set.completed.assign(static_cast<std::size_t>(cfg.m), data);
    return set;
  }
  if (!any_complete) {
    throw ParameterError("impute: at least one fully observed column is required");
  }

  for (int k = 0; k < cfg.m; ++k) {
    RngStream rng = cfg.rng.substream(static_cast<std::uint64_t>(k));
    detail::ChainTable table = proto;
    for (auto j : visit) {
      table.draw_from_marginal(j, rng);
    }
    std::vector<Vector> warm(table.vars());
    for (int cycle = 0; cycle < cfg.cycles; ++cycle) {
      for (auto j : visit) {
        auto predictors = detail::imputation_predictors(table, j, cfg.include_outcome);
        if (table.kind(j) == ColumnKind::Binary) {
          detail::impute_binary(table, j, predictors, cfg, rng, warm[j]);
        } else {
          detail::impute_continuous(table, j, predictors, cfg, rng);
        }
      }
    }
    set.completed.push_back(table.to_dataset(data));
  }
  return set;
}

}  // namespace iptwmi
