#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "iptwmi/dataset.hpp"
#include "iptwmi/errors.hpp"
#include "iptwmi/iptw.hpp"
#include "iptwmi/mice.hpp"

namespace iptwmi {

enum class Strategy { Crude, Full, CC, MP, MIte, MIps, MIpar };

inline constexpr std::array<Strategy, 7> kAllStrategies{Strategy::Crude, Strategy::Full, Strategy::CC,
                                                        Strategy::MP,    Strategy::MIte, Strategy::MIps,
                                                        Strategy::MIpar};

inline const char* to_string(Strategy s) {
  switch (s) {
    case Strategy::Crude:
      return "Crude";
    case Strategy::Full:
      return "Full";
    case Strategy::CC:
      return "CC";
    case Strategy::MP:
      return "MP";
    case Strategy::MIte:
      return "MIte";
    case Strategy::MIps:
      return "MIps";
    case Strategy::MIpar:
      return "MIpar";
  }
  return "?";
}

inline Strategy strategy_from_string(const std::string& s) {
  std::string lower;
  for (char c : s) {
    lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  for (Strategy st : kAllStrategies) {
    std::string name = to_string(st);
    std::transform(name.begin(), name.end(), name.begin(), [](unsigned char c) { return std::tolower(c); });
    if (name == lower) {
      return st;
    }
  }
  throw InputError("unknown strategy '" + s + "'");
}

inline std::size_t measure_index(EffectMeasure m) { return static_cast<std::size_t>(m); }

// Every variance flavour computed for one measure; NaN where not applicable.
//   uncorrected  : PS treated as known, no imputation
//   ps_corrected : accounts for PS estimation
//   mi_only      : Rubin's rules with uncorrected within-imputation variances
//   ps_plus_mi   : accounts for both
struct VarianceSet {
  double uncorrected = std::numeric_limits<double>::quiet_NaN();
  double ps_corrected = std::numeric_limits<double>::quiet_NaN();
  double mi_only = std::numeric_limits<double>::quiet_NaN();
  double ps_plus_mi = std::numeric_limits<double>::quiet_NaN();
};

struct ImputationRecord {
  Vector alpha;
  CovMatrix alpha_cov;
  Vector scores;
  std::array<double, 3> estimates{};
  std::array<double, 3> variances{};  // PS-corrected
};

struct StrategyResult {
  Strategy strategy = Strategy::Full;
  std::array<EffectEstimate, 3> estimates{};
  std::array<VarianceSet, 3> variances{};
  std::size_t sample_size = 0;
  std::vector<std::size_t> rows;  // analysed rows of the input (all rows unless CC)
  Vector scores;                  // scores used for weighting, aligned with `rows`
  std::vector<ImputationRecord> per_imputation;
  std::vector<int> stratum;                               // MP: merged stratum per row
  std::vector<std::vector<std::uint8_t>> stratum_masks;  // MP: covariate missing flags per stratum
  std::vector<std::string> warnings;

  const EffectEstimate& estimate(EffectMeasure m) const { return estimates[measure_index(m)]; }
};

struct StrategyOptions {
  PsOptions ps{};
  std::size_t min_cc_rows = 50;
  std::size_t min_stratum = 50;
};

namespace detail {

inline void require_observed_yz(const Dataset& d, const char* who) {
  if (!d.outcome.fully_observed() || !d.treatment.fully_observed()) {
    throw StrategyFailure(std::string(who) + ": outcome and treatment must be fully observed");
  }
}

inline void note_clamp(StrategyResult& r, const VarianceValue& v, EffectMeasure m, const char* what) {
  if (v.clamped) {
    r.warnings.push_back(std::string(what) + " variance for " + to_string(m) + " was negative; clamped to 0");
  }
}

inline std::vector<std::size_t> all_rows(std::size_t n) {
  std::vector<std::size_t> r(n);
  for (std::size_t i = 0; i < n; ++i) {
    r[i] = i;
  }
  return r;
}

// Estimate PS on complete data, weight, and compute V_un and V_PS.
inline StrategyResult iptw_pipeline(const Dataset& d, Strategy tag, const StrategyOptions& opts) {
  d.validate();
  if (d.any_missing()) {
    throw StrategyFailure(std::string(to_string(tag)) + ": data contain missing cells");
  }
  Matrix x = design_matrix(d);
  Vector y = to_vector(d.outcome);
  Vector z = to_vector(d.treatment);
  FittedPS ps;
  try {
    ps = estimate_ps(x, z, opts.ps);
  } catch (const SeparationError& e) {
    throw StrategyFailure(std::string(to_string(tag)) + ": " + e.what());
  } catch (const EstimationError& e) {
    throw StrategyFailure(std::string(to_string(tag)) + ": " + e.what());
  }
  MarginalMeans mm = iptw_means(y, z, ps.scores);
  StrategyResult r;
  r.strategy = tag;
  r.sample_size = d.rows();
  r.rows = all_rows(d.rows());
  r.scores = ps.scores;
  r.warnings = mm.warnings;
  for (EffectMeasure m : kAllMeasures) {
    auto& vs = r.variances[measure_index(m)];
    vs.uncorrected = var_uncorrected(y, z, ps.scores, mm.mu1, mm.mu0, m);
    VarianceValue vps = var_ps_corrected(y, z, x, ps.scores, ps.alpha_cov, mm.mu1, mm.mu0, m);
    note_clamp(r, vps, m, "PS-corrected");
    vs.ps_corrected = vps.value;
    r.estimates[measure_index(m)] = make_estimate(m, mm.mu1, mm.mu0, vs.ps_corrected, VarianceFlavor::PsCorrected);
  }
  return r;
}

}  // namespace detail

// Unweighted comparison of the arms (no confounding adjustment).
inline StrategyResult analyze_crude(const Dataset& d) {
  detail::require_observed_yz(d, "analyze_crude");
  Vector y = to_vector(d.outcome);
  Vector z = to_vector(d.treatment);
  require_both_arms(z, "analyze_crude");
  Vector scores = Vector::Constant(z.size(), z.mean());
  MarginalMeans mm = iptw_means(y, z, scores);
  StrategyResult r;
  r.strategy = Strategy::Crude;
  r.sample_size = d.rows();
  r.rows = detail::all_rows(d.rows());
  r.scores = scores;
  for (EffectMeasure m : kAllMeasures) {
    auto& vs = r.variances[measure_index(m)];
    vs.uncorrected = var_uncorrected(y, z, scores, mm.mu1, mm.mu0, m);
    r.estimates[measure_index(m)] = make_estimate(m, mm.mu1, mm.mu0, vs.uncorrected, VarianceFlavor::Uncorrected);
  }
  return r;
}

// IPTW on the pre-deletion data (simulation only).
inline StrategyResult analyze_full(const Dataset& full, const StrategyOptions& opts = {}) {
  return detail::iptw_pipeline(full, Strategy::Full, opts);
}

// IPTW restricted to rows with every modelled variable observed.
inline StrategyResult analyze_cc(const Dataset& d, const StrategyOptions& opts = {}) {
  std::vector<std::size_t> rows = d.complete_rows(true);
  Dataset cc = d.subset(rows);
  double treated = 0.0;
  for (double v : cc.treatment.values) {
    treated += v;
  }
  const auto n_cc = static_cast<double>(cc.rows());
  if (cc.rows() < opts.min_cc_rows || treated < 1.0 || n_cc - treated < 1.0) {
    throw StrategyFailure("CC: only " + std::to_string(cc.rows()) + " complete rows (minimum " +
                          std::to_string(opts.min_cc_rows) + ", both arms required)");
  }
  StrategyResult r = detail::iptw_pipeline(cc, Strategy::CC, opts);
  r.rows = rows;
  return r;
}

// Generalized propensity score: a separate PS model per missingness pattern,
// using the covariates observed in that pattern. Patterns smaller than
// opts.min_stratum (or missing an arm) are merged into the nearest pattern
// with a superset of missing columns. Variance is the uncorrected form.
inline StrategyResult analyze_mp(const Dataset& d, const StrategyOptions& opts = {}) {
  d.validate();
  detail::require_observed_yz(d, "MP");
  const std::size_t n = d.rows();
  const std::size_t p = d.covariates.size();
  Vector y = to_vector(d.outcome);
  Vector z = to_vector(d.treatment);

  struct Stratum {
    std::vector<std::uint8_t> mask;
    std::vector<std::size_t> rows;
  };
  std::vector<Stratum> strata;
  {
    std::map<std::vector<std::uint8_t>, std::size_t> index;
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<std::uint8_t> key(p);
      for (std::size_t j = 0; j < p; ++j) {
        key[j] = d.covariates[j].missing(i) ? 1 : 0;
      }
      auto it = index.find(key);
      if (it == index.end()) {
        index.emplace(key, strata.size());
        strata.push_back({key, {i}});
      } else {
        strata[it->second].rows.push_back(i);
      }
    }
  }
  auto valid = [&](const Stratum& s) {
    if (s.rows.size() < opts.min_stratum) {
      return false;
    }
    double t = 0.0;
    for (auto i : s.rows) {
      t += z(static_cast<Eigen::Index>(i));
    }
    return t >= 1.0 && t <= static_cast<double>(s.rows.size()) - 1.0;
  };
  auto superset = [](const std::vector<std::uint8_t>& big, const std::vector<std::uint8_t>& small) {
    for (std::size_t j = 0; j < big.size(); ++j) {
      if (small[j] && !big[j]) {
        return false;
      }
    }
    return true;
  };
  auto count = [](const std::vector<std::uint8_t>& m) {
    return static_cast<int>(std::count(m.begin(), m.end(), std::uint8_t{1}));
  };
  for (;;) {
    std::size_t worst = strata.size();
    for (std::size_t s = 0; s < strata.size(); ++s) {
      if (!valid(strata[s]) && (worst == strata.size() || strata[s].rows.size() < strata[worst].rows.size())) {
        worst = s;
      }
    }
    if (worst == strata.size()) {
      break;
    }
    if (strata.size() == 1) {
      throw StrategyFailure("MP: strata too sparse to merge into a usable generalized PS");
    }
    const auto& src = strata[worst];
    std::size_t best = strata.size();
    int best_key = std::numeric_limits<int>::max();
    for (std::size_t s = 0; s < strata.size(); ++s) {
      if (s == worst) {
        continue;
      }
      const auto& cand = strata[s];
      int key;
      if (superset(cand.mask, src.mask)) {
        key = count(cand.mask) - count(src.mask);
      } else {
        int hamming = 0;
        for (std::size_t j = 0; j < p; ++j) {
          hamming += cand.mask[j] != src.mask[j] ? 1 : 0;
        }
        key = 1000 + hamming;
      }
      if (key < best_key || (key == best_key && cand.rows.size() > strata[best].rows.size())) {
        best_key = key;
        best = s;
      }
    }
    Stratum merged = strata[best];
    for (std::size_t j = 0; j < p; ++j) {
      merged.mask[j] = merged.mask[j] | src.mask[j];
    }
    merged.rows.insert(merged.rows.end(), src.rows.begin(), src.rows.end());
    std::sort(merged.rows.begin(), merged.rows.end());
    strata[best] = std::move(merged);
    strata.erase(strata.begin() + static_cast<std::ptrdiff_t>(worst));
  }

  StrategyResult r;
  r.strategy = Strategy::MP;
  r.sample_size = n;
  r.rows = detail::all_rows(n);
  r.scores = Vector::Zero(static_cast<Eigen::Index>(n));
  r.stratum.assign(n, -1);
  for (std::size_t s = 0; s < strata.size(); ++s) {
    const auto& st = strata[s];
    std::vector<std::size_t> cols;
    for (std::size_t j = 0; j < p; ++j) {
      if (!st.mask[j]) {
        cols.push_back(j);
      }
    }
    Dataset sub = d.subset(st.rows);
    Matrix x = cols.empty() ? Matrix(Matrix::Ones(static_cast<Eigen::Index>(st.rows.size()), 1))
                            : design_matrix(sub, cols);
    Vector zs = to_vector(sub.treatment);
    FittedPS ps;
    try {
      ps = estimate_ps(x, zs, opts.ps);
    } catch (const Error& e) {
      throw StrategyFailure(std::string("MP: stratum model failed: ") + e.what());
    }
    for (std::size_t r2 = 0; r2 < st.rows.size(); ++r2) {
      r.scores(static_cast<Eigen::Index>(st.rows[r2])) = ps.scores(static_cast<Eigen::Index>(r2));
      r.stratum[st.rows[r2]] = static_cast<int>(s);
    }
    r.stratum_masks.push_back(st.mask);
  }
  MarginalMeans mm = iptw_means(y, z, r.scores);
  r.warnings = mm.warnings;
  for (EffectMeasure m : kAllMeasures) {
    auto& vs = r.variances[measure_index(m)];
    vs.uncorrected = var_uncorrected(y, z, r.scores, mm.mu1, mm.mu0, m);
    r.estimates[measure_index(m)] = make_estimate(m, mm.mu1, mm.mu0, vs.uncorrected, VarianceFlavor::Uncorrected);
  }
  return r;
}

// ---------------------------------------------------------------------------
// Multiple-imputation strategies share the per-imputation PS fits.

struct MiAnalysis {
  const Dataset* original = nullptr;
  const ImputationSet* imputations = nullptr;
  std::vector<Matrix> designs;  // per imputation, intercept first
  std::vector<FittedPS> ps;
  Matrix avg_design;  // per-individual covariate averages (binary kept fractional)
  MIVarianceInputs mi;
};

inline MiAnalysis prepare_mi(const Dataset& original, const ImputationSet& set, const StrategyOptions& opts = {}) {
  if (set.size() < 2) {
    throw ParameterError("prepare_mi: need at least two imputed datasets");
  }
  MiAnalysis a;
  a.original = &original;
  a.imputations = &set;
  std::vector<Vector> alphas;
  std::vector<CovMatrix> covs;
  for (std::size_t k = 0; k < set.size(); ++k) {
    const Dataset& dk = set.completed[k];
    if (dk.any_missing()) {
      throw StrategyFailure("MI: imputed dataset " + std::to_string(k + 1) + " still has missing cells");
    }
    Matrix x = design_matrix(dk);
    Vector z = to_vector(dk.treatment);
    const Vector* start = a.ps.empty() ? nullptr : &a.ps.back().alpha;
    try {
      a.ps.push_back(estimate_ps(x, z, opts.ps, start));
    } catch (const Error& e) {
      throw StrategyFailure("MI: PS model failed in imputation " + std::to_string(k + 1) + ": " + e.what());
    }
    alphas.push_back(a.ps.back().alpha);
    covs.push_back(a.ps.back().alpha_cov);
    if (k == 0) {
      a.avg_design = x;
    } else {
      a.avg_design += x;
    }
    a.designs.push_back(std::move(x));
  }
  a.avg_design /= static_cast<double>(set.size());
  a.mi = mi_variance_inputs(alphas, covs);
  return a;
}

// Rubin's rules on the treatment effect: estimate, PS-correct and pool per imputation.
inline StrategyResult analyze_mite(const MiAnalysis& a) {
  const ImputationSet& set = *a.imputations;
  const std::size_t m = set.size();
  StrategyResult r;
  r.strategy = Strategy::MIte;
  r.sample_size = a.original->rows();
  r.rows = detail::all_rows(r.sample_size);
  std::array<std::vector<double>, 3> est;
  std::array<std::vector<double>, 3> var_ps;
  std::array<std::vector<double>, 3> var_un;
  double mu1_sum = 0.0;
  double mu0_sum = 0.0;
  Vector score_sum = Vector::Zero(static_cast<Eigen::Index>(r.sample_size));
  for (std::size_t k = 0; k < m; ++k) {
    const Dataset& dk = set.completed[k];
    Vector y = to_vector(dk.outcome);
    Vector z = to_vector(dk.treatment);
    const FittedPS& ps = a.ps[k];
    MarginalMeans mm = iptw_means(y, z, ps.scores);
    ImputationRecord rec;
    rec.alpha = ps.alpha;
    rec.alpha_cov = ps.alpha_cov;
    rec.scores = ps.scores;
    for (EffectMeasure meas : kAllMeasures) {
      const auto q = measure_index(meas);
      double theta;
      try {
        theta = effect(mm.mu1, mm.mu0, meas);
      } catch (const DomainError& e) {
        throw StrategyFailure(std::string("MIte: imputation ") + std::to_string(k + 1) + ": " + e.what());
      }
      VarianceValue vps = var_ps_corrected(y, z, a.designs[k], ps.scores, ps.alpha_cov, mm.mu1, mm.mu0, meas);
      detail::note_clamp(r, vps, meas, "MIte within-imputation");
      est[q].push_back(theta);
      var_ps[q].push_back(vps.value);
      var_un[q].push_back(var_uncorrected(y, z, ps.scores, mm.mu1, mm.mu0, meas));
      rec.estimates[q] = theta;
      rec.variances[q] = vps.value;
    }
    mu1_sum += mm.mu1;
    mu0_sum += mm.mu0;
    score_sum += ps.scores;
    r.per_imputation.push_back(std::move(rec));
  }
  r.scores = score_sum / static_cast<double>(m);
  for (EffectMeasure meas : kAllMeasures) {
    const auto q = measure_index(meas);
    RubinPooled with_ps = rubin_pool(est[q], var_ps[q]);
    RubinPooled without_ps = rubin_pool(est[q], var_un[q]);
    auto& vs = r.variances[q];
    vs.mi_only = without_ps.variance;
    vs.ps_plus_mi = with_ps.variance;
    vs.uncorrected = without_ps.within;
    vs.ps_corrected = with_ps.within;
    r.estimates[q] = make_pooled_estimate(meas, with_ps.estimate, with_ps.variance, VarianceFlavor::PsPlusMi,
                                          mu1_sum / static_cast<double>(m), mu0_sum / static_cast<double>(m));
  }
  return r;
}

namespace detail {

// Single IPTW estimate with pooled scores; V_PS uses W, V_PS+m the MI-adjusted form.
inline StrategyResult pooled_score_estimate(const MiAnalysis& a, Strategy tag, const Vector& scores) {
  const Dataset& d = *a.original;
  require_observed_yz(d, to_string(tag));
  Vector y = to_vector(d.outcome);
  Vector z = to_vector(d.treatment);
  MarginalMeans mm = iptw_means(y, z, scores);
  StrategyResult r;
  r.strategy = tag;
  r.sample_size = d.rows();
  r.rows = all_rows(d.rows());
  r.scores = scores;
  r.warnings = mm.warnings;
  for (std::size_t k = 0; k < a.ps.size(); ++k) {
    ImputationRecord rec;
    rec.alpha = a.ps[k].alpha;
    rec.alpha_cov = a.ps[k].alpha_cov;
    rec.scores = a.ps[k].scores;
    r.per_imputation.push_back(std::move(rec));
  }
  for (EffectMeasure m : kAllMeasures) {
    auto& vs = r.variances[measure_index(m)];
    vs.uncorrected = var_uncorrected(y, z, scores, mm.mu1, mm.mu0, m);
    VarianceValue vps = var_ps_corrected(y, z, a.avg_design, scores, a.mi.within, mm.mu1, mm.mu0, m);
    note_clamp(r, vps, m, "PS-corrected");
    vs.ps_corrected = vps.value;
    VarianceValue vpm =
        var_mipar(y, z, a.avg_design, scores, a.mi.within, a.mi.between, a.mi.m, mm.mu1, mm.mu0, m);
    note_clamp(r, vpm, m, "PS+MI");
    vs.ps_plus_mi = vpm.value;
    r.estimates[measure_index(m)] = make_estimate(m, mm.mu1, mm.mu0, vs.ps_plus_mi, VarianceFlavor::PsPlusMi);
  }
  return r;
}

}  // namespace detail

// Average each individual's PS across imputations, then one IPTW estimate.
inline StrategyResult analyze_mips(const MiAnalysis& a) {
  Vector avg = Vector::Zero(a.ps.front().scores.size());
  for (const auto& ps : a.ps) {
    avg += ps.scores;
  }
  avg /= static_cast<double>(a.ps.size());
  return detail::pooled_score_estimate(a, Strategy::MIps, avg);
}

// Average the PS parameters and the covariates, then score expit(x_bar * alpha_bar).
inline StrategyResult analyze_mipar(const MiAnalysis& a) {
  Vector scores = expit(a.avg_design * a.mi.alpha_bar);
  return detail::pooled_score_estimate(a, Strategy::MIpar, scores);
}

inline StrategyResult analyze_mite(const Dataset& d, const ImputationConfig& cfg, const StrategyOptions& opts = {}) {
  ImputationSet set = impute(d, cfg);
  return analyze_mite(prepare_mi(d, set, opts));
}

inline StrategyResult analyze_mips(const Dataset& d, const ImputationConfig& cfg, const StrategyOptions& opts = {}) {
  ImputationSet set = impute(d, cfg);
  return analyze_mips(prepare_mi(d, set, opts));
}

inline StrategyResult analyze_mipar(const Dataset& d, const ImputationConfig& cfg, const StrategyOptions& opts = {}) {
  ImputationSet set = impute(d, cfg);
  return analyze_mipar(prepare_mi(d, set, opts));
}

}  // namespace iptwmi
