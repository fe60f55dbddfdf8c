#include <gtest/gtest.h>

#include <cmath>

#include "iptwmi/simgen.hpp"
#include "iptwmi/strategies.hpp"
#include "support.hpp"

using namespace iptwmi;

namespace {

ResolvedScenario scenario(int number, std::size_t n = 2000) {
  ScenarioConfig c = main_scenario(number);
  c.n = n;
  c.calibration_draws = 500000;
  return resolve(c);
}

GeneratedData draw(const ResolvedScenario& rs, std::uint64_t seed) {
  RngStream rng(seed, 0);
  return generate(rs.config, rng);
}

ImputationConfig icfg(std::uint64_t seed, int m = 5) {
  ImputationConfig c;
  c.m = m;
  c.cycles = 5;
  c.rng = RngStream(seed, 1);
  return c;
}

void expect_same_estimates(const StrategyResult& a, const StrategyResult& b, double tol) {
  for (EffectMeasure m : kAllMeasures) {
    EXPECT_NEAR(a.estimate(m).estimate, b.estimate(m).estimate, tol) << to_string(m);
  }
}

void expect_consistent_measures(const StrategyResult& r) {
  const auto& e = r.estimates;
  const double mu1 = e[0].mu1, mu0 = e[0].mu0;
  EXPECT_DOUBLE_EQ(e[measure_index(EffectMeasure::LogRR)].estimate, std::log(mu1 / mu0));
  EXPECT_DOUBLE_EQ(e[measure_index(EffectMeasure::LogOR)].estimate,
                   std::log(mu1 / (1 - mu1)) - std::log(mu0 / (1 - mu0)));
  EXPECT_DOUBLE_EQ(e[measure_index(EffectMeasure::RD)].estimate, mu1 - mu0);
  for (const auto& x : e) {
    EXPECT_EQ(x.mu1, mu1);
    EXPECT_EQ(x.mu0, mu0);
  }
}

}  // namespace

TEST(StrategyNames, RoundTrip) {
  for (Strategy s : kAllStrategies) {
    EXPECT_EQ(strategy_from_string(to_string(s)), s);
  }
  EXPECT_EQ(strategy_from_string("mite"), Strategy::MIte);
  EXPECT_THROW(strategy_from_string("bogus"), InputError);
}

TEST(AnalyzeFull, HeadlineIsPsCorrected) {
  auto rs = scenario(7);
  auto g = draw(rs, 1);
  auto r = analyze_full(g.full);
  for (const auto& e : r.estimates) {
    EXPECT_EQ(e.variance_flavor, VarianceFlavor::PsCorrected);
  }
  EXPECT_EQ(r.sample_size, 2000u);
  expect_consistent_measures(r);
  EXPECT_THROW(analyze_full(g.observed), StrategyFailure);
}

TEST(AnalyzeFull, NullScenarioCentredOnZero) {
  auto rs = scenario(5);
  double sum = 0.0;
  const int reps = 100;
  for (int r = 0; r < reps; ++r) {
    sum += analyze_full(draw(rs, 100 + static_cast<std::uint64_t>(r)).full).estimate(EffectMeasure::LogRR).estimate;
  }
  EXPECT_NEAR(sum / reps, 0.0, 0.02);
}

TEST(AnalyzeFull, VarianceFlavoursMatchPublishedMagnitudes) {
  auto rs = scenario(7);
  const int reps = 200;
  double vun = 0.0, vps = 0.0, s = 0.0, ss = 0.0;
  for (int r = 0; r < reps; ++r) {
    auto res = analyze_full(draw(rs, 300 + static_cast<std::uint64_t>(r)).full);
    const auto q = measure_index(EffectMeasure::LogRR);
    vun += res.variances[q].uncorrected;
    vps += res.variances[q].ps_corrected;
    double e = res.estimates[q].estimate;
    s += e;
    ss += e * e;
  }
  vun /= reps;
  vps /= reps;
  const double emp = (ss - s * s / reps) / (reps - 1);
  EXPECT_NEAR(vun, 0.008, 0.001);
  EXPECT_NEAR(vps, 0.006, 0.001);
  EXPECT_LT(vps, vun);
  EXPECT_NEAR(vps / emp, 1.0, 0.3);
}

TEST(AnalyzeCrude, MatchesRawArmProportions) {
  auto rs = scenario(7, 1000);
  auto g = draw(rs, 2);
  auto r = analyze_crude(g.full);
  double y1 = 0, n1 = 0, y0 = 0, n0 = 0;
  for (std::size_t i = 0; i < g.full.rows(); ++i) {
    if (g.full.treatment.values[i] == 1.0) {
      y1 += g.full.outcome.values[i];
      ++n1;
    } else {
      y0 += g.full.outcome.values[i];
      ++n0;
    }
  }
  EXPECT_NEAR(r.estimates[0].mu1, y1 / n1, 1e-12);
  EXPECT_NEAR(r.estimates[0].mu0, y0 / n0, 1e-12);
  expect_consistent_measures(r);
}

TEST(AnalyzeCc, NoMissingDataEqualsFull) {
  auto rs = scenario(7);
  auto g = draw(rs, 3);
  auto cc = analyze_cc(g.full);
  auto full = analyze_full(g.full);
  expect_same_estimates(cc, full, 0.0);
  for (std::size_t q = 0; q < 3; ++q) {
    EXPECT_EQ(cc.variances[q].ps_corrected, full.variances[q].ps_corrected);
  }
  EXPECT_EQ(cc.sample_size, 2000u);
}

TEST(AnalyzeCc, UsesCompleteRowsOnly) {
  auto rs = scenario(7);
  auto g = draw(rs, 4);
  auto cc = analyze_cc(g.observed);
  EXPECT_LT(cc.sample_size, 2000u);
  EXPECT_EQ(cc.sample_size, g.observed.complete_rows().size());
  EXPECT_EQ(cc.rows, g.observed.complete_rows());
  expect_consistent_measures(cc);
}

TEST(AnalyzeCc, TooFewRowsIsStrategyFailure) {
  auto rs = scenario(7, 200);
  auto g = draw(rs, 5);
  Dataset d = g.observed;
  for (std::size_t i = 0; i < d.rows(); ++i) {
    if (i % 5 != 0) {
      d.covariates[0].values[i] = kMissing;
    }
  }
  EXPECT_THROW(analyze_cc(d), StrategyFailure);
  Dataset one_arm = g.full;
  for (std::size_t i = 0; i < one_arm.rows(); ++i) {
    if (one_arm.treatment.values[i] == 1.0) {
      one_arm.covariates[0].values[i] = kMissing;
    }
  }
  EXPECT_THROW(analyze_cc(one_arm), StrategyFailure);
}

TEST(AnalyzeMp, SinglePatternEqualsFull) {
  auto rs = scenario(7);
  auto g = draw(rs, 6);
  auto mp = analyze_mp(g.full);
  auto full = analyze_full(g.full);
  expect_same_estimates(mp, full, 1e-12);
  ASSERT_EQ(mp.stratum_masks.size(), 1u);
  for (const auto& e : mp.estimates) {
    EXPECT_EQ(e.variance_flavor, VarianceFlavor::Uncorrected);
  }
}

TEST(AnalyzeMp, StratumModelsOmitMissingCovariates) {
  auto rs = scenario(7);
  auto g = draw(rs, 7);
  auto mp = analyze_mp(g.observed);
  ASSERT_EQ(mp.stratum_masks.size(), 4u);
  expect_consistent_measures(mp);
  for (std::size_t s = 0; s < mp.stratum_masks.size(); ++s) {
    const auto& mask = mp.stratum_masks[s];
    testsupport::Mat x;
    std::vector<double> z;
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < g.observed.rows(); ++i) {
      if (mp.stratum[i] != static_cast<int>(s)) {
        continue;
      }
      std::vector<double> row{1.0};
      for (std::size_t j = 0; j < 3; ++j) {
        ASSERT_EQ(g.observed.covariates[j].missing(i), static_cast<bool>(mask[j]));
        if (!mask[j]) {
          row.push_back(g.observed.covariates[j].values[i]);
        }
      }
      x.push_back(row);
      z.push_back(g.observed.treatment.values[i]);
      rows.push_back(i);
    }
    auto ref = testsupport::newton_logistic(x, z);
    for (std::size_t k = 0; k < rows.size(); ++k) {
      double eta = 0.0;
      for (std::size_t j = 0; j < ref.beta.size(); ++j) {
        eta += x[k][j] * ref.beta[j];
      }
      ASSERT_NEAR(mp.scores(static_cast<Eigen::Index>(rows[k])), 1.0 / (1.0 + std::exp(-eta)), 1e-7);
    }
  }
}

TEST(AnalyzeMp, SparsePatternsMergeIntoSupersets) {
  auto rs = scenario(7);
  auto g = draw(rs, 8);
  StrategyOptions opts;
  opts.min_stratum = 400;  // the both-missing pattern (about 180 rows) must merge
  auto mp = analyze_mp(g.observed, opts);
  EXPECT_LT(mp.stratum_masks.size(), 4u);
  std::vector<std::size_t> sizes(mp.stratum_masks.size(), 0);
  for (std::size_t i = 0; i < g.observed.rows(); ++i) {
    ASSERT_GE(mp.stratum[i], 0);
    const auto& mask = mp.stratum_masks[static_cast<std::size_t>(mp.stratum[i])];
    for (std::size_t j = 0; j < 3; ++j) {
      if (g.observed.covariates[j].missing(i)) {
        ASSERT_TRUE(mask[j]);
      }
    }
    ++sizes[static_cast<std::size_t>(mp.stratum[i])];
  }
  for (auto s : sizes) {
    EXPECT_GE(s, 400u);
  }
  opts.min_stratum = 5000;
  EXPECT_THROW(analyze_mp(g.observed, opts), StrategyFailure);
}

TEST(MiStrategies, IdenticalImputationsReduceToSingleIptw) {
  auto rs = scenario(7);
  auto g = draw(rs, 9);
  ImputationSet one = impute(g.observed, icfg(9, 2));
  ImputationSet same;
  same.config = one.config;
  same.completed.assign(4, one.completed[0]);
  auto a = prepare_mi(g.observed, same);
  auto single = analyze_full(one.completed[0]);

  auto mips = analyze_mips(a);
  auto mipar = analyze_mipar(a);
  auto mite = analyze_mite(a);
  expect_same_estimates(mips, single, 1e-10);
  expect_same_estimates(mipar, single, 1e-10);
  expect_same_estimates(mite, single, 1e-10);
  EXPECT_LT((mips.scores - mipar.scores).cwiseAbs().maxCoeff(), 1e-10);
  for (std::size_t q = 0; q < 3; ++q) {
    // B = 0 so every pooled flavour collapses to its within-imputation value.
    EXPECT_NEAR(mite.variances[q].ps_plus_mi, single.variances[q].ps_corrected, 1e-12);
    EXPECT_NEAR(mite.variances[q].mi_only, single.variances[q].uncorrected, 1e-12);
    EXPECT_NEAR(mips.variances[q].ps_plus_mi, single.variances[q].ps_corrected, 1e-9);
    EXPECT_NEAR(mipar.variances[q].ps_plus_mi, single.variances[q].ps_corrected, 1e-9);
  }
}

TEST(MiStrategies, SingleCovariatePoolsCoincideUnderIdenticalImputations) {
  auto rs = scenario(7, 1000);
  auto g = draw(rs, 10);
  Dataset d = g.observed;
  d.covariates.resize(1);
  ImputationSet one = impute(d, icfg(10, 2));
  ImputationSet same;
  same.completed.assign(3, one.completed[1]);
  auto a = prepare_mi(d, same);
  EXPECT_LT((analyze_mips(a).scores - analyze_mipar(a).scores).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(MiStrategies, CompleteDataEqualsFull) {
  auto rs = scenario(7);
  auto g = draw(rs, 11);
  auto full = analyze_full(g.full);
  auto cfg = icfg(11);
  expect_same_estimates(analyze_mipar(g.full, cfg), full, 1e-10);
  expect_same_estimates(analyze_mips(g.full, cfg), full, 1e-10);
  expect_same_estimates(analyze_mite(g.full, cfg), full, 1e-10);
  expect_same_estimates(analyze_cc(g.full), analyze_mite(g.full, cfg), 1e-10);
}

TEST(MiStrategies, PooledResultsOnIncompleteData) {
  auto rs = scenario(7);
  auto g = draw(rs, 12);
  ImputationSet set = impute(g.observed, icfg(12, 10));
  auto a = prepare_mi(g.observed, set);
  auto mite = analyze_mite(a);
  auto mips = analyze_mips(a);
  auto mipar = analyze_mipar(a);
  ASSERT_EQ(mite.per_imputation.size(), 10u);
  ASSERT_EQ(mips.per_imputation.size(), 10u);

  for (std::size_t q = 0; q < 3; ++q) {
    double mean = 0.0;
    for (const auto& rec : mite.per_imputation) {
      mean += rec.estimates[q];
    }
    EXPECT_NEAR(mite.estimates[q].estimate, mean / 10.0, 1e-12);
    EXPECT_GE(mite.variances[q].ps_plus_mi, mite.variances[q].ps_corrected);
    EXPECT_GE(mite.variances[q].mi_only, mite.variances[q].uncorrected);
    EXPECT_EQ(mite.estimates[q].variance_flavor, VarianceFlavor::PsPlusMi);
    EXPECT_EQ(mips.estimates[q].variance_flavor, VarianceFlavor::PsPlusMi);
    EXPECT_EQ(mipar.estimates[q].variance_flavor, VarianceFlavor::PsPlusMi);
  }
  // Per imputation, the three measures derive from one pair of marginal means.
  for (const auto& rec : mite.per_imputation) {
    const double rr = std::exp(rec.estimates[0]);
    const double rd = rec.estimates[2];
    const double mu0 = rd / (rr - 1.0);
    const double mu1 = rr * mu0;
    EXPECT_NEAR(rec.estimates[1], std::log(mu1 / (1 - mu1)) - std::log(mu0 / (1 - mu0)), 1e-10);
  }
  expect_consistent_measures(mips);
  expect_consistent_measures(mipar);

  Vector avg = Vector::Zero(2000);
  for (const auto& ps : a.ps) {
    avg += ps.scores;
  }
  EXPECT_LT((mips.scores - avg / 10.0).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_LT((mipar.scores - expit(a.avg_design * a.mi.alpha_bar)).cwiseAbs().maxCoeff(), 1e-14);
  // Binary X3 averages stay fractional.
  bool fractional = false;
  for (Eigen::Index i = 0; i < a.avg_design.rows(); ++i) {
    double v = a.avg_design(i, 3);
    fractional = fractional || (v > 0.0 && v < 1.0);
  }
  EXPECT_TRUE(fractional);
}

TEST(MiStrategies, MiparVarianceMatchesPublishedMagnitude) {
  auto rs = scenario(7);
  const int reps = 100;
  double v = 0.0;
  for (int r = 0; r < reps; ++r) {
    auto g = draw(rs, 500 + static_cast<std::uint64_t>(r));
    v += analyze_mipar(g.observed, icfg(500 + static_cast<std::uint64_t>(r), 10)).variances[0].ps_plus_mi;
  }
  EXPECT_NEAR(v / reps, 0.006, 0.001);
}

TEST(MiStrategies, MiteIntervalsNarrowerThanCompleteCase) {
  // One covariate missing at 30% under MAR.
  auto rs = scenario(7);
  const int fixtures = 30;
  int narrower = 0;
  for (int f = 0; f < fixtures; ++f) {
    auto g = draw(rs, 700 + static_cast<std::uint64_t>(f));
    Dataset d = g.observed;
    d.covariates[2] = g.full.covariates[2];
    auto cc = analyze_cc(d);
    auto mite = analyze_mite(d, icfg(700 + static_cast<std::uint64_t>(f)));
    const auto& c = cc.estimate(EffectMeasure::LogRR);
    const auto& m = mite.estimate(EffectMeasure::LogRR);
    narrower += (m.ci_high - m.ci_low) < (c.ci_high - c.ci_low) ? 1 : 0;
  }
  EXPECT_GE(narrower, static_cast<int>(0.9 * fixtures));
}

TEST(MiStrategies, PrepareRejectsTooFewImputations) {
  auto rs = scenario(7, 300);
  auto g = draw(rs, 13);
  ImputationSet set;
  set.completed.push_back(g.full);
  EXPECT_THROW(prepare_mi(g.observed, set), ParameterError);
}
