#include <gtest/gtest.h>

#include <cmath>
#include <string>
#include <vector>

#include "iptwmi/balance.hpp"
#include "iptwmi/simgen.hpp"

using namespace iptwmi;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) {
    out(i++) = x;
  }
  return out;
}

}  // namespace

TEST(Sdiff, IdenticalGroupsGiveZero) {
  Vector x = vec({1, 2, 3, 1, 2, 3});
  Vector z = vec({1, 1, 1, 0, 0, 0});
  EXPECT_EQ(sdiff_continuous(x, z), 0.0);
  Vector b = vec({1, 0, 1, 1, 0, 1});
  EXPECT_EQ(sdiff_binary(b, z), 0.0);
}

TEST(Sdiff, ContinuousArithmetic) {
  // Arm means 1 and 0, each arm variance 1.
  Vector x = vec({0, 2, -1, 1});
  Vector z = vec({1, 1, 0, 0});
  EXPECT_NEAR(sdiff_continuous(x, z), 100.0, 1e-12);
}

TEST(Sdiff, BinaryArithmetic) {
  Vector x = vec({1, 1, 1, 0, 0, 1, 1, 0, 0, 0});
  Vector z = vec({1, 1, 1, 1, 1, 0, 0, 0, 0, 0});
  EXPECT_NEAR(sdiff_binary(x, z), 100.0 * 0.2 / std::sqrt(0.24), 1e-12);
  EXPECT_NEAR(sdiff_binary(x, z), 40.82, 0.005);
}

TEST(Sdiff, AbsoluteValue) {
  Vector x = vec({0, 2, -1, 1});
  Vector z = vec({0, 0, 1, 1});
  EXPECT_NEAR(sdiff_continuous(x, z), 100.0, 1e-12);
}

TEST(Sdiff, EqualWeightsMatchUnweighted) {
  RngStream rng(1, 0);
  for (int t = 0; t < 50; ++t) {
    const Eigen::Index n = 200;
    Vector x(n), b(n), z(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      x(i) = rng.normal();
      b(i) = rng.bernoulli(0.4) ? 1.0 : 0.0;
      z(i) = i % 3 == 0 ? 1.0 : 0.0;
    }
    Vector w = Vector::Constant(n, 0.5 + rng.uniform());
    EXPECT_EQ(sdiff_continuous(x, z, &w), sdiff_continuous(x, z));
    EXPECT_EQ(sdiff_binary(b, z, &w), sdiff_binary(b, z));
  }
}

TEST(Sdiff, AffineInvariance) {
  RngStream rng(2, 0);
  const Eigen::Index n = 300;
  Vector x(n), z(n), w(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    x(i) = rng.normal();
    z(i) = rng.bernoulli(expit(x(i))) ? 1.0 : 0.0;
    w(i) = 0.2 + rng.uniform();
  }
  Vector y = (x.array() * 3.7 - 12.0).matrix();
  EXPECT_NEAR(sdiff_continuous(y, z), sdiff_continuous(x, z), 1e-9);
  EXPECT_NEAR(sdiff_continuous(y, z, &w), sdiff_continuous(x, z, &w), 1e-9);
  Vector neg = -x;
  EXPECT_NEAR(sdiff_continuous(neg, z), sdiff_continuous(x, z), 1e-9);
}

TEST(Sdiff, ZeroVarianceGivesNan) {
  Vector x = vec({2, 2, 2, 2});
  Vector z = vec({1, 1, 0, 0});
  EXPECT_TRUE(std::isnan(sdiff_continuous(x, z)));
  Vector b = vec({1, 1, 1, 1});
  EXPECT_TRUE(std::isnan(sdiff_binary(b, z)));
}

TEST(Sdiff, EmptyArmRejected) {
  Vector x = vec({1, 2, 3});
  Vector z = vec({1, 1, 1});
  EXPECT_THROW(sdiff_continuous(x, z), ParameterError);
}

TEST(Sdiff, WeightedArithmetic) {
  // Treated {0, 2} with weights {3, 1}: mean 0.5, variance (3*0.25 + 1*2.25)/4 = 0.75.
  // Control {-1, 1} with unit weights: mean 0, variance 1.
  Vector x = vec({0, 2, -1, 1});
  Vector z = vec({1, 1, 0, 0});
  Vector w = vec({3, 1, 1, 1});
  EXPECT_NEAR(sdiff_continuous(x, z, &w), 100.0 * 0.5 / std::sqrt((0.75 + 1.0) / 2.0), 1e-12);
}

TEST(IptwWeights, InverseOfAssignedArmProbability) {
  Vector z = vec({1, 0});
  Vector e = vec({0.25, 0.25});
  Vector w = iptw_weights(z, e);
  EXPECT_DOUBLE_EQ(w(0), 4.0);
  EXPECT_DOUBLE_EQ(w(1), 1.0 / 0.75);
}

struct TruePsBalance {
  std::vector<std::string> names;
  std::vector<double> crude;
  std::vector<double> weighted;
};

TruePsBalance true_ps_balance() {
  ScenarioConfig c = main_scenario(7);
  c.n = 100000;
  c.calibration_draws = 200000;
  auto rs = resolve(c);
  RngStream rng(3, 0);
  auto g = generate(rs.config, rng);
  const Dataset& d = g.full;
  Vector z = to_vector(d.treatment);
  Vector e(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    const auto k = static_cast<std::size_t>(i);
    e(i) = expit(kTreatmentCoef[0] + kTreatmentCoef[1] * d.covariates[0].values[k] +
                 kTreatmentCoef[2] * d.covariates[1].values[k] + kTreatmentCoef[3] * d.covariates[2].values[k]);
  }
  Vector w = iptw_weights(z, e);
  TruePsBalance out;
  for (const auto& col : d.covariates) {
    Vector x = to_vector(col);
    out.names.push_back(col.name);
    out.crude.push_back(sdiff(x, col.kind, z));
    out.weighted.push_back(sdiff(x, col.kind, z, &w));
  }
  return out;
}

TEST(Sdiff, TruePsWeightingBalancesAtLargeN) {
  auto b = true_ps_balance();
  for (std::size_t j = 0; j < b.names.size(); ++j) {
    EXPECT_GT(b.crude[j], 20.0) << b.names[j];
    EXPECT_LT(b.weighted[j], 2.0) << b.names[j];
  }
}

TEST(Sdiff, TruePsWeightingBelowOnePercentAtLargeN) {
  auto b = true_ps_balance();
  for (std::size_t j = 0; j < b.names.size(); ++j) {
    EXPECT_LT(b.weighted[j], 1.0) << b.names[j];
  }
}

TEST(BalanceViews, GridStructure) {
  ScenarioConfig c = main_scenario(7);
  c.calibration_draws = 200000;
  auto rs = resolve(c);
  RngStream rng(4, 0);
  auto g = generate(rs.config, rng);
  ImputationConfig ic;
  ic.m = 5;
  ic.cycles = 5;
  ic.rng = RngStream(4, 1);
  ImputationSet set = impute(g.observed, ic);
  MiAnalysis mi = prepare_mi(g.observed, set);
  auto full = analyze_full(g.full);
  auto cc = analyze_cc(g.observed);
  auto mp = analyze_mp(g.observed);
  auto mite = analyze_mite(mi);
  auto mips = analyze_mips(mi);
  auto mipar = analyze_mipar(mi);
  ReplicationArtifacts art;
  art.full = &g.full;
  art.observed = &g.observed;
  art.full_result = &full;
  art.cc = &cc;
  art.mp = &mp;
  art.mi = &mi;
  art.mite = &mite;
  art.mips = &mips;
  art.mipar = &mipar;
  BalanceReport rep = balance_views(art);
  ASSERT_EQ(rep.covariates, (std::vector<std::string>{"X1", "X2", "X3"}));
  for (const auto& e : rep.entries) {
    if (!std::isnan(e.sdiff_percent)) {
      EXPECT_GE(e.sdiff_percent, 0.0);
    }
  }

  // Crude view equals unweighted SDiff of the pre-deletion data.
  Vector z = to_vector(g.full.treatment);
  Vector x1 = to_vector(g.full.covariates[0]);
  EXPECT_DOUBLE_EQ(rep.find("Crude", BalanceView::Crude, "X1"), sdiff_continuous(x1, z));
  // Full weighted view uses the full-data PS weights.
  Vector w = iptw_weights(z, full.scores);
  EXPECT_DOUBLE_EQ(rep.find("Full", BalanceView::WeightedFull, "X1"), sdiff_continuous(x1, z, &w));

  for (const char* m : {"MIps", "MIpar"}) {
    for (const char* cov : {"X1", "X2", "X3"}) {
      EXPECT_FALSE(std::isnan(rep.find(m, BalanceView::WeightedFull, cov))) << m << cov;
      EXPECT_FALSE(std::isnan(rep.find(m, BalanceView::WeightedAvgImputed, cov))) << m << cov;
    }
    EXPECT_FALSE(std::isnan(rep.find(m, BalanceView::ImputedPart, "X1")));
    EXPECT_FALSE(std::isnan(rep.find(m, BalanceView::ObservedPart, "X3")));
    // X2 is fully observed: its imputed-part cell is not applicable and raises no warning.
    EXPECT_TRUE(std::isnan(rep.find(m, BalanceView::ImputedPart, "X2")));
    for (const auto& wmsg : rep.warnings) {
      EXPECT_EQ(wmsg.find("imputed_part/X2"), std::string::npos) << wmsg;
    }
  }
  for (const char* cov : {"X1", "X2", "X3"}) {
    double per = rep.find("MIte", BalanceView::WeightedPerImputation, cov);
    EXPECT_FALSE(std::isnan(per));
    EXPECT_LT(per, 15.0);
  }
  // MIte per-imputation view is the mean over the imputed datasets.
  double mean = 0.0;
  for (std::size_t k = 0; k < set.size(); ++k) {
    Vector zk = to_vector(set.completed[k].treatment);
    Vector wk = iptw_weights(zk, mi.ps[k].scores);
    mean += sdiff_continuous(to_vector(set.completed[k].covariates[0]), zk, &wk);
  }
  EXPECT_NEAR(rep.find("MIte", BalanceView::WeightedPerImputation, "X1"), mean / 5.0, 1e-10);

  EXPECT_EQ(std::string(to_string(BalanceView::ImputedPart)), "imputed_part");
}
