#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "iptwmi/errors.hpp"

namespace iptwmi {

// Exact enumeration over binary (X, Z, Y, R) with R = 1 meaning X observed.
struct WorldState {
  int x = 0;
  int z = 0;
  int y = 0;
  int r = 1;
  long double prob = 0.0L;
};

struct DiscreteWorld {
  std::vector<WorldState> states;
  std::array<long double, 2> alpha{};  // true PS model: logit e(x) = alpha0 + alpha1 x

  long double total() const {
    long double s = 0.0L;
    for (const auto& st : states) {
      s += st.prob;
    }
    return s;
  }

  void validate() const {
    if (std::fabs(static_cast<double>(total() - 1.0L)) > 1e-15) {
      throw ParameterError("DiscreteWorld: probabilities do not sum to 1");
    }
    for (const auto& st : states) {
      if (st.prob < 0.0L) {
        throw ParameterError("DiscreteWorld: negative probability");
      }
    }
  }

  // Probability of the event selected by `pred`.
  long double mass(const std::function<bool(const WorldState&)>& pred) const {
    long double s = 0.0L;
    for (const auto& st : states) {
      if (pred(st)) {
        s += st.prob;
      }
    }
    return s;
  }
};

inline long double expit_ld(long double v) { return 1.0L / (1.0L + std::exp(-v)); }

inline long double true_ps(const DiscreteWorld& w, long double x) { return expit_ld(w.alpha[0] + w.alpha[1] * x); }

// Parametrised family: X ~ Bern(px); P(Z=1|X) = pz[x]; P(Y=1|X,Z) = py[x][z];
// P(R=1|Z) = pr[z].
struct WorldLaws {
  long double px = 0.5L;
  std::array<long double, 2> pz{0.1L, 0.9L};
  std::array<std::array<long double, 2>, 2> py{{{0.1L, 0.1L}, {0.1L, 0.9L}}};
  std::array<long double, 2> pr{1.0L, 0.1L};
};

inline DiscreteWorld make_world(const WorldLaws& L) {
  DiscreteWorld w;
  for (int x = 0; x < 2; ++x) {
    for (int z = 0; z < 2; ++z) {
      for (int y = 0; y < 2; ++y) {
        for (int r = 0; r < 2; ++r) {
          long double p = x ? L.px : 1.0L - L.px;
          p *= z ? L.pz[x] : 1.0L - L.pz[x];
          p *= y ? L.py[x][z] : 1.0L - L.py[x][z];
          p *= r ? L.pr[z] : 1.0L - L.pr[z];
          w.states.push_back({x, z, y, r, p});
        }
      }
    }
  }
  auto logit = [](long double p) { return std::log(p / (1.0L - p)); };
  if (L.pz[0] > 0.0L && L.pz[0] < 1.0L && L.pz[1] > 0.0L && L.pz[1] < 1.0L) {
    w.alpha = {logit(L.pz[0]), logit(L.pz[1]) - logit(L.pz[0])};
  } else {
    w.alpha = {-INFINITY, 0.0L};
  }
  w.validate();
  return w;
}

// The world in which pooling propensity scores across imputations is biased.
inline DiscreteWorld counterexample_world() { return make_world(WorldLaws{}); }

struct CounterexampleValues {
  long double theta_true = 0.0L;
  long double e_expected_missing = 0.0L;  // E[e(X) | Z=1, Y=1] for rows with X missing
  long double mips_expectation = 0.0L;
  long double xbar = 0.0L;  // E[X | Z=1, Y=1]
  long double mipar_ps_at_xbar = 0.0L;
  long double mipar_expectation = 0.0L;
};

// Closed-form evaluation from the laws; infinite M, imputations drawn from
// P(X | Z, Y) and PS parameters at their true values.
inline CounterexampleValues counterexample(const WorldLaws& L = {}) {
  CounterexampleValues out;
  const long double p1 = L.px, p0 = 1.0L - L.px;
  out.theta_true = p1 * L.py[1][1] + p0 * L.py[0][1];

  const long double j1 = p1 * L.pz[1] * L.py[1][1];  // P(X=1, Z=1, Y=1)
  const long double j0 = p0 * L.pz[0] * L.py[0][1];  // P(X=0, Z=1, Y=1)
  const long double a0 = std::log(L.pz[0] / (1.0L - L.pz[0]));
  const long double a1 = std::log(L.pz[1] / (1.0L - L.pz[1])) - a0;
  const long double e1 = expit_ld(a0 + a1), e0 = expit_ld(a0);

  out.xbar = j1 / (j1 + j0);
  out.e_expected_missing = out.xbar * e1 + (1.0L - out.xbar) * e0;
  out.mipar_ps_at_xbar = expit_ld(a0 + a1 * out.xbar);

  // Observed treated rows keep their true score; missing treated rows (Y=1) get the pooled one.
  const long double observed = L.pr[1] * (j1 / e1 + j0 / e0);
  const long double missing_mass = (1.0L - L.pr[1]) * (j1 + j0);
  out.mips_expectation = observed + missing_mass / out.e_expected_missing;
  out.mipar_expectation = observed + missing_mass / out.mipar_ps_at_xbar;
  return out;
}

// Score assigned to each state by an estimator in the infinite-data limit.
using ScoringRule = std::function<long double(const WorldState&)>;

inline ScoringRule true_ps_rule(const DiscreteWorld& w) {
  return [w](const WorldState& s) { return true_ps(w, static_cast<long double>(s.x)); };
}

namespace detail {

// P(X=1 | Z=z, Y=y, R=1): the imputation law under MAR (R depends on Z only).
inline long double imputation_prob(const DiscreteWorld& w, int z, int y) {
  long double num = w.mass([&](const WorldState& s) { return s.r == 1 && s.z == z && s.y == y && s.x == 1; });
  long double den = w.mass([&](const WorldState& s) { return s.r == 1 && s.z == z && s.y == y; });
  if (den <= 0.0L) {
    throw PositivityError("oracle: no observed rows to impute from for Z=" + std::to_string(z) +
                          ", Y=" + std::to_string(y));
  }
  return num / den;
}

}  // namespace detail

// Averaged propensity score over the imputation law (pooled-score rule).
inline ScoringRule pooled_score_rule(const DiscreteWorld& w) {
  return [w](const WorldState& s) {
    if (s.r == 1) {
      return true_ps(w, static_cast<long double>(s.x));
    }
    long double q = detail::imputation_prob(w, s.z, s.y);
    return q * true_ps(w, 1.0L) + (1.0L - q) * true_ps(w, 0.0L);
  };
}

// Score of the averaged covariate (score-of-average rule).
inline ScoringRule score_of_average_rule(const DiscreteWorld& w) {
  return [w](const WorldState& s) {
    if (s.r == 1) {
      return true_ps(w, static_cast<long double>(s.x));
    }
    return true_ps(w, detail::imputation_prob(w, s.z, s.y));
  };
}

namespace detail {

inline void require_treated(const DiscreteWorld& w) {
  if (w.mass([](const WorldState& s) { return s.z == 1; }) <= 0.0L) {
    throw PositivityError("oracle: P(Z=1) = 0");
  }
}

inline long double checked_score(const ScoringRule& rule, const WorldState& s) {
  long double e = rule(s);
  if (!(e > 0.0L)) {
    throw PositivityError("oracle: zero score on a treated state with positive probability");
  }
  return e;
}

}  // namespace detail

// Population analog of the IPTW treated-arm mean E[YZ/e]. With `normalize`
// the ratio E[YZ/e] / E[Z/e] is returned instead.
inline long double brute_force_iptw_expectation(const DiscreteWorld& world, const ScoringRule& rule,
                                                bool normalize = false) {
  world.validate();
  detail::require_treated(world);
  long double num = 0.0L, den = 0.0L;
  for (const auto& s : world.states) {
    if (s.z != 1 || s.prob == 0.0L) {
      continue;
    }
    long double e = detail::checked_score(rule, s);
    num += s.prob * s.y / e;
    den += s.prob / e;
  }
  return normalize ? num / den : num;
}

// Each missing-X state is spread over x by the imputation law and weighted by
// the true PS of the completed value; the treated-arm mean is then exact.
inline long double mite_analog_expectation(const DiscreteWorld& world, bool normalize = false) {
  world.validate();
  detail::require_treated(world);
  long double num = 0.0L, den = 0.0L;
  for (const auto& s : world.states) {
    if (s.z != 1 || s.prob == 0.0L) {
      continue;
    }
    std::array<long double, 2> split{0.0L, 0.0L};
    if (s.r == 1) {
      split[static_cast<std::size_t>(s.x)] = s.prob;
    } else {
      long double q = detail::imputation_prob(world, s.z, s.y);
      split = {s.prob * (1.0L - q), s.prob * q};
    }
    for (int x = 0; x < 2; ++x) {
      long double e = true_ps(world, x);
      if (split[static_cast<std::size_t>(x)] > 0.0L && !(e > 0.0L)) {
        throw PositivityError("oracle: zero true score");
      }
      if (split[static_cast<std::size_t>(x)] > 0.0L) {
        num += split[static_cast<std::size_t>(x)] * s.y / e;
        den += split[static_cast<std::size_t>(x)] / e;
      }
    }
  }
  return normalize ? num / den : num;
}

}  // namespace iptwmi
