#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "iptwmi/dataset.hpp"
#include "iptwmi/errors.hpp"
#include "iptwmi/strategies.hpp"

namespace iptwmi {

enum class BalanceView {
  Crude,
  WeightedFull,
  WeightedPerImputation,
  WeightedAvgImputed,
  ObservedPart,
  ImputedPart
};

inline const char* to_string(BalanceView v) {
  switch (v) {
    case BalanceView::Crude:
      return "crude";
    case BalanceView::WeightedFull:
      return "weighted_full";
    case BalanceView::WeightedPerImputation:
      return "weighted_per_imputation";
    case BalanceView::WeightedAvgImputed:
      return "weighted_avg_imputed";
    case BalanceView::ObservedPart:
      return "observed_part";
    case BalanceView::ImputedPart:
      return "imputed_part";
  }
  return "?";
}

// IPTW weights Z/e + (1-Z)/(1-e).
inline Vector iptw_weights(const Vector& z, const Vector& scores) {
  Vector w(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    w(i) = z(i) == 1.0 ? 1.0 / scores(i) : 1.0 / (1.0 - scores(i));
  }
  return w;
}

namespace detail {

struct ArmMoments {
  double mean1 = 0.0;
  double mean0 = 0.0;
  double var1 = 0.0;
  double var0 = 0.0;
};

inline ArmMoments arm_moments(const Vector& x, const Vector& z, const Vector* w) {
  // Constant weights leave the moments unchanged; skipping them avoids rounding drift.
  if (w && w->size() > 0 && (w->array() == (*w)(0)).all()) {
    w = nullptr;
  }
  double sw1 = 0.0, sw0 = 0.0, m1 = 0.0, m0 = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    double wi = w ? (*w)(i) : 1.0;
    if (z(i) == 1.0) {
      sw1 += wi;
      m1 += wi * x(i);
    } else {
      sw0 += wi;
      m0 += wi * x(i);
    }
  }
  if (sw1 <= 0.0 || sw0 <= 0.0) {
    throw ParameterError("sdiff: both treatment arms must be non-empty");
  }
  ArmMoments a;
  a.mean1 = m1 / sw1;
  a.mean0 = m0 / sw0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    double wi = w ? (*w)(i) : 1.0;
    if (z(i) == 1.0) {
      a.var1 += wi * (x(i) - a.mean1) * (x(i) - a.mean1);
    } else {
      a.var0 += wi * (x(i) - a.mean0) * (x(i) - a.mean0);
    }
  }
  a.var1 /= sw1;
  a.var0 /= sw0;
  return a;
}

inline double standardized(double diff, double v1, double v0) {
  double pooled = (v1 + v0) / 2.0;
  if (!(pooled > 0.0)) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  return 100.0 * std::abs(diff) / std::sqrt(pooled);
}

}  // namespace detail

// Standardized difference in percent. Weighted means and frequency-weight
// variances when `weights` is given. Zero pooled variance returns NaN.
inline double sdiff_continuous(const Vector& x, const Vector& z, const Vector* weights = nullptr) {
  auto a = detail::arm_moments(x, z, weights);
  return detail::standardized(a.mean1 - a.mean0, a.var1, a.var0);
}

// Same with P(1-P) as the arm variance; x may be fractional (averaged imputations).
inline double sdiff_binary(const Vector& x, const Vector& z, const Vector* weights = nullptr) {
  auto a = detail::arm_moments(x, z, weights);
  return detail::standardized(a.mean1 - a.mean0, a.mean1 * (1.0 - a.mean1), a.mean0 * (1.0 - a.mean0));
}

inline double sdiff(const Vector& x, ColumnKind kind, const Vector& z, const Vector* weights = nullptr) {
  return kind == ColumnKind::Binary ? sdiff_binary(x, z, weights) : sdiff_continuous(x, z, weights);
}

struct BalanceEntry {
  std::string method;
  BalanceView view = BalanceView::Crude;
  std::string covariate;
  double sdiff_percent = std::numeric_limits<double>::quiet_NaN();  // NaN = not applicable
};

struct BalanceReport {
  std::vector<std::string> covariates;
  std::vector<BalanceEntry> entries;
  std::vector<std::string> warnings;

  // NaN when the entry is absent.
  double find(const std::string& method, BalanceView view, const std::string& covariate) const {
    for (const auto& e : entries) {
      if (e.method == method && e.view == view && e.covariate == covariate) {
        return e.sdiff_percent;
      }
    }
    return std::numeric_limits<double>::quiet_NaN();
  }
};

// Everything produced by one replication (or one analysis of a real file).
// Absent pieces are null and their views are skipped.
struct ReplicationArtifacts {
  const Dataset* full = nullptr;  // pre-deletion data, simulator only
  const Dataset* observed = nullptr;
  const StrategyResult* full_result = nullptr;
  const StrategyResult* cc = nullptr;
  const StrategyResult* mp = nullptr;
  const MiAnalysis* mi = nullptr;
  const StrategyResult* mite = nullptr;
  const StrategyResult* mips = nullptr;
  const StrategyResult* mipar = nullptr;
};

namespace detail {

inline Vector take(const Vector& v, const std::vector<std::size_t>& rows) {
  Vector out(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out(static_cast<Eigen::Index>(r)) = v(static_cast<Eigen::Index>(rows[r]));
  }
  return out;
}

class BalanceBuilder {
 public:
  explicit BalanceBuilder(BalanceReport& report) : report_(report) {}

  // SDiff of x over the given rows; NaN when an arm is empty or variance is zero.
  void add(const std::string& method, BalanceView view, const Column& col, const Vector& x, const Vector& z,
           const Vector* weights, const std::vector<std::size_t>* rows = nullptr) {
    double value = std::numeric_limits<double>::quiet_NaN();
    try {
      if (rows) {
        Vector xs = take(x, *rows), zs = take(z, *rows);
        Vector ws;
        if (weights) {
          ws = take(*weights, *rows);
        }
        value = sdiff(xs, col.kind, zs, weights ? &ws : nullptr);
      } else {
        value = sdiff(x, col.kind, z, weights);
      }
    } catch (const ParameterError&) {
    }
    if (std::isnan(value) && !(rows && rows->empty())) {
      report_.warnings.push_back(method + "/" + to_string(view) + "/" + col.name + ": SDiff undefined");
    }
    report_.entries.push_back({method, view, col.name, value});
  }

  void absent(const std::string& method, BalanceView view, const Column& col) {
    report_.entries.push_back({method, view, col.name, std::numeric_limits<double>::quiet_NaN()});
  }

 private:
  BalanceReport& report_;
};

inline std::vector<std::size_t> rows_where(const Column& c, bool missing) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (c.missing(i) == missing) {
      out.push_back(i);
    }
  }
  return out;
}

}  // namespace detail

// The balance grid: crude, each strategy on the data it weights, and the
// observed/imputed decompositions for partially observed covariates.
inline BalanceReport balance_views(const ReplicationArtifacts& art) {
  if (!art.observed) {
    throw ParameterError("balance_views: observed dataset is required");
  }
  const Dataset& obs = *art.observed;
  const Dataset* truth = art.full;
  BalanceReport rep;
  rep.covariates = obs.covariate_names();
  detail::BalanceBuilder b(rep);
  const std::size_t p = obs.covariates.size();

  // Crude: pre-deletion data when available, else available cases.
  {
    const Dataset& d = truth ? *truth : obs;
    for (std::size_t j = 0; j < p; ++j) {
      const Column& c = d.covariates[j];
      std::vector<std::size_t> rows;
      for (std::size_t i = 0; i < d.rows(); ++i) {
        if (!c.missing(i) && !d.treatment.missing(i)) {
          rows.push_back(i);
        }
      }
      Vector x = to_vector(c).unaryExpr([](double v) { return std::isnan(v) ? 0.0 : v; });
      Vector z = to_vector(d.treatment).unaryExpr([](double v) { return std::isnan(v) ? 0.0 : v; });
      b.add("Crude", BalanceView::Crude, c, x, z, nullptr, &rows);
    }
  }

  if (art.full_result && truth) {
    Vector z = to_vector(truth->treatment);
    Vector w = iptw_weights(z, art.full_result->scores);
    for (const auto& c : truth->covariates) {
      b.add("Full", BalanceView::WeightedFull, c, to_vector(c), z, &w);
    }
  }

  if (art.cc) {
    Dataset sub = obs.subset(art.cc->rows);
    Vector z = to_vector(sub.treatment);
    Vector w = iptw_weights(z, art.cc->scores);
    for (const auto& c : sub.covariates) {
      b.add("CC", BalanceView::WeightedFull, c, to_vector(c), z, &w);
    }
  }

  if (art.mp) {
    Vector z = to_vector(obs.treatment);
    Vector w = iptw_weights(z, art.mp->scores);
    for (std::size_t j = 0; j < p; ++j) {
      const Column& oc = obs.covariates[j];
      if (truth) {
        b.add("MP", BalanceView::WeightedFull, truth->covariates[j], to_vector(truth->covariates[j]), z, &w);
      }
      auto seen = detail::rows_where(oc, false);
      Vector xo = to_vector(oc).unaryExpr([](double v) { return std::isnan(v) ? 0.0 : v; });
      b.add("MP", BalanceView::ObservedPart, oc, xo, z, &w, &seen);
      auto unseen = detail::rows_where(oc, true);
      if (unseen.empty()) {
        b.absent("MP", BalanceView::ImputedPart, oc);
      } else if (truth) {
        b.add("MP", BalanceView::ImputedPart, oc, to_vector(truth->covariates[j]), z, &w, &unseen);
      }
    }
  }

  if (art.mi && art.mite) {
    const MiAnalysis& mi = *art.mi;
    const std::size_t m = mi.ps.size();
    std::vector<double> on_full(p, 0.0), on_imputed(p, 0.0);
    std::vector<int> full_count(p, 0), imp_count(p, 0);
    for (std::size_t k = 0; k < m; ++k) {
      const Dataset& dk = mi.imputations->completed[k];
      Vector zk = to_vector(dk.treatment);
      Vector wk = iptw_weights(zk, mi.ps[k].scores);
      for (std::size_t j = 0; j < p; ++j) {
        double v = sdiff(to_vector(dk.covariates[j]), dk.covariates[j].kind, zk, &wk);
        if (!std::isnan(v)) {
          on_imputed[j] += v;
          ++imp_count[j];
        }
        if (truth) {
          Vector zt = to_vector(truth->treatment);
          Vector wt = iptw_weights(zt, mi.ps[k].scores);
          double u = sdiff(to_vector(truth->covariates[j]), truth->covariates[j].kind, zt, &wt);
          if (!std::isnan(u)) {
            on_full[j] += u;
            ++full_count[j];
          }
        }
      }
    }
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t j = 0; j < p; ++j) {
      const std::string& name = obs.covariates[j].name;
      if (truth) {
        rep.entries.push_back({"MIte", BalanceView::WeightedFull, name,
                               full_count[j] ? on_full[j] / full_count[j] : nan});
      }
      rep.entries.push_back({"MIte", BalanceView::WeightedPerImputation, name,
                             imp_count[j] ? on_imputed[j] / imp_count[j] : nan});
    }
  }

  auto pooled_views = [&](const char* method, const StrategyResult& r) {
    const MiAnalysis& mi = *art.mi;
    Vector z = to_vector(obs.treatment);
    Vector w = iptw_weights(z, r.scores);
    for (std::size_t j = 0; j < p; ++j) {
      const Column& oc = obs.covariates[j];
      Vector xbar = mi.avg_design.col(static_cast<Eigen::Index>(j + 1));
      if (truth) {
        b.add(method, BalanceView::WeightedFull, truth->covariates[j], to_vector(truth->covariates[j]), z, &w);
      }
      b.add(method, BalanceView::WeightedAvgImputed, oc, xbar, z, &w);
      auto seen = detail::rows_where(oc, false);
      b.add(method, BalanceView::ObservedPart, oc, xbar, z, &w, &seen);
      auto unseen = detail::rows_where(oc, true);
      if (unseen.empty()) {
        b.absent(method, BalanceView::ImputedPart, oc);
      } else {
        b.add(method, BalanceView::ImputedPart, oc, xbar, z, &w, &unseen);
      }
    }
  };
  if (art.mi && art.mips) {
    pooled_views("MIps", *art.mips);
  }
  if (art.mi && art.mipar) {
    pooled_views("MIpar", *art.mipar);
  }
  return rep;
}

}  // namespace iptwmi
