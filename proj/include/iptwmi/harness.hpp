#pragma once

#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <ctime>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "iptwmi/balance.hpp"
#include "iptwmi/dataset.hpp"
#include "iptwmi/errors.hpp"
#include "iptwmi/iptw.hpp"
#include "iptwmi/mice.hpp"
#include "iptwmi/simgen.hpp"
#include "iptwmi/strategies.hpp"

namespace iptwmi {

inline constexpr const char* kVersion = "0.1.0";

inline std::size_t strategy_index(Strategy s) { return static_cast<std::size_t>(s); }

inline double truth_of(const ScenarioTruth& t, EffectMeasure m) {
  switch (m) {
    case EffectMeasure::LogRR:
      return t.log_rr;
    case EffectMeasure::LogOR:
      return t.log_or;
    case EffectMeasure::RD:
      return t.rd;
  }
  return 0.0;
}

// What one strategy produced in one replication.
struct StrategyOutcome {
  bool ran = false;
  bool ok = false;
  std::string failure;
  std::size_t sample_size = 0;
  std::array<EffectEstimate, 3> estimates{};
  std::array<VarianceSet, 3> flavors{};
  std::array<bool, 3> covers{};
};

struct ReplicationRecord {
  int rep = 0;
  std::array<StrategyOutcome, 7> outcomes{};
  BalanceReport balance;
  std::vector<std::string> warnings;
};

struct CellSummary {
  double bias = std::numeric_limits<double>::quiet_NaN();
  double mean_model_variance = std::numeric_limits<double>::quiet_NaN();
  double empirical_variance = std::numeric_limits<double>::quiet_NaN();
  double coverage = std::numeric_limits<double>::quiet_NaN();
  double mean_estimate = std::numeric_limits<double>::quiet_NaN();
  VarianceSet mean_flavors{};
  std::size_t n_success = 0;
  std::size_t n_failed = 0;
  std::size_t n_covered = 0;
  double mean_sample_size = std::numeric_limits<double>::quiet_NaN();
};

struct BalanceMean {
  std::string method;
  BalanceView view = BalanceView::Crude;
  std::string covariate;
  double mean = std::numeric_limits<double>::quiet_NaN();
  std::size_t count = 0;
};

struct ReplicationSummary {
  int reps = 0;
  std::array<std::array<CellSummary, 3>, 7> cells{};
  std::vector<BalanceMean> balance;
  std::vector<std::string> covariates;
  std::vector<std::string> warnings;

  const CellSummary& cell(Strategy s, EffectMeasure m) const { return cells[strategy_index(s)][measure_index(m)]; }

  double balance_mean(const std::string& method, BalanceView view, const std::string& covariate) const {
    for (const auto& b : balance) {
      if (b.method == method && b.view == view && b.covariate == covariate) {
        return b.mean;
      }
    }
    return std::numeric_limits<double>::quiet_NaN();
  }
};

struct FailureLogEntry {
  int rep = 0;
  std::string strategy;
  std::string message;
};

struct RunManifest {
  nlohmann::json config;  // resolved scenario
  std::uint64_t seed = 0;
  std::string version = kVersion;
  std::string started;
  std::string finished;
  unsigned threads = 1;
  std::vector<FailureLogEntry> failures;
};

struct RunOptions {
  unsigned threads = 0;  // 0 = hardware concurrency
  bool balance = true;
  std::function<void(int done, int total)> progress;
};

struct ScenarioRun {
  ResolvedScenario resolved;
  std::vector<ReplicationRecord> records;
  ReplicationSummary summary;
  RunManifest manifest;
};

inline std::vector<Strategy> strategies_for(Variant v) {
  if (v == Variant::MissYzMcar) {
    return {Strategy::Full, Strategy::CC, Strategy::MIte};
  }
  return {kAllStrategies.begin(), kAllStrategies.end()};
}

namespace detail {

inline std::string utc_now() {
  std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

inline StrategyOutcome summarize_result(const StrategyResult& r, const ScenarioTruth& truth) {
  StrategyOutcome o;
  o.ran = true;
  o.ok = true;
  o.sample_size = r.rows.size();
  for (EffectMeasure m : kAllMeasures) {
    const auto q = measure_index(m);
    o.estimates[q] = r.estimates[q];
    o.flavors[q] = r.variances[q];
    o.covers[q] = r.estimates[q].covers(truth_of(truth, m));
  }
  return o;
}

}  // namespace detail

// One replication: generate, run each strategy, collect balance views.
// Strategy failures are recorded, not thrown.
inline ReplicationRecord run_replication(const ResolvedScenario& sc, int rep, bool with_balance = true) {
  const ScenarioConfig& c = sc.config;
  ReplicationRecord rec;
  rec.rep = rep;
  RngStream base(c.seed, static_cast<std::uint64_t>(rep));
  RngStream gen_rng = base.substream(0);
  GeneratedData data = generate(c, gen_rng);

  const auto wanted = strategies_for(c.variant);
  auto want = [&](Strategy s) { return std::find(wanted.begin(), wanted.end(), s) != wanted.end(); };
  std::array<std::optional<StrategyResult>, 7> results;
  auto attempt = [&](Strategy s, const std::function<StrategyResult()>& fn) {
    auto& out = rec.outcomes[strategy_index(s)];
    out.ran = true;
    try {
      results[strategy_index(s)] = fn();
      out = detail::summarize_result(*results[strategy_index(s)], sc.truth);
      for (const auto& w : results[strategy_index(s)]->warnings) {
        rec.warnings.push_back(std::string(to_string(s)) + ": " + w);
      }
    } catch (const std::exception& e) {
      out.ok = false;
      out.failure = e.what();
    }
  };

  StrategyOptions opts;
  if (want(Strategy::Crude)) {
    attempt(Strategy::Crude, [&] { return analyze_crude(data.observed); });
  }
  if (want(Strategy::Full)) {
    attempt(Strategy::Full, [&] { return analyze_full(data.full, opts); });
  }
  if (want(Strategy::CC)) {
    attempt(Strategy::CC, [&] { return analyze_cc(data.observed, opts); });
  }
  if (want(Strategy::MP)) {
    attempt(Strategy::MP, [&] { return analyze_mp(data.observed, opts); });
  }

  std::optional<ImputationSet> set;
  std::optional<MiAnalysis> mi;
  std::string mi_failure;
  const bool any_mi = want(Strategy::MIte) || want(Strategy::MIps) || want(Strategy::MIpar);
  if (any_mi) {
    try {
      ImputationConfig ic;
      ic.m = c.m;
      ic.cycles = c.cycles;
      ic.include_outcome = c.include_outcome;
      ic.rng = base.substream(1);
      set = impute(data.observed, ic);
      mi = prepare_mi(data.observed, *set, opts);
    } catch (const std::exception& e) {
      mi_failure = e.what();
    }
  }
  for (Strategy s : {Strategy::MIte, Strategy::MIps, Strategy::MIpar}) {
    if (!want(s)) {
      continue;
    }
    if (!mi) {
      auto& out = rec.outcomes[strategy_index(s)];
      out.ran = true;
      out.ok = false;
      out.failure = mi_failure;
      continue;
    }
    attempt(s, [&] {
      return s == Strategy::MIte ? analyze_mite(*mi) : s == Strategy::MIps ? analyze_mips(*mi) : analyze_mipar(*mi);
    });
  }

  if (with_balance && data.observed.treatment.fully_observed()) {
    auto ptr = [&](Strategy s) { return results[strategy_index(s)] ? &*results[strategy_index(s)] : nullptr; };
    ReplicationArtifacts art;
    art.full = &data.full;
    art.observed = &data.observed;
    art.full_result = ptr(Strategy::Full);
    art.cc = ptr(Strategy::CC);
    art.mp = ptr(Strategy::MP);
    art.mi = mi ? &*mi : nullptr;
    art.mite = ptr(Strategy::MIte);
    art.mips = ptr(Strategy::MIps);
    art.mipar = ptr(Strategy::MIpar);
    rec.balance = balance_views(art);
  }
  return rec;
}

// Deterministic fold over replications in index order.
inline ReplicationSummary summarize(const std::vector<ReplicationRecord>& records, const ScenarioTruth& truth) {
  ReplicationSummary s;
  s.reps = static_cast<int>(records.size());
  for (Strategy st : kAllStrategies) {
    for (EffectMeasure m : kAllMeasures) {
      CellSummary& cell = s.cells[strategy_index(st)][measure_index(m)];
      const auto q = measure_index(m);
      double sum = 0.0, var_sum = 0.0, n_sum = 0.0;
      std::array<double, 4> flavor_sum{};
      std::array<std::size_t, 4> flavor_n{};
      std::vector<double> est;
      for (const auto& r : records) {
        const auto& o = r.outcomes[strategy_index(st)];
        if (!o.ran) {
          continue;
        }
        if (!o.ok) {
          ++cell.n_failed;
          continue;
        }
        ++cell.n_success;
        est.push_back(o.estimates[q].estimate);
        sum += o.estimates[q].estimate;
        var_sum += o.estimates[q].variance;
        n_sum += static_cast<double>(o.sample_size);
        cell.n_covered += o.covers[q] ? 1 : 0;
        const auto& f = o.flavors[q];
        std::array<double, 4> vals{f.uncorrected, f.ps_corrected, f.mi_only, f.ps_plus_mi};
        for (std::size_t k = 0; k < 4; ++k) {
          if (!std::isnan(vals[k])) {
            flavor_sum[k] += vals[k];
            ++flavor_n[k];
          }
        }
      }
      if (cell.n_success == 0) {
        continue;
      }
      const double n = static_cast<double>(cell.n_success);
      cell.mean_estimate = sum / n;
      cell.bias = cell.mean_estimate - truth_of(truth, m);
      cell.mean_model_variance = var_sum / n;
      cell.coverage = static_cast<double>(cell.n_covered) / n;
      cell.mean_sample_size = n_sum / n;
      if (cell.n_success > 1) {
        double ss = 0.0;
        for (double e : est) {
          ss += (e - cell.mean_estimate) * (e - cell.mean_estimate);
        }
        cell.empirical_variance = ss / (n - 1.0);
      }
      auto mean_or_nan = [&](std::size_t k) {
        return flavor_n[k] ? flavor_sum[k] / static_cast<double>(flavor_n[k]) : std::numeric_limits<double>::quiet_NaN();
      };
      cell.mean_flavors = {mean_or_nan(0), mean_or_nan(1), mean_or_nan(2), mean_or_nan(3)};
    }
  }
  if (records.size() < 2) {
    s.warnings.push_back("fewer than two replications: empirical variance is undefined");
  }

  std::map<std::tuple<std::string, int, std::string>, std::size_t> index;
  std::vector<double> sums;
  for (const auto& r : records) {
    if (s.covariates.empty()) {
      s.covariates = r.balance.covariates;
    }
    for (const auto& e : r.balance.entries) {
      auto key = std::make_tuple(e.method, static_cast<int>(e.view), e.covariate);
      auto it = index.find(key);
      if (it == index.end()) {
        it = index.emplace(key, s.balance.size()).first;
        s.balance.push_back({e.method, e.view, e.covariate, std::numeric_limits<double>::quiet_NaN(), 0});
        sums.push_back(0.0);
      }
      if (!std::isnan(e.sdiff_percent)) {
        sums[it->second] += e.sdiff_percent;
        ++s.balance[it->second].count;
      }
    }
  }
  for (std::size_t k = 0; k < s.balance.size(); ++k) {
    if (s.balance[k].count) {
      s.balance[k].mean = sums[k] / static_cast<double>(s.balance[k].count);
    }
  }
  return s;
}

// Runs config.reps replications on a worker pool; results do not depend on
// the thread count.
inline ScenarioRun run_scenario(const ScenarioConfig& config, const RunOptions& opts = {}) {
  if (config.reps < 1) {
    throw ParameterError("run_scenario: reps must be at least 1");
  }
  ScenarioRun run;
  run.manifest.started = detail::utc_now();
  run.resolved = resolve(config);
  const int reps = run.resolved.config.reps;
  unsigned threads = opts.threads ? opts.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(reps));
  run.records.resize(static_cast<std::size_t>(reps));

  std::atomic<int> next{0};
  std::atomic<int> done{0};
  std::exception_ptr error;
  std::mutex mu;
  auto worker = [&] {
    for (;;) {
      int r = next.fetch_add(1);
      if (r >= reps) {
        return;
      }
      try {
        run.records[static_cast<std::size_t>(r)] = run_replication(run.resolved, r, opts.balance);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!error) {
          error = std::current_exception();
        }
        next = reps;
        return;
      }
      int d = ++done;
      if (opts.progress) {
        std::lock_guard<std::mutex> lock(mu);
        opts.progress(d, reps);
      }
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) {
      pool.emplace_back(worker);
    }
    for (auto& t : pool) {
      t.join();
    }
  }
  if (error) {
    std::rethrow_exception(error);
  }

  run.summary = summarize(run.records, run.resolved.truth);
  to_json(run.manifest.config, run.resolved.config);
  run.manifest.seed = run.resolved.config.seed;
  run.manifest.threads = threads;
  for (const auto& r : run.records) {
    for (Strategy s : kAllStrategies) {
      const auto& o = r.outcomes[strategy_index(s)];
      if (o.ran && !o.ok) {
        run.manifest.failures.push_back({r.rep, to_string(s), o.failure});
      }
    }
  }
  run.manifest.finished = detail::utc_now();
  return run;
}

// Largest per-strategy failure fraction among strategies that ran.
inline double worst_failure_rate(const ReplicationSummary& s) {
  double worst = 0.0;
  for (Strategy st : kAllStrategies) {
    const auto& c = s.cell(st, EffectMeasure::LogRR);
    std::size_t total = c.n_success + c.n_failed;
    if (total) {
      worst = std::max(worst, static_cast<double>(c.n_failed) / static_cast<double>(total));
    }
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Table emission

inline void write_summary_table(std::ostream& out, const ReplicationSummary& s) {
  out << "measure,metric";
  for (Strategy st : kAllStrategies) {
    out << ',' << to_string(st);
  }
  out << '\n';
  using Getter = double (*)(const CellSummary&);
  const std::array<std::pair<const char*, Getter>, 4> rows{{
      {"bias", [](const CellSummary& c) { return c.bias; }},
      {"variance", [](const CellSummary& c) { return c.mean_model_variance; }},
      {"empirical_variance", [](const CellSummary& c) { return c.empirical_variance; }},
      {"coverage", [](const CellSummary& c) { return c.coverage; }},
  }};
  for (EffectMeasure m : kAllMeasures) {
    for (const auto& [label, get] : rows) {
      out << to_string(m) << ',' << label;
      for (Strategy st : kAllStrategies) {
        out << ',' << format_number(get(s.cell(st, m)));
      }
      out << '\n';
    }
  }
}

inline void write_variance_table(std::ostream& out, const ReplicationSummary& s) {
  out << "measure,strategy,uncorrected,ps_corrected,mi_only,ps_plus_mi,empirical_variance,n_success,n_failed,"
         "mean_sample_size\n";
  for (EffectMeasure m : kAllMeasures) {
    for (Strategy st : kAllStrategies) {
      const auto& c = s.cell(st, m);
      out << to_string(m) << ',' << to_string(st) << ',' << format_number(c.mean_flavors.uncorrected) << ','
          << format_number(c.mean_flavors.ps_corrected) << ',' << format_number(c.mean_flavors.mi_only) << ','
          << format_number(c.mean_flavors.ps_plus_mi) << ',' << format_number(c.empirical_variance) << ','
          << c.n_success << ',' << c.n_failed << ',' << format_number(c.mean_sample_size) << '\n';
    }
  }
}

inline void write_balance_table(std::ostream& out, const std::vector<std::string>& covariates,
                                const std::vector<BalanceMean>& entries) {
  out << "method,view";
  for (const auto& c : covariates) {
    out << ',' << c;
  }
  out << '\n';
  std::vector<std::pair<std::string, BalanceView>> rows;
  for (const auto& e : entries) {
    std::pair<std::string, BalanceView> key{e.method, e.view};
    if (std::find(rows.begin(), rows.end(), key) == rows.end()) {
      rows.push_back(key);
    }
  }
  for (const auto& [method, view] : rows) {
    out << method << ',' << to_string(view);
    for (const auto& c : covariates) {
      double v = std::numeric_limits<double>::quiet_NaN();
      for (const auto& e : entries) {
        if (e.method == method && e.view == view && e.covariate == c) {
          v = e.mean;
        }
      }
      out << ',' << format_number(v);
    }
    out << '\n';
  }
}

inline void write_replications(std::ostream& out, const std::vector<ReplicationRecord>& records) {
  out << "rep,strategy,measure,status,estimate,variance,ci_low,ci_high,covers,uncorrected,ps_corrected,mi_only,"
         "ps_plus_mi,sample_size\n";
  for (const auto& r : records) {
    for (Strategy st : kAllStrategies) {
      const auto& o = r.outcomes[strategy_index(st)];
      if (!o.ran) {
        continue;
      }
      for (EffectMeasure m : kAllMeasures) {
        const auto q = measure_index(m);
        out << r.rep << ',' << to_string(st) << ',' << to_string(m) << ',' << (o.ok ? "ok" : "failed");
        if (o.ok) {
          const auto& e = o.estimates[q];
          const auto& f = o.flavors[q];
          out << ',' << format_number(e.estimate) << ',' << format_number(e.variance) << ','
              << format_number(e.ci_low) << ',' << format_number(e.ci_high) << ',' << (o.covers[q] ? 1 : 0) << ','
              << format_number(f.uncorrected) << ',' << format_number(f.ps_corrected) << ','
              << format_number(f.mi_only) << ',' << format_number(f.ps_plus_mi) << ',' << o.sample_size;
        } else {
          out << ",,,,,,,,,,";
        }
        out << '\n';
      }
    }
  }
}

inline nlohmann::json manifest_json(const RunManifest& m, const ScenarioTruth& truth) {
  nlohmann::json j;
  j["config"] = m.config;
  j["seed"] = m.seed;
  j["version"] = m.version;
  j["started"] = m.started;
  j["finished"] = m.finished;
  j["threads"] = m.threads;
  j["truth"] = {{"log_rr", truth.log_rr}, {"log_or", truth.log_or}, {"rd", truth.rd}, {"mu1", truth.mu1},
                {"mu0", truth.mu0}};
  nlohmann::json fails = nlohmann::json::array();
  for (const auto& f : m.failures) {
    fails.push_back({{"rep", f.rep}, {"strategy", f.strategy}, {"message", f.message}});
  }
  j["failures"] = fails;
  return j;
}

struct EmittedFiles {
  std::filesystem::path table, variances, balance, replications, manifest;
};

// Writes <name>_table.csv, _variances.csv, _balance.csv, _replications.csv
// and _manifest.json into `dir`.
inline EmittedFiles emit_tables(const ScenarioRun& run, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    throw InputError("cannot create output directory '" + dir.string() + "': " + ec.message());
  }
  const std::string stem = run.resolved.config.name.empty() ? "scenario" : run.resolved.config.name;
  EmittedFiles f{dir / (stem + "_table.csv"), dir / (stem + "_variances.csv"), dir / (stem + "_balance.csv"),
                 dir / (stem + "_replications.csv"), dir / (stem + "_manifest.json")};
  auto open = [](const std::filesystem::path& p) {
    std::ofstream out(p, std::ios::binary);
    if (!out) {
      throw InputError("cannot write '" + p.string() + "'");
    }
    return out;
  };
  {
    auto out = open(f.table);
    write_summary_table(out, run.summary);
  }
  {
    auto out = open(f.variances);
    write_variance_table(out, run.summary);
  }
  {
    auto out = open(f.balance);
    write_balance_table(out, run.summary.covariates, run.summary.balance);
  }
  {
    auto out = open(f.replications);
    write_replications(out, run.records);
  }
  {
    auto out = open(f.manifest);
    out << manifest_json(run.manifest, run.resolved.truth).dump(2) << '\n';
  }
  return f;
}

// ---------------------------------------------------------------------------
// Analysis of a user-supplied file

struct AnalyzeOptions {
  Strategy strategy = Strategy::MIte;
  std::string outcome = "Y";
  std::string treatment = "Z";
  std::vector<std::string> covariates;
  int m = 10;
  int cycles = 10;
  bool include_outcome = true;
  bool pmm = false;
  std::uint64_t seed = 1;
  std::size_t min_stratum = 50;
};

struct FileAnalysis {
  StrategyResult result;
  BalanceReport balance;
};

inline FileAnalysis analyze_dataset(const Dataset& d, const AnalyzeOptions& o) {
  if (o.strategy == Strategy::Full) {
    throw InputError("strategy Full needs pre-deletion data and is only available in simulations");
  }
  StrategyOptions so;
  so.min_stratum = o.min_stratum;
  FileAnalysis out;
  ReplicationArtifacts art;
  art.observed = &d;
  std::optional<ImputationSet> set;
  std::optional<MiAnalysis> mi;
  switch (o.strategy) {
    case Strategy::Crude:
      out.result = analyze_crude(d);
      break;
    case Strategy::CC:
      out.result = analyze_cc(d, so);
      art.cc = &out.result;
      break;
    case Strategy::MP:
      out.result = analyze_mp(d, so);
      art.mp = &out.result;
      break;
    default: {
      ImputationConfig ic;
      ic.m = o.m;
      ic.cycles = o.cycles;
      ic.include_outcome = o.include_outcome;
      ic.pmm = o.pmm;
      ic.rng = RngStream(o.seed, 0);
      set = impute(d, ic);
      mi = prepare_mi(d, *set, so);
      art.mi = &*mi;
      if (o.strategy == Strategy::MIte) {
        out.result = analyze_mite(*mi);
        art.mite = &out.result;
      } else if (o.strategy == Strategy::MIps) {
        out.result = analyze_mips(*mi);
        art.mips = &out.result;
      } else {
        out.result = analyze_mipar(*mi);
        art.mipar = &out.result;
      }
    }
  }
  if (d.treatment.fully_observed()) {
    out.balance = balance_views(art);
  }
  return out;
}

inline FileAnalysis analyze_file(const std::string& path, const AnalyzeOptions& o) {
  if (o.strategy == Strategy::Full) {
    throw InputError("strategy Full needs pre-deletion data and is only available in simulations");
  }
  return analyze_dataset(read_csv(path, o.outcome, o.treatment, o.covariates), o);
}

inline void print_estimates(std::ostream& out, const StrategyResult& r) {
  out << "strategy " << to_string(r.strategy) << ", n = " << r.rows.size() << '\n';
  out << std::left << std::setw(8) << "measure" << std::right << std::setw(12) << "estimate" << std::setw(12)
      << "ci_low" << std::setw(12) << "ci_high" << std::setw(12) << "variance" << "  flavor\n";
  for (EffectMeasure m : kAllMeasures) {
    const auto& e = r.estimate(m);
    const bool ratio = m != EffectMeasure::RD;
    auto show = [ratio](double v) { return ratio ? std::exp(v) : v; };
    const char* label = m == EffectMeasure::LogRR ? "RR" : m == EffectMeasure::LogOR ? "OR" : "RD";
    out << std::left << std::setw(8) << label << std::right << std::fixed << std::setprecision(4) << std::setw(12)
        << show(e.estimate) << std::setw(12) << show(e.ci_low) << std::setw(12) << show(e.ci_high)
        << std::setprecision(6) << std::setw(12) << e.variance << "  " << to_string(e.variance_flavor) << '\n';
  }
  out.unsetf(std::ios::fixed);
  for (const auto& w : r.warnings) {
    out << "warning: " << w << '\n';
  }
}

inline void print_balance(std::ostream& out, const BalanceReport& b) {
  std::vector<BalanceMean> entries;
  for (const auto& e : b.entries) {
    entries.push_back({e.method, e.view, e.covariate, e.sdiff_percent, 1});
  }
  out << "standardized differences (%)\n";
  write_balance_table(out, b.covariates, entries);
}

}  // namespace iptwmi
