#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "iptwmi/iptwmi.hpp"

namespace {

constexpr int kExitInput = 2;
constexpr int kExitStrategy = 3;

std::vector<std::string> split_list(const std::vector<std::string>& raw) {
  std::vector<std::string> out;
  for (const auto& item : raw) {
    std::stringstream ss(item);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      if (!tok.empty()) {
        out.push_back(tok);
      }
    }
  }
  return out;
}

struct SimulateArgs {
  std::string config;
  int scenario = 0;
  std::string variant;
  int reps = 0;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string out = "results";
  unsigned threads = 0;
  double max_failure_rate = 0.5;
  bool no_balance = false;
  bool quiet = false;
};

int run_simulate(const SimulateArgs& a) {
  iptwmi::ScenarioConfig cfg;
  if (!a.config.empty()) {
    std::ifstream in(a.config);
    if (!in) {
      throw iptwmi::InputError("cannot open config '" + a.config + "'");
    }
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw iptwmi::InputError(std::string("config is not valid JSON: ") + e.what());
    }
    cfg = iptwmi::scenario_from_json(j);
  } else if (a.scenario > 0) {
    cfg = iptwmi::main_scenario(a.scenario);
  } else {
    throw iptwmi::InputError("simulate needs --config or --scenario");
  }
  if (!a.variant.empty()) {
    cfg.variant = iptwmi::variant_from_string(a.variant);
  }
  if (a.reps > 0) {
    cfg.reps = a.reps;
  }
  if (a.seed_set) {
    cfg.seed = a.seed;
  }
  iptwmi::RunOptions opts;
  opts.threads = a.threads;
  opts.balance = !a.no_balance;
  if (!a.quiet) {
    opts.progress = [](int done, int total) {
      if (done == total || done % 50 == 0) {
        std::cerr << "\r" << done << "/" << total << " replications" << (done == total ? "\n" : "") << std::flush;
      }
    };
  }
  auto run = iptwmi::run_scenario(cfg, opts);
  auto files = iptwmi::emit_tables(run, a.out);
  iptwmi::write_summary_table(std::cout, run.summary);
  for (const auto& w : run.summary.warnings) {
    std::cerr << "warning: " << w << '\n';
  }
  std::cerr << "wrote " << files.table.string() << ", " << files.variances.string() << ", "
            << files.balance.string() << ", " << files.replications.string() << ", " << files.manifest.string()
            << '\n';
  double worst = iptwmi::worst_failure_rate(run.summary);
  if (worst > a.max_failure_rate) {
    std::cerr << "error: strategy failure rate " << worst << " exceeds " << a.max_failure_rate << '\n';
    return kExitStrategy;
  }
  return 0;
}

struct AnalyzeArgs {
  std::string data;
  std::string strategy = "MIte";
  std::string outcome = "Y";
  std::string treatment = "Z";
  std::vector<std::string> covariates;
  int m = 10;
  int cycles = 10;
  bool no_outcome = false;
  bool pmm = false;
  std::uint64_t seed = 1;
  std::size_t min_stratum = 50;
};

iptwmi::AnalyzeOptions to_options(const AnalyzeArgs& a) {
  iptwmi::AnalyzeOptions o;
  o.strategy = iptwmi::strategy_from_string(a.strategy);
  o.outcome = a.outcome;
  o.treatment = a.treatment;
  o.covariates = split_list(a.covariates);
  o.m = a.m;
  o.cycles = a.cycles;
  o.include_outcome = !a.no_outcome;
  o.pmm = a.pmm;
  o.seed = a.seed;
  o.min_stratum = a.min_stratum;
  return o;
}

void add_analysis_flags(CLI::App* cmd, AnalyzeArgs& a) {
  cmd->add_option("--data", a.data, "CSV file (empty or NA = missing)")->required();
  cmd->add_option("--strategy", a.strategy, "Crude, CC, MP, MIte, MIps or MIpar");
  cmd->add_option("--outcome", a.outcome, "binary outcome column");
  cmd->add_option("--treatment", a.treatment, "binary treatment column");
  cmd->add_option("--covariates", a.covariates, "covariate columns (comma separated)")->required();
  cmd->add_option("--m", a.m, "number of imputations");
  cmd->add_option("--cycles", a.cycles, "chained-equation sweeps per imputation");
  cmd->add_flag("--no-outcome-in-imputation", a.no_outcome, "leave the outcome out of the imputation models");
  cmd->add_flag("--pmm", a.pmm, "predictive mean matching for continuous columns");
  cmd->add_option("--seed", a.seed, "random seed");
  cmd->add_option("--min-stratum", a.min_stratum, "smallest missingness-pattern stratum before merging");
}

void print_counterexample(std::ostream& out) {
  auto v = iptwmi::counterexample();
  auto row = [&out](const char* name, long double value) {
    out << std::left << std::setw(22) << name << std::right << std::fixed << std::setprecision(6)
        << static_cast<double>(value) << '\n';
  };
  out << std::left << std::setw(22) << "quantity" << "value\n";
  row("theta_true", v.theta_true);
  row("e_expected_missing", v.e_expected_missing);
  row("mips_expectation", v.mips_expectation);
  row("mipar_ps_at_xbar", v.mipar_ps_at_xbar);
  row("mipar_expectation", v.mipar_expectation);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"IPTW with partially observed confounders"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "run a Monte Carlo scenario and write result tables");
  simulate->add_option("--config", sim.config, "scenario JSON");
  simulate->add_option("--scenario", sim.scenario, "built-in scenario number 1-16 (instead of --config)");
  simulate->add_option("--variant", sim.variant, "BASE, MISS_YZ_MCAR, RATE_10, RATE_60 or N_500");
  simulate->add_option("--reps", sim.reps, "replications (overrides the config)");
  auto* seed_opt = simulate->add_option("--seed", sim.seed, "seed (overrides the config)");
  simulate->add_option("--out", sim.out, "output directory");
  simulate->add_option("--threads", sim.threads, "worker threads (default: all cores)");
  simulate->add_option("--max-failure-rate", sim.max_failure_rate, "exit 3 above this per-strategy failure rate");
  simulate->add_flag("--no-balance", sim.no_balance, "skip the balance grid");
  simulate->add_flag("--quiet", sim.quiet, "no progress output");

  AnalyzeArgs an;
  auto* analyze = app.add_subcommand("analyze", "estimate RR, OR and RD from a CSV file");
  add_analysis_flags(analyze, an);

  AnalyzeArgs bal;
  auto* balance = app.add_subcommand("balance", "standardized differences for a CSV file");
  add_analysis_flags(balance, bal);

  app.add_subcommand("counterexample", "exact expectations for the pooled-score counter-example");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : kExitInput;
  }

  try {
    if (*simulate) {
      sim.seed_set = seed_opt->count() > 0;
      return run_simulate(sim);
    }
    if (*analyze || *balance) {
      const AnalyzeArgs& a = *analyze ? an : bal;
      auto result = iptwmi::analyze_file(a.data, to_options(a));
      if (*analyze) {
        iptwmi::print_estimates(std::cout, result.result);
        std::cout << '\n';
      }
      iptwmi::print_balance(std::cout, result.balance);
      return 0;
    }
    print_counterexample(std::cout);
    return 0;
  } catch (const iptwmi::StrategyFailure& e) {
    std::cerr << "strategy failure: " << e.what() << '\n';
    return kExitStrategy;
  } catch (const iptwmi::SeparationError& e) {
    std::cerr << "strategy failure: " << e.what() << '\n';
    return kExitStrategy;
  } catch (const iptwmi::EstimationError& e) {
    std::cerr << "strategy failure: " << e.what() << '\n';
    return kExitStrategy;
  } catch (const iptwmi::Error& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kExitInput;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kExitInput;
  }
}
