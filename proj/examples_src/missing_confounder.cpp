// Simulate one dataset with two partially observed confounders and compare
// the strategies on it.
#include <iostream>

#include "iptwmi/iptwmi.hpp"

int main() {
  using namespace iptwmi;
  ResolvedScenario sc = resolve(main_scenario(7));
  RngStream rng(42, 0);
  RngStream gen = rng.substream(0);
  GeneratedData data = generate(sc.config, gen);

  std::cout << "true log RR " << sc.truth.log_rr << "\n\n";
  print_estimates(std::cout, analyze_full(data.full));
  print_estimates(std::cout, analyze_cc(data.observed));
  print_estimates(std::cout, analyze_mp(data.observed));

  ImputationConfig ic;
  ic.rng = rng.substream(1);
  ImputationSet set = impute(data.observed, ic);
  MiAnalysis mi = prepare_mi(data.observed, set);
  print_estimates(std::cout, analyze_mite(mi));
  print_estimates(std::cout, analyze_mips(mi));
  print_estimates(std::cout, analyze_mipar(mi));
}
