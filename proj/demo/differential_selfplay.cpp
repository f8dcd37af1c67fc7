// Two ROMMEO-AC agents on the max-of-two-quadratics game. Uses the shipped
// config when given a path, otherwise the library defaults.

#include <cstdio>

#include "rommeo/harness/config.hpp"
#include "rommeo/harness/runner.hpp"

using namespace rommeo::harness;

int main(int argc, char** argv)
{
   ExperimentConfig cfg;
   if(argc > 1) {
      cfg = load_config(argv[1]);
   } else {
      cfg = parse_config_text(R"({"game": "differential", "learner": {"kind": "rommeo_ac"},
                                  "episodes": 200, "steps_per_episode": 25})");
   }
   std::printf("episode  reward   pi1    pi2    rho1   rho2\n");
   auto r = run_trial(cfg, 0, [](std::size_t e, const std::vector< double >& row) {
      if(e % 10 == 9) {
         std::printf("%7zu  %6.2f  %5.2f  %5.2f  %5.2f  %5.2f\n", e + 1, row[1], row[4], row[5], row[6], row[7]);
         std::fflush(stdout);
      }
   });
   if(r.failed) {
      std::fprintf(stderr, "trial failed: %s\n", r.error.c_str());
      return 1;
   }
   std::printf("final reward %.3f (%s)\n", r.final_reward, r.converged ? "global optimum" : "not converged");
}
