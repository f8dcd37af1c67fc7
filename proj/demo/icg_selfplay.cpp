// Two ROMMEO-Q agents on the climbing game, printing the joint policy as
// it sharpens.

#include <cstdio>
#include <cstdlib>

#include "rommeo/rommeo_q.hpp"

using namespace rommeo;

int main(int argc, char** argv)
{
   std::uint64_t seed = argc > 1 ? std::strtoull(argv[1], nullptr, 10) : 0;
   auto game = climbing_game();
   QLearnerConfig cfg;
   QLearner a(1, 3, 3, cfg, 2 * seed), b(1, 3, 3, cfg, 2 * seed + 1);
   std::printf("episode  p(A,A)  rho1(A)  pi2(A)  reward\n");
   for(int e = 0; e < 100; ++e) {
      auto x = a.act(0);
      auto y = b.act(0);
      auto r = game.rewards({x, y});
      a.observe({0, x, y, std::nullopt, 0, r[0], true});
      b.observe({0, y, x, std::nullopt, 0, r[1], true});
      a.update();
      b.update();
      if(e % 10 == 9) {
         double p1 = a.policy(0)[0], p2 = b.policy(0)[0];
         std::printf("%7d  %6.3f  %7.3f  %6.3f  %6.1f\n", e + 1, p1 * p2, a.opponent_estimate(0)[0], p2, r[0]);
      }
   }
}
