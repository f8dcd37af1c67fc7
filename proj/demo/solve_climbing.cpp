// Solves the soft fixed point of the climbing game and prints the tables.

#include <iostream>

#include "rommeo/harness/solve.hpp"

int main(int argc, char** argv)
{
   rommeo::soft::SoftConfig cfg;
   if(argc > 1) {
      cfg.alpha = std::stod(argv[1]);
   }
   auto sol = rommeo::soft::solve_fixed_point(rommeo::climbing_game(), rommeo::soft::OpponentPrior::uniform(1, 3), cfg);
   std::cout << "alpha " << cfg.alpha << "\n" << rommeo::harness::format_solution(sol);
}
