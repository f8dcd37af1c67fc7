#pragma once

#include <iomanip>
#include <sstream>

#include "rommeo/harness/config.hpp"
#include "rommeo/soft_operators.hpp"

namespace rommeo::harness {

/// Human-readable dump of a solution for a game with lettered actions.
inline std::string format_solution(const soft::SoftSolution& sol)
{
   const auto& q = sol.q_star;
   auto letter = [](std::size_t a) { return char('A' + a); };
   std::ostringstream os;
   os << std::fixed << std::setprecision(6);
   os << "iterations " << sol.iterations << ", residual " << std::scientific << sol.residual << std::fixed << "\n";
   os << "Q* (rows: own action, columns: opponent action)\n";
   for(std::size_t a = 0; a < q.num_own(); ++a) {
      os << "  " << letter(a);
      for(std::size_t b = 0; b < q.num_opp(); ++b) {
         os << " " << std::setw(12) << q(0, a, b);
      }
      os << "\n";
   }
   os << "V* " << sol.v_star[0] << "\n";
   os << "pi*(a|b) (rows: opponent action b)\n";
   for(std::size_t b = 0; b < q.num_opp(); ++b) {
      os << "  " << letter(b);
      for(std::size_t a = 0; a < q.num_own(); ++a) {
         os << " " << std::setw(10) << sol.pi_star(0, b, a);
      }
      os << "\n";
   }
   os << "rho*(b)";
   for(std::size_t b = 0; b < q.num_opp(); ++b) {
      os << " " << letter(b) << "=" << sol.rho_star(0, b);
   }
   os << "\n";
   auto [a, b] = soft::joint_argmax(sol.pi_star, sol.rho_star);
   os << "joint argmax (" << letter(a) << "," << letter(b) << ")\n";
   return os.str();
}

inline json solution_json(const soft::SoftSolution& sol)
{
   auto [a, b] = soft::joint_argmax(sol.pi_star, sol.rho_star);
   return {{"q_star", sol.q_star.values()},
           {"v_star", sol.v_star},
           {"pi_star", sol.pi_star.values()},
           {"rho_star", sol.rho_star.values()},
           {"joint_argmax", {a, b}},
           {"iterations", sol.iterations},
           {"residual", sol.residual}};
}

}  // namespace rommeo::harness
