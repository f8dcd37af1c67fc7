#pragma once

#include <array>
#include <optional>
#include <cmath>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "rommeo/common.hpp"

namespace rommeo {

using StateId = std::size_t;

/// Sentinel state for stateless (repeated stage) games.
inline constexpr StateId kStatelessState = 0;

struct DiscreteSpace {
   std::size_t n;
};

struct BoxSpace {
   double low;
   double high;
   std::size_t dim = 1;
};

class ActionSpace {
 public:
   static ActionSpace discrete(std::size_t n)
   {
      require(n >= 2, "discrete action space needs at least 2 actions");
      return ActionSpace(DiscreteSpace{n});
   }

   static ActionSpace box(double low, double high, std::size_t dim = 1)
   {
      require(low < high, "box action space needs low < high");
      require(dim >= 1, "box action space needs dim >= 1");
      return ActionSpace(BoxSpace{low, high, dim});
   }

   [[nodiscard]] bool is_discrete() const { return std::holds_alternative< DiscreteSpace >(kind_); }
   [[nodiscard]] const DiscreteSpace& as_discrete() const { return std::get< DiscreteSpace >(kind_); }
   [[nodiscard]] const BoxSpace& as_box() const { return std::get< BoxSpace >(kind_); }

 private:
   explicit ActionSpace(std::variant< DiscreteSpace, BoxSpace > k) : kind_(k) {}
   std::variant< DiscreteSpace, BoxSpace > kind_;
};

/// Two-player matrix game. payoff(agent, a1, a2) is agent's reward when
/// player 1 plays a1 and player 2 plays a2.
class MatrixGame {
 public:
   using action_type = std::size_t;

   MatrixGame(std::size_t n1, std::size_t n2, std::vector< double > payoff1, std::vector< double > payoff2)
       : n_{n1, n2}, payoff_{std::move(payoff1), std::move(payoff2)}
   {
      require(n1 >= 2 && n2 >= 2, "matrix game needs at least two actions per agent");
      for(const auto& p : payoff_) {
         require(p.size() == n1 * n2, "payoff size must equal n1*n2");
         for(double v : p) {
            require(std::isfinite(v), "payoff entries must be finite");
         }
      }
      shared_ = payoff_[0] == payoff_[1];
   }

   /// Fully cooperative game where both agents receive `payoff`.
   static MatrixGame shared(std::size_t n1, std::size_t n2, std::vector< double > payoff)
   {
      auto copy = payoff;
      return MatrixGame(n1, n2, std::move(payoff), std::move(copy));
   }

   [[nodiscard]] std::size_t num_actions(std::size_t agent) const { return n_.at(agent); }
   [[nodiscard]] std::size_t num_states() const { return 1; }
   [[nodiscard]] bool is_shared() const { return shared_; }

   [[nodiscard]] double payoff(std::size_t agent, std::size_t a1, std::size_t a2) const
   {
      return payoff_.at(agent)[a1 * n_[1] + a2];
   }

   [[nodiscard]] std::array< double, 2 > rewards(const std::array< std::size_t, 2 >& joint) const
   {
      if(joint[0] >= n_[0] || joint[1] >= n_[1]) {
         throw std::domain_error("joint action outside the matrix game's action sets");
      }
      return {payoff(0, joint[0], joint[1]), payoff(1, joint[0], joint[1])};
   }

   [[nodiscard]] ActionSpace action_space(std::size_t agent) const
   {
      return ActionSpace::discrete(n_.at(agent));
   }

 private:
   std::array< std::size_t, 2 > n_;
   std::array< std::vector< double >, 2 > payoff_;
   bool shared_ = false;
};

/// Iterated climbing game, actions (A, B, C) = (0, 1, 2). The (C, C) cell is
/// printed as (5, 3) in some sources; `cc_shared_five` selects 5 for both
/// agents (fully cooperative) versus the literal (5, 3).
inline MatrixGame climbing_game(bool cc_shared_five = true)
{
   std::vector< double > p1{11, -30, 0, -30, 7, 6, 0, 0, 5};
   std::vector< double > p2 = p1;
   if(! cc_shared_five) {
      p2[8] = 3;
   }
   return MatrixGame(3, 3, std::move(p1), std::move(p2));
}

inline constexpr double kDiffLow = -10.0;
inline constexpr double kDiffHigh = 10.0;

/// Max of two quadratics: local max 0 at (-5,-5), global max 10 at (5,5).
inline double max_two_quadratics_reward(double a1, double a2)
{
   if(! (a1 >= kDiffLow && a1 <= kDiffHigh && a2 >= kDiffLow && a2 <= kDiffHigh)) {
      throw std::domain_error("max-of-two-quadratics action outside [-10, 10]");
   }
   double u1 = (a1 + 5.0) / 3.0;
   double u2 = (a2 + 5.0) / 3.0;
   double f1 = 0.8 * (-(u1 * u1) - (u2 * u2));
   double f2 = 1.0 * (-((a1 - 5.0) * (a1 - 5.0)) - ((a2 - 5.0) * (a2 - 5.0))) + 10.0;
   return std::max(f1, f2);
}

class DifferentialGame {
 public:
   using action_type = double;

   [[nodiscard]] std::size_t num_states() const { return 1; }
   [[nodiscard]] ActionSpace action_space(std::size_t) const { return ActionSpace::box(kDiffLow, kDiffHigh, 1); }

   [[nodiscard]] std::array< double, 2 > rewards(const std::array< double, 2 >& joint) const
   {
      double r = max_two_quadratics_reward(joint[0], joint[1]);
      return {r, r};
   }
};

template < class Game >
struct StepResult {
   StateId s_next;
   std::array< double, 2 > rewards;
   bool done;
};

/// Fixed-length episodes over a stateless stage game. Immutable game,
/// mutable step counter.
template < class Game >
class Episode {
 public:
   using action_type = typename Game::action_type;

   Episode(const Game& game, std::size_t length) : game_(&game), length_(length)
   {
      require(length >= 1, "episode length must be >= 1");
   }

   StepResult< Game > step(const std::array< action_type, 2 >& joint)
   {
      require(t_ < length_, "episode already finished");
      auto r = game_->rewards(joint);
      ++t_;
      return {kStatelessState, r, t_ >= length_};
   }

   [[nodiscard]] StateId state() const { return kStatelessState; }
   [[nodiscard]] std::size_t steps_taken() const { return t_; }
   [[nodiscard]] bool done() const { return t_ >= length_; }

 private:
   const Game* game_;
   std::size_t length_;
   std::size_t t_ = 0;
};

/// One experience tuple. `a_opp_model` carries the action sampled from the
/// agent's own opponent model when the learner produces one.
template < class Action >
struct Transition {
   StateId s = kStatelessState;
   Action a_i{};
   Action a_opp{};
   std::optional< Action > a_opp_model;
   StateId s_next = kStatelessState;
   double r = 0.0;
   bool done = true;
};

}  // namespace rommeo
