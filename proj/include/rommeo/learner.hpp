#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rommeo/game.hpp"

namespace rommeo {

using json = nlohmann::json;
using DiscreteTransition = Transition< std::size_t >;

/// Common surface of the discrete-action learners driven by the harness.
class DiscreteLearner {
 public:
   virtual ~DiscreteLearner() = default;

   [[nodiscard]] virtual std::string name() const = 0;

   /// Samples the agent's action in state s.
   virtual std::size_t act(StateId s) = 0;

   /// Records the outcome of the last joint action.
   virtual void observe(const DiscreteTransition& t) = 0;

   /// Learning work done after each environment step.
   virtual void update() = 0;

   /// Distribution the agent currently samples its own action from.
   [[nodiscard]] virtual std::vector< double > policy(StateId s) const = 0;

   /// The agent's belief about the opponent's action distribution.
   [[nodiscard]] virtual std::vector< double > opponent_estimate(StateId s) const = 0;

   /// Observed frequency of the opponent's actions.
   [[nodiscard]] virtual std::vector< double > empirical_opponent(StateId s) const = 0;

   [[nodiscard]] virtual json checkpoint() const = 0;

   virtual void end_episode() {}
};

/// Per-state counts of the opponent's observed actions.
class EmpiricalCounts {
 public:
   EmpiricalCounts() = default;
   EmpiricalCounts(std::size_t n_states, std::size_t n_actions)
       : n_states_(n_states), n_actions_(n_actions), counts_(n_states * n_actions, 0)
   {
   }

   void add(StateId s, std::size_t b)
   {
      require(s < n_states_ && b < n_actions_, "count index out of range");
      ++counts_[s * n_actions_ + b];
   }

   [[nodiscard]] std::uint64_t count(StateId s, std::size_t b) const { return counts_[s * n_actions_ + b]; }

   [[nodiscard]] std::uint64_t visits(StateId s) const
   {
      std::uint64_t v = 0;
      for(std::size_t b = 0; b < n_actions_; ++b) {
         v += count(s, b);
      }
      return v;
   }

   /// Count ratios; uniform for unvisited states.
   [[nodiscard]] std::vector< double > probs(StateId s) const
   {
      std::vector< double > p(n_actions_, 1.0 / double(n_actions_));
      auto v = visits(s);
      if(v > 0) {
         for(std::size_t b = 0; b < n_actions_; ++b) {
            p[b] = double(count(s, b)) / double(v);
         }
      }
      return p;
   }

   [[nodiscard]] std::vector< double > all_probs() const
   {
      std::vector< double > out;
      out.reserve(counts_.size());
      for(std::size_t s = 0; s < n_states_; ++s) {
         auto p = probs(s);
         out.insert(out.end(), p.begin(), p.end());
      }
      return out;
   }

   [[nodiscard]] std::size_t num_states() const { return n_states_; }
   [[nodiscard]] std::size_t num_actions() const { return n_actions_; }
   [[nodiscard]] const std::vector< std::uint64_t >& raw() const { return counts_; }
   void set_raw(std::vector< std::uint64_t > c)
   {
      require(c.size() == counts_.size(), "count table has wrong size");
      counts_ = std::move(c);
   }

 private:
   std::size_t n_states_ = 0;
   std::size_t n_actions_ = 0;
   std::vector< std::uint64_t > counts_;
};

inline json to_json(const DiscreteTransition& t)
{
   json j{{"s", t.s}, {"a_i", t.a_i}, {"a_opp", t.a_opp}, {"s_next", t.s_next}, {"r", t.r}, {"done", t.done}};
   if(t.a_opp_model) {
      j["a_opp_model"] = *t.a_opp_model;
   }
   return j;
}

inline DiscreteTransition discrete_transition_from_json(const json& j)
{
   DiscreteTransition t;
   t.s = j.at("s").get< StateId >();
   t.a_i = j.at("a_i").get< std::size_t >();
   t.a_opp = j.at("a_opp").get< std::size_t >();
   t.s_next = j.at("s_next").get< StateId >();
   t.r = j.at("r").get< double >();
   t.done = j.at("done").get< bool >();
   if(j.contains("a_opp_model")) {
      t.a_opp_model = j.at("a_opp_model").get< std::size_t >();
   }
   return t;
}

}  // namespace rommeo
