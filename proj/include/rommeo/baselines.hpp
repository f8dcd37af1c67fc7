#pragma once

// Discrete baselines for the iterated matrix game comparison: joint action
// learner, WoLF policy hill climbing, frequency maximum Q, and the ROMMEO-Q
// ablation that acts against the empirical opponent frequency.

#include <memory>
#include <string>
#include <vector>

#include "rommeo/learner.hpp"
#include "rommeo/rommeo_q.hpp"

namespace rommeo {

class UnsupportedGame : public std::logic_error {
 public:
   using std::logic_error::logic_error;
};

enum class BaselineKind { jal, wolf_phc, fmq, rommeo_q_emp };

inline std::string to_string(BaselineKind k)
{
   switch(k) {
      case BaselineKind::jal: return "jal";
      case BaselineKind::wolf_phc: return "wolf_phc";
      case BaselineKind::fmq: return "fmq";
      case BaselineKind::rommeo_q_emp: return "rommeo_q_emp";
   }
   return "?";
}

/// Linear decay from `start` to `end` over `decay_steps` steps.
struct EpsilonSchedule {
   double start = 0.2;
   double end = 0.01;
   std::size_t decay_steps = 80;

   [[nodiscard]] double at(std::size_t t) const
   {
      if(decay_steps == 0 || t >= decay_steps) {
         return end;
      }
      double f = double(t) / double(decay_steps);
      return start + (end - start) * f;
   }
};

struct BaselineConfig {
   BaselineKind kind = BaselineKind::jal;
   EpsilonSchedule epsilon;
   double lr = 0.1;
   double gamma = 0.0;
   double fmq_c = 10.0;
   double fmq_max_temp = 500.0;
   double fmq_temp_decay = 0.05;
   double wolf_delta_win = 0.05;
   double wolf_delta_lose = 0.2;
   QLearnerConfig rommeo_q;

   void validate() const
   {
      require(lr > 0.0 && lr <= 1.0, "lr must lie in (0, 1]");
      require(fmq_c >= 0.0, "FMQ weight c must be >= 0");
      require(wolf_delta_win > 0.0 && wolf_delta_lose > wolf_delta_win, "WoLF needs delta_l > delta_w > 0");
      require(epsilon.start >= 0.0 && epsilon.start <= 1.0 && epsilon.end >= 0.0 && epsilon.end <= 1.0,
              "epsilon must lie in [0, 1]");
   }
};

namespace detail {

inline std::size_t argmax(std::span< const double > v)
{
   return std::size_t(std::max_element(v.begin(), v.end()) - v.begin());
}

inline std::vector< double > epsilon_greedy(std::span< const double > values, double eps)
{
   std::vector< double > p(values.size(), eps / double(values.size()));
   p[argmax(values)] += 1.0 - eps;
   return p;
}

}  // namespace detail

/// Joint action learner: Q over joint actions, best response to the
/// empirical opponent frequency, epsilon-greedy exploration.
class JointActionLearner : public DiscreteLearner {
 public:
   JointActionLearner(std::size_t n_own, std::size_t n_opp, BaselineConfig cfg, std::uint64_t seed)
       : cfg_(cfg), q_(1, n_own, n_opp, 0.0), counts_(1, n_opp), rng_(seed)
   {
      cfg_.validate();
   }

   [[nodiscard]] std::string name() const override { return "jal"; }

   [[nodiscard]] std::vector< double > expected_values(StateId s) const
   {
      auto f = counts_.probs(s);
      std::vector< double > ev(q_.num_own(), 0.0);
      for(std::size_t a = 0; a < q_.num_own(); ++a) {
         for(std::size_t b = 0; b < q_.num_opp(); ++b) {
            ev[a] += q_(s, a, b) * f[b];
         }
      }
      return ev;
   }

   [[nodiscard]] std::vector< double > policy(StateId s) const override
   {
      return detail::epsilon_greedy(expected_values(s), cfg_.epsilon.at(t_));
   }

   std::size_t act(StateId s) override { return sample_index(policy(s), rng_); }

   void observe(const DiscreteTransition& t) override
   {
      double& cell = q_(t.s, t.a_i, t.a_opp);
      cell += cfg_.lr * (t.r - cell);
      counts_.add(t.s, t.a_opp);
      ++t_;
   }

   void update() override {}

   [[nodiscard]] std::vector< double > opponent_estimate(StateId s) const override { return counts_.probs(s); }
   [[nodiscard]] std::vector< double > empirical_opponent(StateId s) const override { return counts_.probs(s); }

   [[nodiscard]] json checkpoint() const override
   {
      return {{"kind", name()},
              {"q", std::vector< double >(q_.values().begin(), q_.values().end())},
              {"counts", counts_.raw()},
              {"t", t_},
              {"rng", rng_state(rng_)}};
   }

 private:
   BaselineConfig cfg_;
   soft::JointQTable q_;
   EmpiricalCounts counts_;
   Rng rng_;
   std::size_t t_ = 0;
};

/// WoLF policy hill climbing: independent Q-learning plus a mixed policy that
/// climbs toward the greedy action with a small step when winning (current
/// policy beats the average policy) and a large step when losing.
class WolfPhcLearner : public DiscreteLearner {
 public:
   WolfPhcLearner(std::size_t n_own, std::size_t n_opp, BaselineConfig cfg, std::uint64_t seed)
       : cfg_(cfg),
         q_(n_own, 0.0),
         pi_(n_own, 1.0 / double(n_own)),
         pi_avg_(n_own, 1.0 / double(n_own)),
         counts_(1, n_opp),
         rng_(seed)
   {
      cfg_.validate();
   }

   [[nodiscard]] std::string name() const override { return "wolf_phc"; }

   [[nodiscard]] const std::vector< double >& raw_policy() const { return pi_; }
   [[nodiscard]] const std::vector< double >& average_policy() const { return pi_avg_; }

   [[nodiscard]] std::vector< double > policy(StateId) const override
   {
      double eps = cfg_.epsilon.at(t_);
      std::vector< double > p(pi_.size());
      for(std::size_t a = 0; a < p.size(); ++a) {
         p[a] = (1.0 - eps) * pi_[a] + eps / double(p.size());
      }
      return p;
   }

   std::size_t act(StateId s) override { return sample_index(policy(s), rng_); }

   void observe(const DiscreteTransition& t) override
   {
      std::size_t n = q_.size();
      double target = t.r;
      if(! t.done) {
         target += cfg_.gamma * *std::max_element(q_.begin(), q_.end());
      }
      q_[t.a_i] += cfg_.lr * (target - q_[t.a_i]);
      counts_.add(t.s, t.a_opp);
      ++t_;

      ++visits_;
      for(std::size_t a = 0; a < n; ++a) {
         pi_avg_[a] += (pi_[a] - pi_avg_[a]) / double(visits_);
      }
      double v_cur = 0.0;
      double v_avg = 0.0;
      for(std::size_t a = 0; a < n; ++a) {
         v_cur += pi_[a] * q_[a];
         v_avg += pi_avg_[a] * q_[a];
      }
      double delta = v_cur > v_avg ? cfg_.wolf_delta_win : cfg_.wolf_delta_lose;
      std::size_t best = detail::argmax(q_);
      double rest = 0.0;
      for(std::size_t a = 0; a < n; ++a) {
         if(a == best) {
            continue;
         }
         pi_[a] -= std::min(pi_[a], delta / double(n - 1));
         rest += pi_[a];
      }
      // complement rather than increment, so rounding cannot push it past 1
      pi_[best] = 1.0 - rest;
   }

   void update() override {}

   [[nodiscard]] std::vector< double > opponent_estimate(StateId s) const override { return counts_.probs(s); }
   [[nodiscard]] std::vector< double > empirical_opponent(StateId s) const override { return counts_.probs(s); }

   [[nodiscard]] json checkpoint() const override
   {
      return {{"kind", name()}, {"q", q_}, {"pi", pi_}, {"pi_avg", pi_avg_}, {"visits", visits_},
              {"t", t_},        {"rng", rng_state(rng_)}};
   }

 private:
   BaselineConfig cfg_;
   std::vector< double > q_;
   std::vector< double > pi_;
   std::vector< double > pi_avg_;
   EmpiricalCounts counts_;
   Rng rng_;
   std::size_t visits_ = 0;
   std::size_t t_ = 0;
};

/// Frequency maximum Q: Boltzmann exploration over
/// EV(a) = Q(a) + c * freq(max reward | a) * max reward(a).
class FmqLearner : public DiscreteLearner {
 public:
   FmqLearner(std::size_t n_own, std::size_t n_opp, BaselineConfig cfg, std::uint64_t seed)
       : cfg_(cfg),
         q_(n_own, 0.0),
         max_r_(n_own, -std::numeric_limits< double >::infinity()),
         max_count_(n_own, 0),
         count_(n_own, 0),
         counts_(1, n_opp),
         rng_(seed)
   {
      cfg_.validate();
   }

   [[nodiscard]] std::string name() const override { return "fmq"; }

   [[nodiscard]] const std::vector< double >& q_values() const { return q_; }

   [[nodiscard]] std::vector< double > biased_values() const
   {
      std::vector< double > ev = q_;
      for(std::size_t a = 0; a < ev.size(); ++a) {
         if(count_[a] > 0 && cfg_.fmq_c > 0.0) {
            double freq = double(max_count_[a]) / double(count_[a]);
            ev[a] += cfg_.fmq_c * freq * max_r_[a];
         }
      }
      return ev;
   }

   [[nodiscard]] double temperature() const
   {
      return cfg_.fmq_max_temp * std::exp(-cfg_.fmq_temp_decay * double(t_)) + 1.0;
   }

   [[nodiscard]] std::vector< double > policy(StateId) const override
   {
      auto ev = biased_values();
      double temp = temperature();
      for(double& v : ev) {
         v /= temp;
      }
      softmax_inplace(ev);
      return ev;
   }

   std::size_t act(StateId s) override { return sample_index(policy(s), rng_); }

   void observe(const DiscreteTransition& t) override
   {
      std::size_t a = t.a_i;
      q_[a] += cfg_.lr * (t.r - q_[a]);
      ++count_[a];
      if(t.r > max_r_[a]) {
         max_r_[a] = t.r;
         max_count_[a] = 1;
      } else if(t.r == max_r_[a]) {
         ++max_count_[a];
      }
      counts_.add(t.s, t.a_opp);
      ++t_;
   }

   void update() override {}

   [[nodiscard]] std::vector< double > opponent_estimate(StateId s) const override { return counts_.probs(s); }
   [[nodiscard]] std::vector< double > empirical_opponent(StateId s) const override { return counts_.probs(s); }

   [[nodiscard]] json checkpoint() const override
   {
      json maxr = json::array();
      for(double v : max_r_) {
         maxr.push_back(std::isfinite(v) ? json(v) : json(nullptr));
      }
      return {{"kind", name()}, {"q", q_},  {"max_reward", maxr},     {"max_count", max_count_},
              {"count", count_}, {"t", t_}, {"rng", rng_state(rng_)}};
   }

 private:
   BaselineConfig cfg_;
   std::vector< double > q_;
   std::vector< double > max_r_;
   std::vector< std::uint64_t > max_count_;
   std::vector< std::uint64_t > count_;
   EmpiricalCounts counts_;
   Rng rng_;
   std::size_t t_ = 0;
};

/// ROMMEO-Q learner that acts against the empirical opponent frequency.
inline std::unique_ptr< QLearner > rommeo_q_emp(std::size_t n_own, std::size_t n_opp, QLearnerConfig cfg,
                                                std::uint64_t seed)
{
   cfg.empirical_opponent = true;
   return std::make_unique< QLearner >(1, n_own, n_opp, cfg, seed);
}

inline std::unique_ptr< DiscreteLearner > make_baseline(const BaselineConfig& cfg, const ActionSpace& own,
                                                        const ActionSpace& opp, std::uint64_t seed)
{
   if(! own.is_discrete() || ! opp.is_discrete()) {
      throw UnsupportedGame("baseline " + to_string(cfg.kind) + " needs a discrete game");
   }
   std::size_t n_own = own.as_discrete().n;
   std::size_t n_opp = opp.as_discrete().n;
   switch(cfg.kind) {
      case BaselineKind::jal: return std::make_unique< JointActionLearner >(n_own, n_opp, cfg, seed);
      case BaselineKind::wolf_phc: return std::make_unique< WolfPhcLearner >(n_own, n_opp, cfg, seed);
      case BaselineKind::fmq: return std::make_unique< FmqLearner >(n_own, n_opp, cfg, seed);
      case BaselineKind::rommeo_q_emp: return rommeo_q_emp(n_own, n_opp, cfg.rommeo_q, seed);
   }
   throw ContractViolation("unknown baseline kind");
}

}  // namespace rommeo
