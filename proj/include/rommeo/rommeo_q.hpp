#pragma once

// Sample-based soft Q-learning with a regularized opponent model for
// discrete stateless games: acts from the marginal of the conditional policy
// under the opponent model, keeps an empirical prior of the opponent's real
// actions, and regresses a tabular Q toward importance-sampled soft targets.

#include <vector>

#include "rommeo/learner.hpp"
#include "rommeo/replay_buffer.hpp"
#include "rommeo/soft_operators.hpp"

namespace rommeo {

struct QLearnerConfig {
   double alpha = 1.0;
   double gamma = 0.0;
   double lr = 0.1;
   std::size_t k_samples = 30;
   std::size_t batch = 24;
   std::size_t target_interval = 1;
   std::size_t buffer_capacity = 1000;
   /// Act with rho replaced by the empirical prior (the EMP ablation).
   bool empirical_opponent = false;

   void validate() const
   {
      require(alpha > 0.0, "alpha must be > 0");
      require(gamma >= 0.0 && gamma < 1.0, "gamma must lie in [0, 1)");
      require(lr > 0.0 && lr <= 1.0, "lr must lie in (0, 1]");
      require(k_samples >= 1, "K must be >= 1");
      require(batch >= 1, "batch must be >= 1");
      require(target_interval >= 1, "target interval must be >= 1");
      require(buffer_capacity >= 1, "buffer capacity must be >= 1");
   }
};

inline json to_json(const QLearnerConfig& c)
{
   return {{"alpha", c.alpha},
           {"gamma", c.gamma},
           {"lr", c.lr},
           {"k_samples", c.k_samples},
           {"batch", c.batch},
           {"target_interval", c.target_interval},
           {"buffer_capacity", c.buffer_capacity},
           {"empirical_opponent", c.empirical_opponent}};
}

/// Importance-sampled soft value of the target table at state s:
/// log (1/K) sum_k P(b_k) exp(Qbar(a_k, b_k)) / (pi(a_k|b_k) rho(b_k)),
/// with b_k ~ rho and a_k ~ pi(.|b_k). The weight is the alpha-power form
/// (P^{1/alpha} exp(Qbar/alpha))^alpha, which simplifies to the above.
inline double estimate_v_bar(const soft::JointQTable& q_target, const soft::ConditionalPolicyTable& pi,
                             const soft::StateDistribution& rho, const soft::OpponentPrior& prior, double alpha,
                             StateId s, std::size_t k, Rng& rng)
{
   require(k >= 1, "K must be >= 1");
   require(alpha > 0.0, "alpha must be > 0");
   std::vector< double > log_w(k);
   auto rho_row = rho.row(s);
   for(std::size_t i = 0; i < k; ++i) {
      std::size_t b = sample_index(rho_row, rng);
      std::size_t a = sample_index(pi.row(s, b), rng);
      double log_num = alpha * (prior.log_prob(s, b) / alpha + q_target(s, a, b) / alpha);
      log_w[i] = log_num - std::log(pi(s, b, a)) - std::log(rho(s, b));
   }
   return log_sum_exp(log_w) - std::log(double(k));
}

class QLearner : public DiscreteLearner {
 public:
   QLearner(std::size_t n_states, std::size_t n_own, std::size_t n_opp, QLearnerConfig cfg, std::uint64_t seed)
       : cfg_(cfg),
         q_(n_states, n_own, n_opp, 0.0),
         q_target_(q_),
         counts_(n_states, n_opp),
         buffer_(cfg.buffer_capacity),
         rng_(seed)
   {
      cfg_.validate();
   }

   [[nodiscard]] std::string name() const override
   {
      return cfg_.empirical_opponent ? "rommeo_q_emp" : "rommeo_q";
   }

   [[nodiscard]] const QLearnerConfig& config() const { return cfg_; }
   [[nodiscard]] const soft::JointQTable& q() const { return q_; }
   [[nodiscard]] soft::JointQTable& q() { return q_; }
   [[nodiscard]] const soft::JointQTable& q_target() const { return q_target_; }
   [[nodiscard]] const ReplayBuffer< DiscreteTransition >& buffer() const { return buffer_; }
   [[nodiscard]] const EmpiricalCounts& counts() const { return counts_; }
   [[nodiscard]] std::size_t train_steps() const { return train_steps_; }
   [[nodiscard]] Rng& rng() { return rng_; }

   /// Smoothed empirical prior over the opponent's actions.
   [[nodiscard]] soft::OpponentPrior prior() const
   {
      return {counts_.num_states(), counts_.num_actions(), counts_.all_probs()};
   }

   [[nodiscard]] soft::ConditionalPolicyTable conditional_policy() const { return soft::extract_policy(q_, cfg_.alpha); }

   /// Opponent model used for acting: closed-form rho from the online table,
   /// or the empirical prior under the EMP ablation.
   [[nodiscard]] soft::StateDistribution acting_opponent_model() const
   {
      auto p = prior();
      if(cfg_.empirical_opponent) {
         return p;
      }
      return soft::extract_opponent_model(q_, p, cfg_.alpha);
   }

   [[nodiscard]] std::vector< double > policy(StateId s) const override
   {
      return soft::marginal_policy(conditional_policy(), acting_opponent_model(), s);
   }

   [[nodiscard]] std::vector< double > opponent_estimate(StateId s) const override
   {
      auto rho = acting_opponent_model();
      auto r = rho.row(s);
      return {r.begin(), r.end()};
   }

   [[nodiscard]] std::vector< double > empirical_opponent(StateId s) const override { return counts_.probs(s); }

   std::size_t act(StateId s) override
   {
      auto m = policy(s);
      return sample_index(m, rng_);
   }

   void observe(const DiscreteTransition& t) override
   {
      require(t.s < q_.num_states() && t.s_next < q_.num_states(), "state out of range");
      require(t.a_i < q_.num_own() && t.a_opp < q_.num_opp(), "action out of range");
      require(std::isfinite(t.r), "reward must be finite");
      buffer_.push(t);
      counts_.add(t.s, t.a_opp);
   }

   /// K-sample soft value of the target table at s_next under the current
   /// policy and opponent model.
   double estimate_v_bar(StateId s_next, std::size_t k)
   {
      auto p = prior();
      auto pi = conditional_policy();
      auto rho = soft::extract_opponent_model(q_, p, cfg_.alpha);
      return rommeo::estimate_v_bar(q_target_, pi, rho, p, cfg_.alpha, s_next, k, rng_);
   }

   /// One pass over N transitions sampled from the buffer.
   void train_step()
   {
      require(buffer_.size() >= cfg_.batch, "replay buffer holds fewer than N transitions");
      auto batch = buffer_.sample(cfg_.batch, rng_);
      for(const auto& t : batch) {
         double y = t.r;
         if(! t.done) {
            y += cfg_.gamma * estimate_v_bar(t.s_next, cfg_.k_samples);
         }
         double& cell = q_(t.s, t.a_i, t.a_opp);
         cell -= cfg_.lr * (cell - y);
      }
      ++train_steps_;
      if(train_steps_ % cfg_.target_interval == 0) {
         q_target_ = q_;
      }
   }

   void update() override
   {
      if(buffer_.size() >= cfg_.batch) {
         train_step();
      }
   }

   [[nodiscard]] json checkpoint() const override
   {
      json buf = json::array();
      for(const auto& t : buffer_.ordered()) {
         buf.push_back(to_json(t));
      }
      return {{"kind", name()},
              {"config", to_json(cfg_)},
              {"shape", {q_.num_states(), q_.num_own(), q_.num_opp()}},
              {"q", std::vector< double >(q_.values().begin(), q_.values().end())},
              {"q_target", std::vector< double >(q_target_.values().begin(), q_target_.values().end())},
              {"prior_counts", counts_.raw()},
              {"train_steps", train_steps_},
              {"buffer", buf},
              {"rng", rng_state(rng_)}};
   }

   static QLearner restore(const json& j)
   {
      QLearnerConfig c;
      const auto& jc = j.at("config");
      c.alpha = jc.at("alpha");
      c.gamma = jc.at("gamma");
      c.lr = jc.at("lr");
      c.k_samples = jc.at("k_samples");
      c.batch = jc.at("batch");
      c.target_interval = jc.at("target_interval");
      c.buffer_capacity = jc.at("buffer_capacity");
      c.empirical_opponent = jc.at("empirical_opponent");
      auto shape = j.at("shape").get< std::vector< std::size_t > >();
      require(shape.size() == 3, "checkpoint shape must have 3 entries");
      QLearner l(shape[0], shape[1], shape[2], c, 0);
      auto q = j.at("q").get< std::vector< double > >();
      auto qt = j.at("q_target").get< std::vector< double > >();
      require(q.size() == l.q_.values().size() && qt.size() == q.size(), "checkpoint Q table has wrong size");
      std::copy(q.begin(), q.end(), l.q_.values().begin());
      std::copy(qt.begin(), qt.end(), l.q_target_.values().begin());
      l.counts_.set_raw(j.at("prior_counts").get< std::vector< std::uint64_t > >());
      l.train_steps_ = j.at("train_steps");
      for(const auto& t : j.at("buffer")) {
         l.buffer_.push(discrete_transition_from_json(t));
      }
      restore_rng(l.rng_, j.at("rng").get< std::string >());
      return l;
   }

 private:
   QLearnerConfig cfg_;
   soft::JointQTable q_;
   soft::JointQTable q_target_;
   EmpiricalCounts counts_;
   ReplayBuffer< DiscreteTransition > buffer_;
   Rng rng_;
   std::size_t train_steps_ = 0;
};

}  // namespace rommeo
