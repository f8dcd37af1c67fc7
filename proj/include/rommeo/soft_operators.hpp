#pragma once

// Exact tabular soft value machinery for two-agent games with a regularized
// opponent model: soft state value, closed-form policy / opponent-model
// extraction, the soft Bellman operator and its fixed point, policy-pair
// evaluation, the alternating improvement steps and the variational objective.
//
// Tables are always indexed from the learning agent's point of view:
// own action `a`, opponent action `b`.

#include <cmath>
#include <utility>
#include <vector>

#include "rommeo/common.hpp"
#include "rommeo/game.hpp"

namespace rommeo::soft {

/// Mass mixed into every prior entry before renormalizing.
inline constexpr double kPriorSmoothing = 1e-6;

class JointQTable {
 public:
   JointQTable() = default;
   JointQTable(std::size_t n_states, std::size_t n_own, std::size_t n_opp, double fill = 0.0)
       : n_states_(n_states), n_own_(n_own), n_opp_(n_opp), values_(n_states * n_own * n_opp, fill)
   {
   }

   [[nodiscard]] std::size_t num_states() const { return n_states_; }
   [[nodiscard]] std::size_t num_own() const { return n_own_; }
   [[nodiscard]] std::size_t num_opp() const { return n_opp_; }

   double& operator()(std::size_t s, std::size_t a, std::size_t b) { return values_[index(s, a, b)]; }
   double operator()(std::size_t s, std::size_t a, std::size_t b) const { return values_[index(s, a, b)]; }

   [[nodiscard]] std::span< const double > values() const { return values_; }
   [[nodiscard]] std::span< double > values() { return values_; }

   [[nodiscard]] bool same_shape(const JointQTable& o) const
   {
      return n_states_ == o.n_states_ && n_own_ == o.n_own_ && n_opp_ == o.n_opp_;
   }

   /// Sup-norm distance.
   [[nodiscard]] double distance(const JointQTable& o) const
   {
      require(same_shape(o), "Q tables differ in shape");
      double d = 0.0;
      for(std::size_t k = 0; k < values_.size(); ++k) {
         d = std::max(d, std::abs(values_[k] - o.values_[k]));
      }
      return d;
   }

   JointQTable& operator+=(double c)
   {
      for(double& v : values_) {
         v += c;
      }
      return *this;
   }

   friend bool operator==(const JointQTable&, const JointQTable&) = default;

 private:
   [[nodiscard]] std::size_t index(std::size_t s, std::size_t a, std::size_t b) const
   {
      return (s * n_own_ + a) * n_opp_ + b;
   }

   std::size_t n_states_ = 0;
   std::size_t n_own_ = 0;
   std::size_t n_opp_ = 0;
   std::vector< double > values_;
};

/// Per-state distribution over a fixed action set. Backs the prior and the
/// opponent model.
class StateDistribution {
 public:
   StateDistribution() = default;
   StateDistribution(std::size_t n_states, std::size_t n_actions, std::vector< double > probs)
       : n_states_(n_states), n_actions_(n_actions), probs_(std::move(probs))
   {
      require(probs_.size() == n_states_ * n_actions_, "distribution table has wrong size");
      for(std::size_t s = 0; s < n_states_; ++s) {
         require(is_distribution(row(s), 1e-9), "distribution row is not normalized");
      }
   }

   static StateDistribution uniform(std::size_t n_states, std::size_t n_actions)
   {
      return {n_states, n_actions, std::vector< double >(n_states * n_actions, 1.0 / double(n_actions))};
   }

   [[nodiscard]] std::size_t num_states() const { return n_states_; }
   [[nodiscard]] std::size_t num_actions() const { return n_actions_; }
   [[nodiscard]] std::span< const double > row(std::size_t s) const
   {
      return std::span< const double >(probs_).subspan(s * n_actions_, n_actions_);
   }
   double operator()(std::size_t s, std::size_t b) const { return probs_[s * n_actions_ + b]; }
   [[nodiscard]] std::span< const double > values() const { return probs_; }

 protected:
   std::size_t n_states_ = 0;
   std::size_t n_actions_ = 0;
   std::vector< double > probs_;
};

using OpponentModelTable = StateDistribution;

/// Empirical prior over opponent actions. Construction validates the input
/// rows and applies epsilon smoothing so every entry is strictly positive.
class OpponentPrior : public StateDistribution {
 public:
   OpponentPrior() = default;
   OpponentPrior(std::size_t n_states, std::size_t n_actions, std::vector< double > probs)
       : StateDistribution(n_states, n_actions, smooth(std::move(probs), n_actions))
   {
   }

   static OpponentPrior uniform(std::size_t n_states, std::size_t n_actions)
   {
      return {n_states, n_actions, std::vector< double >(n_states * n_actions, 1.0 / double(n_actions))};
   }

   [[nodiscard]] double log_prob(std::size_t s, std::size_t b) const { return std::log((*this)(s, b)); }

 private:
   static std::vector< double > smooth(std::vector< double > p, std::size_t n_actions)
   {
      require(n_actions > 0 && p.size() % n_actions == 0, "prior table has wrong size");
      for(std::size_t start = 0; start < p.size(); start += n_actions) {
         std::span< double > r(p.data() + start, n_actions);
         require(is_distribution(r, 1e-9), "prior row is not normalized");
         for(double& v : r) {
            v = (v + kPriorSmoothing) / (1.0 + double(n_actions) * kPriorSmoothing);
         }
      }
      return p;
   }
};

/// pi(a | s, b), rows over own actions `a`.
class ConditionalPolicyTable {
 public:
   ConditionalPolicyTable() = default;
   ConditionalPolicyTable(std::size_t n_states, std::size_t n_opp, std::size_t n_own, std::vector< double > probs)
       : n_states_(n_states), n_opp_(n_opp), n_own_(n_own), probs_(std::move(probs))
   {
      require(probs_.size() == n_states_ * n_opp_ * n_own_, "policy table has wrong size");
      for(std::size_t s = 0; s < n_states_; ++s) {
         for(std::size_t b = 0; b < n_opp_; ++b) {
            require(is_distribution(row(s, b), 1e-9), "policy row is not normalized");
         }
      }
   }

   static ConditionalPolicyTable uniform(std::size_t n_states, std::size_t n_opp, std::size_t n_own)
   {
      return {n_states, n_opp, n_own, std::vector< double >(n_states * n_opp * n_own, 1.0 / double(n_own))};
   }

   [[nodiscard]] std::size_t num_states() const { return n_states_; }
   [[nodiscard]] std::size_t num_opp() const { return n_opp_; }
   [[nodiscard]] std::size_t num_own() const { return n_own_; }

   [[nodiscard]] std::span< const double > row(std::size_t s, std::size_t b) const
   {
      return std::span< const double >(probs_).subspan((s * n_opp_ + b) * n_own_, n_own_);
   }
   double operator()(std::size_t s, std::size_t b, std::size_t a) const { return probs_[(s * n_opp_ + b) * n_own_ + a]; }
   [[nodiscard]] std::span< const double > values() const { return probs_; }

 private:
   std::size_t n_states_ = 0;
   std::size_t n_opp_ = 0;
   std::size_t n_own_ = 0;
   std::vector< double > probs_;
};

/// How the bootstrap term of a stateless game is read.
enum class Bootstrap {
   repeated,  ///< every step continues to the same state: gamma * V(s)
   terminal,  ///< every step ends the episode: bootstrap is zero
};

struct SoftConfig {
   double alpha = 1.0;
   double gamma = 0.0;
   double tol = 1e-10;
   std::size_t max_iter = 100000;
   Bootstrap bootstrap = Bootstrap::repeated;

   void validate() const
   {
      require(alpha > 0.0 && std::isfinite(alpha), "alpha must be > 0");
      require(gamma >= 0.0 && gamma < 1.0, "gamma must lie in [0, 1)");
      require(tol > 0.0, "tol must be > 0");
      require(max_iter >= 1, "max_iter must be >= 1");
   }

   [[nodiscard]] double effective_gamma() const { return bootstrap == Bootstrap::terminal ? 0.0 : gamma; }
};

struct SoftSolution {
   JointQTable q_star;
   std::vector< double > v_star;
   ConditionalPolicyTable pi_star;
   OpponentModelTable rho_star;
   std::size_t iterations = 0;
   double residual = 0.0;
   std::vector< double > residual_history;
};

/// Reward table R(s, a, b) of `agent` in a matrix game, with the agent's own
/// action as the first action index.
inline JointQTable reward_table(const MatrixGame& game, std::size_t agent = 0)
{
   require(agent < 2, "agent index must be 0 or 1");
   std::size_t n_own = game.num_actions(agent);
   std::size_t n_opp = game.num_actions(1 - agent);
   JointQTable r(1, n_own, n_opp);
   for(std::size_t a = 0; a < n_own; ++a) {
      for(std::size_t b = 0; b < n_opp; ++b) {
         r(0, a, b) = agent == 0 ? game.payoff(0, a, b) : game.payoff(1, b, a);
      }
   }
   return r;
}

namespace detail {

inline void check_prior_shape(const JointQTable& q, const StateDistribution& p)
{
   require(p.num_states() == q.num_states() && p.num_actions() == q.num_opp(),
           "prior shape does not match the Q table");
}

/// alpha * log sum_a exp(Q(s, a, b) / alpha)
inline double soft_max_own(const JointQTable& q, std::size_t s, std::size_t b, double alpha)
{
   std::vector< double > logits(q.num_own());
   for(std::size_t a = 0; a < q.num_own(); ++a) {
      logits[a] = q(s, a, b) / alpha;
   }
   return alpha * log_sum_exp(logits);
}

/// log P(b|s) + alpha * log sum_a exp(Q/alpha), the unnormalized log opponent weight.
inline std::vector< double > opponent_log_weights(const JointQTable& q, const OpponentPrior& prior, std::size_t s,
                                                  double alpha)
{
   std::vector< double > w(q.num_opp());
   for(std::size_t b = 0; b < q.num_opp(); ++b) {
      w[b] = prior.log_prob(s, b) + soft_max_own(q, s, b, alpha);
   }
   return w;
}

}  // namespace detail

/// V(s) = log sum_b P(b|s) (sum_a exp(Q(s,a,b)/alpha))^alpha
inline std::vector< double > soft_value(const JointQTable& q, const OpponentPrior& prior, double alpha)
{
   require(alpha > 0.0, "alpha must be > 0");
   detail::check_prior_shape(q, prior);
   std::vector< double > v(q.num_states());
   for(std::size_t s = 0; s < q.num_states(); ++s) {
      require(is_distribution(prior.row(s), 1e-9), "prior row is not normalized");
      v[s] = log_sum_exp(detail::opponent_log_weights(q, prior, s, alpha));
   }
   return v;
}

/// pi(a | s, b) = softmax_a(Q(s, a, b) / alpha)
inline ConditionalPolicyTable extract_policy(const JointQTable& q, double alpha)
{
   require(alpha > 0.0, "alpha must be > 0");
   std::vector< double > probs(q.num_states() * q.num_opp() * q.num_own());
   std::vector< double > logits(q.num_own());
   for(std::size_t s = 0; s < q.num_states(); ++s) {
      for(std::size_t b = 0; b < q.num_opp(); ++b) {
         for(std::size_t a = 0; a < q.num_own(); ++a) {
            logits[a] = q(s, a, b) / alpha;
         }
         softmax_inplace(logits);
         std::copy(logits.begin(), logits.end(), probs.begin() + std::ptrdiff_t((s * q.num_opp() + b) * q.num_own()));
      }
   }
   return {q.num_states(), q.num_opp(), q.num_own(), std::move(probs)};
}

/// rho(b | s) = P(b|s) (sum_a exp(Q/alpha))^alpha / exp(V(s))
inline OpponentModelTable extract_opponent_model(const JointQTable& q, const OpponentPrior& prior, double alpha)
{
   require(alpha > 0.0, "alpha must be > 0");
   detail::check_prior_shape(q, prior);
   std::vector< double > probs;
   probs.reserve(q.num_states() * q.num_opp());
   for(std::size_t s = 0; s < q.num_states(); ++s) {
      auto w = detail::opponent_log_weights(q, prior, s, alpha);
      softmax_inplace(w);
      probs.insert(probs.end(), w.begin(), w.end());
   }
   return {q.num_states(), q.num_opp(), std::move(probs)};
}

/// (TQ)(s,a,b) = R(s,a,b) + gamma * V_Q(s); stateless games bootstrap into
/// the same state, or not at all under Bootstrap::terminal.
inline JointQTable bellman_operator(const JointQTable& q, const JointQTable& reward, const OpponentPrior& prior,
                                    const SoftConfig& cfg)
{
   cfg.validate();
   require(q.same_shape(reward), "Q and reward tables differ in shape");
   JointQTable out = reward;
   double g = cfg.effective_gamma();
   if(g == 0.0) {
      return out;
   }
   auto v = soft_value(q, prior, cfg.alpha);
   for(std::size_t s = 0; s < q.num_states(); ++s) {
      for(std::size_t a = 0; a < q.num_own(); ++a) {
         for(std::size_t b = 0; b < q.num_opp(); ++b) {
            out(s, a, b) += g * v[s];
         }
      }
   }
   return out;
}

inline JointQTable bellman_operator(const JointQTable& q, const MatrixGame& game, const OpponentPrior& prior,
                                    const SoftConfig& cfg, std::size_t agent = 0)
{
   return bellman_operator(q, reward_table(game, agent), prior, cfg);
}

/// Iterates the soft Bellman operator from Q = 0 until the sup-norm step is
/// at most cfg.tol. Throws ConvergenceError after cfg.max_iter iterations.
inline SoftSolution solve_fixed_point(const JointQTable& reward, const OpponentPrior& prior, const SoftConfig& cfg)
{
   cfg.validate();
   detail::check_prior_shape(reward, prior);
   SoftSolution sol;
   JointQTable q(reward.num_states(), reward.num_own(), reward.num_opp(), 0.0);
   double residual = std::numeric_limits< double >::infinity();
   std::size_t it = 0;
   while(it < cfg.max_iter) {
      JointQTable next = bellman_operator(q, reward, prior, cfg);
      // Without a bootstrap T is constant, so T(Q) is already the fixed point.
      residual = cfg.effective_gamma() == 0.0 ? 0.0 : next.distance(q);
      q = std::move(next);
      ++it;
      sol.residual_history.push_back(residual);
      if(residual <= cfg.tol) {
         break;
      }
   }
   if(residual > cfg.tol) {
      throw ConvergenceError("soft Q-iteration did not converge", residual, it);
   }
   sol.v_star = soft_value(q, prior, cfg.alpha);
   sol.pi_star = extract_policy(q, cfg.alpha);
   sol.rho_star = extract_opponent_model(q, prior, cfg.alpha);
   sol.q_star = std::move(q);
   sol.iterations = it;
   sol.residual = residual;
   return sol;
}

inline SoftSolution solve_fixed_point(const MatrixGame& game, const OpponentPrior& prior, const SoftConfig& cfg,
                                      std::size_t agent = 0)
{
   return solve_fixed_point(reward_table(game, agent), prior, cfg);
}

/// Soft state value of a fixed pair (pi, rho) against Q:
/// sum_b rho(b) [alpha H(pi(.|b)) + E_pi Q(.,b)] - KL(rho || P)
inline std::vector< double > pair_state_value(const JointQTable& q, const ConditionalPolicyTable& pi,
                                              const OpponentModelTable& rho, const OpponentPrior& prior, double alpha)
{
   std::vector< double > w(q.num_states(), 0.0);
   for(std::size_t s = 0; s < q.num_states(); ++s) {
      double acc = 0.0;
      for(std::size_t b = 0; b < q.num_opp(); ++b) {
         auto prow = pi.row(s, b);
         double inner = alpha * entropy(prow);
         for(std::size_t a = 0; a < q.num_own(); ++a) {
            inner += prow[a] * q(s, a, b);
         }
         acc += rho(s, b) * inner;
      }
      w[s] = acc - kl_divergence(rho.row(s), prior.row(s));
   }
   return w;
}

namespace detail {

inline void check_pair_shapes(const JointQTable& r, const ConditionalPolicyTable& pi, const OpponentModelTable& rho,
                              const OpponentPrior& prior)
{
   require(pi.num_states() == r.num_states() && pi.num_opp() == r.num_opp() && pi.num_own() == r.num_own(),
           "policy shape does not match the reward table");
   require(rho.num_states() == r.num_states() && rho.num_actions() == r.num_opp(),
           "opponent model shape does not match the reward table");
   check_prior_shape(r, prior);
}

}  // namespace detail

/// Q^{pi,rho} by iterative policy evaluation:
/// Q <- R + gamma * [sum_b rho(b)(alpha H(pi(.|b)) + E_pi Q) - KL(rho || P)]
inline JointQTable evaluate_policy_pair(const JointQTable& reward, const ConditionalPolicyTable& pi,
                                        const OpponentModelTable& rho, const OpponentPrior& prior,
                                        const SoftConfig& cfg)
{
   cfg.validate();
   detail::check_pair_shapes(reward, pi, rho, prior);
   double g = cfg.effective_gamma();
   JointQTable q = reward;
   if(g == 0.0) {
      return q;
   }
   for(std::size_t it = 0; it < cfg.max_iter; ++it) {
      auto w = pair_state_value(q, pi, rho, prior, cfg.alpha);
      JointQTable next = reward;
      for(std::size_t s = 0; s < q.num_states(); ++s) {
         for(std::size_t a = 0; a < q.num_own(); ++a) {
            for(std::size_t b = 0; b < q.num_opp(); ++b) {
               next(s, a, b) += g * w[s];
            }
         }
      }
      double residual = next.distance(q);
      q = std::move(next);
      if(residual <= cfg.tol) {
         return q;
      }
      if(it + 1 == cfg.max_iter) {
         throw ConvergenceError("policy-pair evaluation did not converge", residual, cfg.max_iter);
      }
   }
   return q;
}

inline ConditionalPolicyTable policy_improvement_step(const JointQTable& q, double alpha)
{
   return extract_policy(q, alpha);
}

/// rho~(b|s) proportional to exp(sum_a pi(a|s,b) Q(s,a,b) + alpha H(pi(.|s,b)) + log P(b|s))
inline OpponentModelTable opponent_improvement_step(const JointQTable& q, const ConditionalPolicyTable& pi,
                                                    const OpponentPrior& prior, double alpha)
{
   require(alpha > 0.0, "alpha must be > 0");
   detail::check_prior_shape(q, prior);
   std::vector< double > probs;
   probs.reserve(q.num_states() * q.num_opp());
   std::vector< double > logits(q.num_opp());
   for(std::size_t s = 0; s < q.num_states(); ++s) {
      for(std::size_t b = 0; b < q.num_opp(); ++b) {
         auto prow = pi.row(s, b);
         double l = alpha * entropy(prow) + prior.log_prob(s, b);
         for(std::size_t a = 0; a < q.num_own(); ++a) {
            l += prow[a] * q(s, a, b);
         }
         logits[b] = l;
      }
      softmax_inplace(logits);
      probs.insert(probs.end(), logits.begin(), logits.end());
   }
   return {q.num_states(), q.num_opp(), std::move(probs)};
}

/// E_{b~rho, a~pi}[Q(s,a,b)] averaged uniformly over states.
inline double expected_q(const JointQTable& q, const ConditionalPolicyTable& pi, const OpponentModelTable& rho)
{
   double total = 0.0;
   for(std::size_t s = 0; s < q.num_states(); ++s) {
      for(std::size_t b = 0; b < q.num_opp(); ++b) {
         for(std::size_t a = 0; a < q.num_own(); ++a) {
            total += rho(s, b) * pi(s, b, a) * q(s, a, b);
         }
      }
   }
   return total / double(q.num_states());
}

/// One-step objective E_{rho,pi}[R + alpha H(pi)] - KL(rho || P), summed over
/// states, by exact enumeration.
inline double rommeo_objective(const JointQTable& reward, const ConditionalPolicyTable& pi,
                               const OpponentModelTable& rho, const OpponentPrior& prior, const SoftConfig& cfg)
{
   cfg.validate();
   detail::check_pair_shapes(reward, pi, rho, prior);
   auto w = pair_state_value(reward, pi, rho, prior, cfg.alpha);
   return std::accumulate(w.begin(), w.end(), 0.0);
}

inline double rommeo_objective(const MatrixGame& game, const ConditionalPolicyTable& pi,
                               const OpponentModelTable& rho, const OpponentPrior& prior, const SoftConfig& cfg,
                               std::size_t agent = 0)
{
   return rommeo_objective(reward_table(game, agent), pi, rho, prior, cfg);
}

/// Marginal pi(a|s) = sum_b pi(a|s,b) rho(b|s).
inline std::vector< double > marginal_policy(const ConditionalPolicyTable& pi, const StateDistribution& rho,
                                             std::size_t s)
{
   std::vector< double > m(pi.num_own(), 0.0);
   for(std::size_t b = 0; b < pi.num_opp(); ++b) {
      for(std::size_t a = 0; a < pi.num_own(); ++a) {
         m[a] += pi(s, b, a) * rho(s, b);
      }
   }
   return m;
}

/// argmax over (a, b) of pi(a|s,b) rho(b|s).
inline std::pair< std::size_t, std::size_t > joint_argmax(const ConditionalPolicyTable& pi,
                                                          const StateDistribution& rho, std::size_t s = 0)
{
   std::pair< std::size_t, std::size_t > best{0, 0};
   double best_p = -1.0;
   for(std::size_t b = 0; b < pi.num_opp(); ++b) {
      for(std::size_t a = 0; a < pi.num_own(); ++a) {
         double p = pi(s, b, a) * rho(s, b);
         if(p > best_p) {
            best_p = p;
            best = {a, b};
         }
      }
   }
   return best;
}

}  // namespace rommeo::soft
