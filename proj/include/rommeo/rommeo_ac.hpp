#pragma once

// Actor-critic learner for continuous two-agent games with a regularized
// opponent model. Four networks per agent:
//   critic      Q_w(s, a, b)           joint-action soft Q
//   policy      pi_theta(a | s, b)     conditional policy, squashed Gaussian
//   opponent    rho_phi(b | s)         model of the opponent's optimal play
//   prior       P_psi(b | s)           max-likelihood fit to real opponent play
// plus a Polyak-averaged target critic. `a` is the agent's own action and `b`
// the opponent's.
//
// Each objective is also exposed as a pure function of its network and frozen
// noise, returning the loss and its analytic parameter gradient.

#include <functional>
#include <vector>

#include "rommeo/game.hpp"
#include "rommeo/learner.hpp"
#include "rommeo/nn/mlp.hpp"
#include "rommeo/nn/optimizer.hpp"
#include "rommeo/nn/squashed_gaussian.hpp"
#include "rommeo/replay_buffer.hpp"

namespace rommeo::ac {

using nn::Matrix;
using nn::Mlp;
using nn::Vector;
using ContinuousTransition = Transition< double >;
using Batch = std::vector< ContinuousTransition >;

/// Feature fed for the (single) state of a stateless game.
inline constexpr double kStateFeature = 1.0;

struct ACConfig {
   double alpha = 1.0;
   double gamma = 0.95;
   double lr_q = 3e-4;
   double lr_pi = 3e-4;
   double lr_rho = 3e-4;
   double lr_prior = 3e-4;
   std::size_t batch = 64;
   double beta = 0.01;
   std::size_t target_interval = 1;
   std::vector< std::size_t > hidden{64, 64};
   nn::Activation activation = nn::Activation::tanh;
   nn::OptimizerKind optimizer = nn::OptimizerKind::adam;
   std::size_t buffer_capacity = 100000;
   nn::Bounds bounds{kDiffLow, kDiffHigh};
   /// Initial raw log-std of the distribution heads.
   double init_log_std = 0.0;

   void validate() const
   {
      require(alpha > 0.0, "alpha must be > 0");
      require(gamma >= 0.0 && gamma < 1.0, "gamma must lie in [0, 1)");
      require(lr_q > 0.0 && lr_pi > 0.0 && lr_rho > 0.0 && lr_prior > 0.0, "learning rates must be > 0");
      require(batch >= 1, "batch must be >= 1");
      require(beta > 0.0 && beta <= 1.0, "target blend must lie in (0, 1]");
      require(target_interval >= 1, "target interval must be >= 1");
      require(! hidden.empty(), "at least one hidden layer is required");
      require(bounds.low < bounds.high, "action bounds need low < high");
      require(buffer_capacity >= batch, "buffer must hold at least one batch");
   }
};

inline json to_json(const ACConfig& c)
{
   return {{"alpha", c.alpha},
           {"gamma", c.gamma},
           {"lr_q", c.lr_q},
           {"lr_pi", c.lr_pi},
           {"lr_rho", c.lr_rho},
           {"lr_prior", c.lr_prior},
           {"batch", c.batch},
           {"beta", c.beta},
           {"target_interval", c.target_interval},
           {"hidden", c.hidden},
           {"activation", nn::to_string(c.activation)},
           {"optimizer", c.optimizer == nn::OptimizerKind::sgd ? "sgd" : "adam"},
           {"buffer_capacity", c.buffer_capacity},
           {"bounds", {c.bounds.low, c.bounds.high}},
           {"init_log_std", c.init_log_std},
           {"log_std_clamp", {nn::kLogStdMin, nn::kLogStdMax}}};
}

struct LossGrad {
   double loss = 0.0;
   Vector grad;
};

// ---------------------------------------------------------------------------
// feature helpers

inline double action_feature(double a, const nn::Bounds& b) { return (a - b.mid()) / b.half(); }

/// Critic inputs [s, a, b] per column.
inline Matrix critic_inputs(std::span< const double > own, std::span< const double > opp, const nn::Bounds& bounds)
{
   Matrix x(3, Eigen::Index(own.size()));
   for(std::size_t n = 0; n < own.size(); ++n) {
      x(0, Eigen::Index(n)) = kStateFeature;
      x(1, Eigen::Index(n)) = action_feature(own[n], bounds);
      x(2, Eigen::Index(n)) = action_feature(opp[n], bounds);
   }
   return x;
}

/// Policy inputs [s, b] per column.
inline Matrix policy_inputs(std::span< const double > opp, const nn::Bounds& bounds)
{
   Matrix x(2, Eigen::Index(opp.size()));
   for(std::size_t n = 0; n < opp.size(); ++n) {
      x(0, Eigen::Index(n)) = kStateFeature;
      x(1, Eigen::Index(n)) = action_feature(opp[n], bounds);
   }
   return x;
}

/// State-only inputs [s] per column.
inline Matrix state_inputs(std::size_t n) { return Matrix::Constant(1, Eigen::Index(n), kStateFeature); }

inline nn::GaussianHead head_at(const Matrix& out, std::size_t n)
{
   return {out(0, Eigen::Index(n)), out(1, Eigen::Index(n))};
}

// ---------------------------------------------------------------------------
// objectives at frozen noise

/// mean over batch of 1/2 (Q(s, a, b_real) - y)^2
inline LossGrad critic_objective(const Mlp& q, const Batch& batch, std::span< const double > targets,
                                 const nn::Bounds& bounds)
{
   std::size_t n = batch.size();
   require(targets.size() == n, "one target per transition");
   std::vector< double > own(n), opp(n);
   for(std::size_t k = 0; k < n; ++k) {
      own[k] = batch[k].a_i;
      opp[k] = batch[k].a_opp;
   }
   Mlp::Cache cache;
   Matrix out = q.forward(critic_inputs(own, opp, bounds), &cache);
   Matrix up(1, Eigen::Index(n));
   double loss = 0.0;
   for(std::size_t k = 0; k < n; ++k) {
      double d = out(0, Eigen::Index(k)) - targets[k];
      loss += 0.5 * d * d;
      up(0, Eigen::Index(k)) = d / double(n);
   }
   auto [g, gx] = q.backward(cache, up);
   return {loss / double(n), std::move(g)};
}

/// mean over batch of alpha log pi(f(eps; s, b_hat)) - Q(s, f(eps; s, b_hat), b_hat)
inline LossGrad policy_objective(const Mlp& pi, const Mlp& q, std::span< const double > b_hat,
                                 std::span< const double > eps, double alpha, const nn::Bounds& bounds)
{
   std::size_t n = b_hat.size();
   require(eps.size() == n, "one noise draw per sample");
   Mlp::Cache pc;
   Matrix heads = pi.forward(policy_inputs(b_hat, bounds), &pc);
   std::vector< nn::SquashedSample > samples(n);
   std::vector< double > own(n);
   for(std::size_t k = 0; k < n; ++k) {
      samples[k] = nn::sample_squashed(head_at(heads, k), eps[k], bounds);
      own[k] = samples[k].action;
   }
   Mlp::Cache qc;
   Matrix qv = q.forward(critic_inputs(own, b_hat, bounds), &qc);
   auto [gq_unused, qx] = q.backward(qc, Matrix::Ones(1, Eigen::Index(n)));
   Matrix up(2, Eigen::Index(n));
   double loss = 0.0;
   for(std::size_t k = 0; k < n; ++k) {
      const auto& s = samples[k];
      auto kk = Eigen::Index(k);
      double dq_da = qx(1, kk) / bounds.half();
      loss += alpha * s.log_prob - qv(0, kk);
      up(0, kk) = (alpha * s.dlogp_dmean - dq_da * s.daction_dmean) / double(n);
      up(1, kk) = (alpha * s.dlogp_dlogstd - dq_da * s.daction_dlogstd) / double(n);
   }
   auto [g, gx] = pi.backward(pc, up);
   return {loss / double(n), std::move(g)};
}

/// mean over batch of
///   log rho(g(eps; s)) - log P(g(eps; s)) - Q(s, a_own, g(eps; s)) + alpha log pi(a_own | s, g(eps; s))
/// with a_own the agent's recorded action.
inline LossGrad opponent_objective(const Mlp& rho, const Mlp& pi, const Mlp& q, const Mlp& prior,
                                   std::span< const double > own, std::span< const double > eps, double alpha,
                                   const nn::Bounds& bounds)
{
   std::size_t n = own.size();
   require(eps.size() == n, "one noise draw per sample");
   Mlp::Cache rc;
   Matrix rheads = rho.forward(state_inputs(n), &rc);
   Matrix pheads = prior.forward(state_inputs(n));
   std::vector< nn::SquashedSample > samples(n);
   std::vector< double > b_hat(n);
   for(std::size_t k = 0; k < n; ++k) {
      samples[k] = nn::sample_squashed(head_at(rheads, k), eps[k], bounds);
      b_hat[k] = samples[k].action;
   }
   Mlp::Cache qc;
   Matrix qv = q.forward(critic_inputs(own, b_hat, bounds), &qc);
   auto [gq_unused, qx] = q.backward(qc, Matrix::Ones(1, Eigen::Index(n)));

   Mlp::Cache pic;
   Matrix piheads = pi.forward(policy_inputs(b_hat, bounds), &pic);
   Matrix pi_up(2, Eigen::Index(n));
   std::vector< double > log_pi(n);
   for(std::size_t k = 0; k < n; ++k) {
      auto d = nn::squashed_log_density(own[k], head_at(piheads, k), bounds);
      log_pi[k] = d.log_prob;
      pi_up(0, Eigen::Index(k)) = d.dmean;
      pi_up(1, Eigen::Index(k)) = d.dlogstd;
   }
   auto [gpi_unused, pix] = pi.backward(pic, pi_up);

   Matrix up(2, Eigen::Index(n));
   double loss = 0.0;
   for(std::size_t k = 0; k < n; ++k) {
      auto kk = Eigen::Index(k);
      const auto& s = samples[k];
      auto dp = nn::squashed_log_density(b_hat[k], head_at(pheads, k), bounds);
      double dq_db = qx(2, kk) / bounds.half();
      double dlogpi_db = pix(1, kk) / bounds.half();
      loss += s.log_prob - dp.log_prob - qv(0, kk) + alpha * log_pi[k];
      double dl_db = -dp.dx - dq_db + alpha * dlogpi_db;
      up(0, kk) = (s.dlogp_dmean + dl_db * s.daction_dmean) / double(n);
      up(1, kk) = (s.dlogp_dlogstd + dl_db * s.daction_dlogstd) / double(n);
   }
   auto [g, gx] = rho.backward(rc, up);
   return {loss / double(n), std::move(g)};
}

/// mean over batch of -log P(b_real | s)
inline LossGrad prior_objective(const Mlp& prior, std::span< const double > opp, const nn::Bounds& bounds)
{
   std::size_t n = opp.size();
   Mlp::Cache cache;
   Matrix heads = prior.forward(state_inputs(n), &cache);
   Matrix up(2, Eigen::Index(n));
   double loss = 0.0;
   for(std::size_t k = 0; k < n; ++k) {
      auto d = nn::squashed_log_density(opp[k], head_at(heads, k), bounds);
      loss -= d.log_prob;
      up(0, Eigen::Index(k)) = -d.dmean / double(n);
      up(1, Eigen::Index(k)) = -d.dlogstd / double(n);
   }
   auto [g, gx] = prior.backward(cache, up);
   return {loss / double(n), std::move(g)};
}

/// Target value component at a next state for frozen noise draws:
///   Q_bar(s', a', b') - log rho(b' | s') - alpha log pi(a' | s', b') + log P(b' | s')
/// with b' = g(eps_opp) from rho and a' = f(eps_own; b') from pi.
inline std::vector< double > v_bar_values(const Mlp& q_target, const Mlp& pi, const Mlp& rho, const Mlp& prior,
                                          std::span< const double > eps_opp, std::span< const double > eps_own,
                                          double alpha, const nn::Bounds& bounds)
{
   std::size_t n = eps_opp.size();
   require(eps_own.size() == n, "noise vectors differ in length");
   Matrix rheads = rho.forward(state_inputs(n));
   Matrix pheads = prior.forward(state_inputs(n));
   std::vector< double > b(n), a(n);
   for(std::size_t k = 0; k < n; ++k) {
      b[k] = nn::sample_squashed(head_at(rheads, k), eps_opp[k], bounds).action;
   }
   Matrix piheads = pi.forward(policy_inputs(b, bounds));
   for(std::size_t k = 0; k < n; ++k) {
      a[k] = nn::sample_squashed(head_at(piheads, k), eps_own[k], bounds).action;
   }
   Matrix qv = q_target.forward(critic_inputs(a, b, bounds));
   std::vector< double > out(n);
   for(std::size_t k = 0; k < n; ++k) {
      double log_rho = nn::squashed_log_density(b[k], head_at(rheads, k), bounds).log_prob;
      double log_pi = nn::squashed_log_density(a[k], head_at(piheads, k), bounds).log_prob;
      double log_p = nn::squashed_log_density(b[k], head_at(pheads, k), bounds).log_prob;
      out[k] = qv(0, Eigen::Index(k)) - log_rho - alpha * log_pi + log_p;
   }
   return out;
}

// ---------------------------------------------------------------------------

struct UpdateLosses {
   double critic = 0.0;
   double policy = 0.0;
   double opponent = 0.0;
   double prior = 0.0;
};

class ACAgent {
 public:
   ACAgent(ACConfig cfg, std::uint64_t seed) : cfg_(std::move(cfg)), buffer_(cfg_.buffer_capacity), rng_(seed)
   {
      cfg_.validate();
      std::vector< std::size_t > qw{3}, pw{2}, rw{1};
      for(auto h : cfg_.hidden) {
         qw.push_back(h);
         pw.push_back(h);
         rw.push_back(h);
      }
      qw.push_back(1);
      pw.push_back(2);
      rw.push_back(2);
      q_ = Mlp(qw, cfg_.activation);
      pi_ = Mlp(pw, cfg_.activation);
      rho_ = Mlp(rw, cfg_.activation);
      prior_ = Mlp(rw, cfg_.activation);
      q_.init(rng_, 1.0, 1.0);
      pi_.init(rng_, 1.0, 0.1);
      rho_.init(rng_, 1.0, 0.1);
      prior_.init(rng_, 1.0, 0.1);
      for(Mlp* head : {&pi_, &rho_, &prior_}) {
         head->bias(head->num_layers() - 1)(1) = cfg_.init_log_std;
      }
      q_target_ = q_;
      opt_q_ = nn::Optimizer(cfg_.optimizer, cfg_.lr_q);
      opt_pi_ = nn::Optimizer(cfg_.optimizer, cfg_.lr_pi);
      opt_rho_ = nn::Optimizer(cfg_.optimizer, cfg_.lr_rho);
      opt_prior_ = nn::Optimizer(cfg_.optimizer, cfg_.lr_prior);
   }

   [[nodiscard]] const ACConfig& config() const { return cfg_; }
   [[nodiscard]] ACConfig& config() { return cfg_; }
   [[nodiscard]] Mlp& q_net() { return q_; }
   [[nodiscard]] Mlp& q_target_net() { return q_target_; }
   [[nodiscard]] Mlp& pi_net() { return pi_; }
   [[nodiscard]] Mlp& rho_net() { return rho_; }
   [[nodiscard]] Mlp& prior_net() { return prior_; }
   [[nodiscard]] const Mlp& q_net() const { return q_; }
   [[nodiscard]] const Mlp& q_target_net() const { return q_target_; }
   [[nodiscard]] const Mlp& pi_net() const { return pi_; }
   [[nodiscard]] const Mlp& rho_net() const { return rho_; }
   [[nodiscard]] const Mlp& prior_net() const { return prior_; }
   [[nodiscard]] const ReplayBuffer< ContinuousTransition >& buffer() const { return buffer_; }
   [[nodiscard]] std::size_t update_steps() const { return updates_; }
   [[nodiscard]] std::size_t rejected_steps() const { return rejected_; }
   [[nodiscard]] Rng& rng() { return rng_; }

   [[nodiscard]] nn::GaussianHead rho_head(StateId) const { return head_at(rho_.forward(state_inputs(1)), 0); }
   [[nodiscard]] nn::GaussianHead prior_head(StateId) const { return head_at(prior_.forward(state_inputs(1)), 0); }
   [[nodiscard]] nn::GaussianHead pi_head(StateId, double b) const
   {
      std::array< double, 1 > bb{b};
      return head_at(pi_.forward(policy_inputs(bb, cfg_.bounds)), 0);
   }

   /// Squashed mean of the opponent model.
   [[nodiscard]] double opponent_model_mean(StateId s) const { return nn::squash(rho_head(s).mean, cfg_.bounds); }

   /// Squashed mean of the policy conditioned on the opponent model's mean.
   [[nodiscard]] double policy_mean(StateId s) const
   {
      return nn::squash(pi_head(s, opponent_model_mean(s)).mean, cfg_.bounds);
   }

   /// Samples b_hat from the opponent model, then a from pi(. | s, b_hat).
   std::pair< double, double > act(StateId s)
   {
      double e1 = standard_normal(rng_);
      double e2 = standard_normal(rng_);
      double b = nn::sample_squashed(rho_head(s), e1, cfg_.bounds).action;
      double a = nn::sample_squashed(pi_head(s, b), e2, cfg_.bounds).action;
      return {a, b};
   }

   void observe(const ContinuousTransition& t)
   {
      require(std::isfinite(t.r), "reward must be finite");
      require(t.a_i > cfg_.bounds.low && t.a_i < cfg_.bounds.high && t.a_opp >= cfg_.bounds.low
                 && t.a_opp <= cfg_.bounds.high,
              "transition actions outside the action box");
      buffer_.push(t);
   }

   /// Soft target value component at s_next for given noise draws.
   [[nodiscard]] std::vector< double > v_bar(std::span< const double > eps_opp, std::span< const double > eps_own) const
   {
      return v_bar_values(q_target_, pi_, rho_, prior_, eps_opp, eps_own, cfg_.alpha, cfg_.bounds);
   }

   double v_bar(StateId)
   {
      std::array< double, 1 > e1{standard_normal(rng_)};
      std::array< double, 1 > e2{standard_normal(rng_)};
      return v_bar(e1, e2)[0];
   }

   /// Regression targets y = r, or r + gamma * V_bar(s') for non-terminal s'.
   std::vector< double > targets(const Batch& batch)
   {
      std::size_t n = batch.size();
      std::vector< double > e1(n), e2(n);
      for(std::size_t k = 0; k < n; ++k) {
         e1[k] = standard_normal(rng_);
         e2[k] = standard_normal(rng_);
      }
      std::vector< double > y(n);
      bool any_live = std::any_of(batch.begin(), batch.end(), [](const auto& t) { return ! t.done; });
      std::vector< double > vb;
      if(any_live && cfg_.gamma > 0.0) {
         vb = v_bar(e1, e2);
      }
      for(std::size_t k = 0; k < n; ++k) {
         y[k] = batch[k].r;
         if(! batch[k].done && ! vb.empty()) {
            y[k] += cfg_.gamma * vb[k];
         }
      }
      return y;
   }

   double update_critic(const Batch& batch)
   {
      auto y = targets(batch);
      return apply(critic_objective(q_, batch, y, cfg_.bounds), q_, opt_q_);
   }

   double update_policy(const Batch& batch)
   {
      std::size_t n = batch.size();
      Matrix rheads = rho_.forward(state_inputs(n));
      std::vector< double > b(n), eps(n);
      for(std::size_t k = 0; k < n; ++k) {
         b[k] = nn::sample_squashed(head_at(rheads, k), standard_normal(rng_), cfg_.bounds).action;
         eps[k] = standard_normal(rng_);
      }
      return apply(policy_objective(pi_, q_, b, eps, cfg_.alpha, cfg_.bounds), pi_, opt_pi_);
   }

   double update_opponent_model(const Batch& batch)
   {
      std::size_t n = batch.size();
      std::vector< double > own(n), eps(n);
      for(std::size_t k = 0; k < n; ++k) {
         own[k] = batch[k].a_i;
         eps[k] = standard_normal(rng_);
      }
      return apply(opponent_objective(rho_, pi_, q_, prior_, own, eps, cfg_.alpha, cfg_.bounds), rho_, opt_rho_);
   }

   double update_prior(const Batch& batch)
   {
      std::vector< double > opp(batch.size());
      for(std::size_t k = 0; k < batch.size(); ++k) {
         opp[k] = batch[k].a_opp;
      }
      return apply(prior_objective(prior_, opp, cfg_.bounds), prior_, opt_prior_);
   }

   /// target <- beta * online + (1 - beta) * target
   void sync_target() { q_target_.params() = cfg_.beta * q_.params() + (1.0 - cfg_.beta) * q_target_.params(); }

   /// One round of updates on a sampled batch, in the order critic, policy,
   /// opponent model, prior, target sync. No-op until the buffer holds a
   /// full batch.
   std::optional< UpdateLosses > update()
   {
      if(buffer_.size() < cfg_.batch) {
         return std::nullopt;
      }
      auto batch = buffer_.sample(cfg_.batch, rng_);
      UpdateLosses l;
      l.critic = update_critic(batch);
      l.policy = update_policy(batch);
      l.opponent = update_opponent_model(batch);
      l.prior = update_prior(batch);
      ++updates_;
      if(updates_ % cfg_.target_interval == 0) {
         sync_target();
      }
      return l;
   }

   [[nodiscard]] bool parameters_finite() const
   {
      return q_.params().allFinite() && q_target_.params().allFinite() && pi_.params().allFinite()
             && rho_.params().allFinite() && prior_.params().allFinite();
   }

   [[nodiscard]] json checkpoint() const
   {
      return {{"kind", "rommeo_ac"},
              {"config", to_json(cfg_)},
              {"q", q_.to_json()},
              {"q_target", q_target_.to_json()},
              {"pi", pi_.to_json()},
              {"rho", rho_.to_json()},
              {"prior", prior_.to_json()},
              {"opt_q", opt_q_.to_json()},
              {"opt_pi", opt_pi_.to_json()},
              {"opt_rho", opt_rho_.to_json()},
              {"opt_prior", opt_prior_.to_json()},
              {"updates", updates_},
              {"rng", rng_state(rng_)}};
   }

   /// Restores networks, optimizer moments and RNG into an agent built
   /// with a matching config. The replay buffer is not part of the checkpoint.
   void restore(const json& j)
   {
      auto load = [](Mlp& net, const json& jn) {
         Mlp other = Mlp::from_json(jn);
         require(other.widths() == net.widths(), "checkpoint network shape does not match the config");
         net = std::move(other);
      };
      load(q_, j.at("q"));
      load(q_target_, j.at("q_target"));
      load(pi_, j.at("pi"));
      load(rho_, j.at("rho"));
      load(prior_, j.at("prior"));
      opt_q_ = nn::Optimizer::from_json(j.at("opt_q"));
      opt_pi_ = nn::Optimizer::from_json(j.at("opt_pi"));
      opt_rho_ = nn::Optimizer::from_json(j.at("opt_rho"));
      opt_prior_ = nn::Optimizer::from_json(j.at("opt_prior"));
      updates_ = j.at("updates");
      restore_rng(rng_, j.at("rng").get< std::string >());
   }

 private:
   double apply(const LossGrad& lg, Mlp& net, nn::Optimizer& opt)
   {
      if(! std::isfinite(lg.loss) || ! lg.grad.allFinite()) {
         ++rejected_;
         return lg.loss;
      }
      opt.step(net.params(), lg.grad);
      return lg.loss;
   }

   ACConfig cfg_;
   Mlp q_, q_target_, pi_, rho_, prior_;
   nn::Optimizer opt_q_, opt_pi_, opt_rho_, opt_prior_;
   ReplayBuffer< ContinuousTransition > buffer_;
   Rng rng_;
   std::size_t updates_ = 0;
   std::size_t rejected_ = 0;
};

}  // namespace rommeo::ac
