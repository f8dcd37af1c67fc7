#pragma once

// Property suites run by `check`. Each suite draws randomized cases from a
// fixed seed, records the worst observed margin and, on a violation, the
// first failing case.

#include "rommeo/baselines.hpp"
#include "rommeo/nn/gradcheck.hpp"
#include "rommeo/rommeo_ac.hpp"
#include "rommeo/rommeo_q.hpp"
#include "rommeo/soft_operators.hpp"

namespace rommeo::harness {

struct PropertyResult {
   PropertyResult() = default;
   PropertyResult(std::string suite_id, std::string name) : suite(std::move(suite_id)), property(std::move(name)) {}

   std::string suite;
   std::string property;
   std::size_t samples = 0;
   /// Worst observed value of the checked quantity and the bound it must
   /// respect (worst <= bound, or worst >= bound when `at_least`).
   double worst = 0.0;
   double bound = 0.0;
   bool at_least = false;
   bool pass = true;
   json counterexample;

   void observe(double v, const std::function< json() >& describe)
   {
      ++samples;
      bool worse = samples == 1 || (at_least ? v < worst : v > worst);
      if(worse) {
         worst = v;
      }
      bool ok = at_least ? v >= bound : v <= bound;
      if(! ok && pass) {
         pass = false;
         counterexample = describe();
         counterexample["value"] = v;
      }
   }
};

inline json to_json(const PropertyResult& r)
{
   json j{{"suite", r.suite},         {"property", r.property}, {"samples", r.samples}, {"worst", r.worst},
          {"bound", r.bound},         {"pass", r.pass},         {"direction", r.at_least ? ">=" : "<="}};
   if(! r.pass) {
      j["counterexample"] = r.counterexample;
   }
   return j;
}

inline const std::vector< std::string >& suite_ids()
{
   static const std::vector< std::string > ids{"contraction", "monotone", "gradients",
                                               "vbar",        "fixed_point", "normalization"};
   return ids;
}

namespace detail {

inline double uniform(Rng& rng, double lo, double hi)
{
   return lo + (hi - lo) * std::generate_canonical< double, 53 >(rng);
}

inline std::size_t uniform_int(Rng& rng, std::size_t lo, std::size_t hi)
{
   return std::uniform_int_distribution< std::size_t >(lo, hi)(rng);
}

/// Random full-support distribution; `spread` controls how peaked it is.
inline std::vector< double > random_distribution(std::size_t n, Rng& rng, double spread = 1.5)
{
   std::vector< double > p(n);
   for(auto& x : p) {
      x = spread * standard_normal(rng);
   }
   softmax_inplace(p);
   return p;
}

inline soft::JointQTable random_table(std::size_t na, std::size_t nb, Rng& rng, double scale)
{
   soft::JointQTable q(1, na, nb);
   for(auto& v : q.values()) {
      v = uniform(rng, -scale, scale);
   }
   return q;
}

inline json table_json(const soft::JointQTable& q)
{
   return {{"n_own", q.num_own()}, {"n_opp", q.num_opp()}, {"values", q.values()}};
}

inline soft::OpponentPrior random_prior(std::size_t nb, Rng& rng) { return {1, nb, random_distribution(nb, rng)}; }

inline std::vector< double > vector_of(const nn::Vector& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace detail

/// ||T Q1 - T Q2|| <= gamma ||Q1 - Q2|| + 1e-9 on random games.
inline std::vector< PropertyResult > check_contraction(std::size_t cases = 1000, std::uint64_t seed = 1)
{
   Rng rng(seed);
   PropertyResult excess{"contraction", "sup-norm excess over gamma * ||Q1 - Q2|| (alpha = 1)"};
   excess.bound = 1e-9;
   PropertyResult ratio{"contraction", "worst ratio ||TQ1 - TQ2|| / (gamma ||Q1 - Q2||)"};
   ratio.bound = 1.0 + 1e-9;
   for(std::size_t c = 0; c < cases; ++c) {
      std::size_t na = detail::uniform_int(rng, 1, 4), nb = detail::uniform_int(rng, 1, 4);
      double gamma = c % 2 ? 0.9 : 0.5;
      auto r = detail::random_table(na, nb, rng, 20.0);
      auto prior = detail::random_prior(nb, rng);
      auto q1 = detail::random_table(na, nb, rng, 50.0);
      auto q2 = detail::random_table(na, nb, rng, 50.0);
      soft::SoftConfig cfg;
      cfg.gamma = gamma;
      cfg.alpha = 1.0;
      double lhs = soft::bellman_operator(q1, r, prior, cfg).distance(soft::bellman_operator(q2, r, prior, cfg));
      double d = q1.distance(q2);
      auto describe = [&] {
         return json{{"gamma", gamma},          {"reward", detail::table_json(r)}, {"prior", prior.values()},
                     {"q1", detail::table_json(q1)}, {"q2", detail::table_json(q2)}};
      };
      excess.observe(lhs - gamma * d, describe);
      if(d > 0.0) {
         ratio.observe(lhs / (gamma * d), describe);
      }
   }
   return {excess, ratio};
}

/// Alternating policy / opponent-model improvement never lowers the pair's
/// value: E_{pi,rho}[Q^{pi,rho}], the regularized value V^{pi,rho}, and Q^{pi,rho}
/// pointwise.
inline std::vector< PropertyResult > check_monotone(std::size_t games = 100, std::size_t rounds = 10,
                                                    std::uint64_t seed = 2)
{
   Rng rng(seed);
   PropertyResult value{"monotone", "largest decrease of V^{pi,rho} across an improvement round"};
   value.bound = 1e-9;
   PropertyResult pointwise{"monotone", "largest pointwise decrease of Q^{pi,rho} across an improvement round"};
   pointwise.bound = 1e-9;
   PropertyResult expected{"monotone", "largest decrease of E_{pi,rho}[Q^{pi,rho}] across an improvement round"};
   expected.bound = 1e-9;
   for(std::size_t g = 0; g < games; ++g) {
      std::size_t na = detail::uniform_int(rng, 2, 4), nb = detail::uniform_int(rng, 2, 4);
      auto r = detail::random_table(na, nb, rng, 10.0);
      auto prior = soft::OpponentPrior::uniform(1, nb);
      soft::SoftConfig cfg;
      cfg.gamma = g % 2 ? 0.9 : 0.0;
      auto pi = soft::ConditionalPolicyTable::uniform(1, nb, na);
      auto rho = soft::OpponentModelTable::uniform(1, nb);
      auto q = soft::evaluate_policy_pair(r, pi, rho, prior, cfg);
      double v = soft::pair_state_value(q, pi, rho, prior, cfg.alpha)[0];
      double eq = soft::expected_q(q, pi, rho);
      for(std::size_t k = 0; k < rounds; ++k) {
         auto pi_next = soft::policy_improvement_step(q, cfg.alpha);
         auto rho_next = soft::opponent_improvement_step(q, pi_next, prior, cfg.alpha);
         auto q_next = soft::evaluate_policy_pair(r, pi_next, rho_next, prior, cfg);
         double v_next = soft::pair_state_value(q_next, pi_next, rho_next, prior, cfg.alpha)[0];
         double eq_next = soft::expected_q(q_next, pi_next, rho_next);
         double drop = 0.0;
         for(std::size_t i = 0; i < q.values().size(); ++i) {
            drop = std::max(drop, q.values()[i] - q_next.values()[i]);
         }
         auto describe = [&] {
            return json{{"game", g}, {"round", k}, {"gamma", cfg.gamma}, {"reward", detail::table_json(r)},
                        {"value_before", v}, {"value_after", v_next}};
         };
         value.observe(v - v_next, describe);
         pointwise.observe(drop, describe);
         expected.observe(eq - eq_next, describe);
         pi = std::move(pi_next);
         rho = std::move(rho_next);
         q = std::move(q_next);
         v = v_next;
         eq = eq_next;
      }
   }
   return {expected, value, pointwise};
}

namespace detail {

inline nn::Mlp random_mlp(std::vector< std::size_t > widths, Rng& rng, double output_gain = 0.5)
{
   nn::Mlp net(std::move(widths), nn::Activation::tanh);
   net.init(rng, 1.0, output_gain);
   for(std::size_t l = 0; l < net.num_layers(); ++l) {
      for(Eigen::Index i = 0; i < net.bias(l).size(); ++i) {
         net.bias(l)(i) = 0.1 * standard_normal(rng);
      }
   }
   return net;
}

/// Random head network with log-std outputs well inside the clamp range.
inline nn::Mlp random_head(std::size_t in, Rng& rng)
{
   auto net = random_mlp({in, 6, 5, 2}, rng, 0.3);
   net.bias(net.num_layers() - 1)(1) = uniform(rng, -1.5, 0.5);
   return net;
}

inline double gradient_error(nn::Mlp& net, const nn::Vector& analytic,
                             const std::function< double(const nn::Mlp&) >& loss)
{
   nn::Mlp probe = net;
   auto f = [&](const nn::Vector& p) {
      probe.params() = p;
      return loss(probe);
   };
   return nn::max_relative_error(analytic, nn::finite_difference(f, net.params()));
}

}  // namespace detail

/// Analytic gradients against central finite differences at frozen noise.
inline std::vector< PropertyResult > check_gradients(std::size_t cases = 100, std::uint64_t seed = 3)
{
   constexpr double tol = 1e-4;
   Rng rng(seed);
   std::vector< PropertyResult > out;
   auto make = [&](const std::string& what) {
      PropertyResult p{"gradients", what};
      p.bound = tol;
      return p;
   };

   auto mlp_params = make("mlp parameter gradient");
   auto mlp_inputs = make("mlp input gradient");
   for(std::size_t c = 0; c < cases; ++c) {
      std::vector< std::size_t > widths{detail::uniform_int(rng, 1, 4)};
      std::size_t depth = detail::uniform_int(rng, 1, 3);
      for(std::size_t l = 0; l < depth; ++l) {
         widths.push_back(detail::uniform_int(rng, 1, 8));
      }
      widths.push_back(detail::uniform_int(rng, 1, 3));
      auto net = detail::random_mlp(widths, rng, 1.0);
      auto b = Eigen::Index(detail::uniform_int(rng, 1, 5));
      nn::Matrix x = nn::Matrix::NullaryExpr(Eigen::Index(widths.front()), b, [&] { return standard_normal(rng); });
      nn::Matrix up = nn::Matrix::NullaryExpr(Eigen::Index(widths.back()), b, [&] { return standard_normal(rng); });
      nn::Mlp::Cache cache;
      net.forward(x, &cache);
      auto [gp, gx] = net.backward(cache, up);
      auto describe = [&] { return json{{"widths", widths}, {"params", detail::vector_of(net.params())}}; };
      mlp_params.observe(
         detail::gradient_error(net, gp, [&](const nn::Mlp& n) { return (n.forward(x).array() * up.array()).sum(); }),
         describe);
      nn::Vector flat_x = Eigen::Map< nn::Vector >(x.data(), x.size());
      nn::Vector flat_gx = Eigen::Map< nn::Vector >(gx.data(), gx.size());
      auto fx = [&](const nn::Vector& v) {
         nn::Matrix xm = Eigen::Map< const nn::Matrix >(v.data(), x.rows(), x.cols());
         return (net.forward(xm).array() * up.array()).sum();
      };
      mlp_inputs.observe(nn::max_relative_error(flat_gx, nn::finite_difference(fx, flat_x)), describe);
   }
   out.push_back(mlp_params);
   out.push_back(mlp_inputs);

   auto sample_grad = make("squashed sample: action and log-prob w.r.t. (mean, log_std)");
   auto density_grad = make("squashed log-density w.r.t. (mean, log_std, x), x via its pre-squash coordinate");
   for(std::size_t c = 0; c < cases; ++c) {
      nn::Bounds bd{detail::uniform(rng, -12, -1), 0.0};
      bd.high = bd.low + detail::uniform(rng, 0.5, 20);
      nn::GaussianHead h{detail::uniform(rng, -2, 2), detail::uniform(rng, -3, 1.5)};
      double eps = standard_normal(rng);
      auto s = nn::sample_squashed(h, eps, bd);
      nn::Vector p(2);
      p << h.mean, h.log_std;
      auto act = [&](const nn::Vector& v) { return nn::sample_squashed({v(0), v(1)}, eps, bd).action; };
      auto lp = [&](const nn::Vector& v) { return nn::sample_squashed({v(0), v(1)}, eps, bd).log_prob; };
      nn::Vector ga(2), gl(2);
      ga << s.daction_dmean, s.daction_dlogstd;
      gl << s.dlogp_dmean, s.dlogp_dlogstd;
      auto describe = [&] {
         return json{{"mean", h.mean}, {"log_std", h.log_std}, {"eps", eps}, {"low", bd.low}, {"high", bd.high}};
      };
      sample_grad.observe(std::max(nn::max_relative_error(ga, nn::finite_difference(act, p)),
                                   nn::max_relative_error(gl, nn::finite_difference(lp, p))),
                          describe);
      // x is reached through its pre-squash coordinate r; a fixed step in x
      // is ill-conditioned within ~1e-5 of the box edge
      double r = h.mean + std::exp(nn::clamped_log_std(h.log_std)) * standard_normal(rng);
      auto x_of = [&](double raw) { return nn::squash(raw, bd); };
      double x = x_of(r);
      auto d = nn::squashed_log_density(x, h, bd);
      double u = (x - bd.mid()) / bd.half();
      nn::Vector q(3), gd(3);
      q << h.mean, h.log_std, r;
      gd << d.dmean, d.dlogstd, d.dx * bd.half() * (1.0 - u * u);
      auto dens = [&](const nn::Vector& v) { return nn::squashed_log_density(x_of(v(2)), {v(0), v(1)}, bd).log_prob; };
      density_grad.observe(nn::max_relative_error(gd, nn::finite_difference(dens, q)), [&] {
         auto j = describe();
         j["raw"] = r;
         return j;
      });
   }
   out.push_back(sample_grad);
   out.push_back(density_grad);

   auto critic = make("critic loss");
   auto policy = make("policy loss");
   auto opponent = make("opponent-model loss");
   auto prior = make("prior loss");
   nn::Bounds bd{kDiffLow, kDiffHigh};
   for(std::size_t c = 0; c < cases; ++c) {
      std::size_t n = detail::uniform_int(rng, 1, 6);
      double alpha = detail::uniform(rng, 0.05, 2.0);
      auto qn = detail::random_mlp({3, 6, 5, 1}, rng, 1.0);
      auto pin = detail::random_head(2, rng);
      auto rhon = detail::random_head(1, rng);
      auto priorn = detail::random_head(1, rng);
      ac::Batch batch(n);
      std::vector< double > y(n), own(n), opp(n), e1(n), e2(n);
      for(std::size_t k = 0; k < n; ++k) {
         batch[k].a_i = own[k] = detail::uniform(rng, -9.5, 9.5);
         batch[k].a_opp = opp[k] = detail::uniform(rng, -9.5, 9.5);
         y[k] = detail::uniform(rng, -5, 5);
         e1[k] = standard_normal(rng);
         e2[k] = standard_normal(rng);
      }
      auto describe = [&] { return json{{"batch", n}, {"alpha", alpha}, {"own", own}, {"opp", opp}}; };
      critic.observe(
         detail::gradient_error(qn, ac::critic_objective(qn, batch, y, bd).grad,
                                [&](const nn::Mlp& m) { return ac::critic_objective(m, batch, y, bd).loss; }),
         describe);
      policy.observe(detail::gradient_error(
                        pin, ac::policy_objective(pin, qn, opp, e1, alpha, bd).grad,
                        [&](const nn::Mlp& m) { return ac::policy_objective(m, qn, opp, e1, alpha, bd).loss; }),
                     describe);
      opponent.observe(detail::gradient_error(rhon, ac::opponent_objective(rhon, pin, qn, priorn, own, e2, alpha, bd).grad,
                                              [&](const nn::Mlp& m) {
                                                 return ac::opponent_objective(m, pin, qn, priorn, own, e2, alpha, bd)
                                                    .loss;
                                              }),
                       describe);
      prior.observe(
         detail::gradient_error(priorn, ac::prior_objective(priorn, opp, bd).grad,
                                [&](const nn::Mlp& m) { return ac::prior_objective(m, opp, bd).loss; }),
         describe);
   }
   out.push_back(critic);
   out.push_back(policy);
   out.push_back(opponent);
   out.push_back(prior);
   return out;
}

/// Importance-sampled V_bar against the exact soft value at alpha = 1, with
/// fixed tabular pi, rho and Q_bar on the climbing game.
inline std::vector< PropertyResult > check_vbar(std::size_t k = 100000, std::size_t cases = 5, std::uint64_t seed = 4)
{
   Rng rng(seed);
   PropertyResult p{"vbar", "|V_bar estimate - exact soft value| on the climbing game, alpha = 1"};
   p.bound = 1e-2;
   auto game = climbing_game();
   auto qbar = soft::reward_table(game, 0);
   for(auto& v : qbar.values()) {
      v /= 10.0;
   }
   for(std::size_t c = 0; c < cases; ++c) {
      std::vector< double > pi_probs;
      for(std::size_t b = 0; b < 3; ++b) {
         auto row = detail::random_distribution(3, rng, 0.7);
         pi_probs.insert(pi_probs.end(), row.begin(), row.end());
      }
      soft::ConditionalPolicyTable pi(1, 3, 3, pi_probs);
      soft::OpponentModelTable rho(1, 3, detail::random_distribution(3, rng, 0.7));
      auto prior = detail::random_prior(3, rng);
      double exact = soft::soft_value(qbar, prior, 1.0)[0];
      double est = estimate_v_bar(qbar, pi, rho, prior, 1.0, kStatelessState, k, rng);
      p.observe(std::abs(est - exact), [&] {
         return json{{"pi", pi.values()}, {"rho", rho.values()}, {"prior", prior.values()}, {"exact", exact},
                     {"estimate", est}, {"k", k}};
      });
   }
   return {p};
}

/// Exact solver on the climbing game plus fixed-point consistency.
inline std::vector< PropertyResult > check_fixed_point(std::uint64_t seed = 5)
{
   std::vector< PropertyResult > out;
   auto game = climbing_game();
   soft::SoftConfig cfg;
   auto sol = soft::solve_fixed_point(game, soft::OpponentPrior::uniform(1, 3), cfg);
   auto describe = [&] {
      return json{{"q_star", sol.q_star.values()}, {"pi_star", sol.pi_star.values()}, {"rho_star", sol.rho_star.values()}};
   };
   PropertyResult lo{"fixed_point", "climbing rho*(A) lower bound (gamma 0, alpha 1, uniform prior)"};
   lo.bound = 0.970;
   lo.at_least = true;
   lo.observe(sol.rho_star(0, 0), describe);
   PropertyResult hi{"fixed_point", "climbing rho*(A) upper bound"};
   hi.bound = 0.977;
   hi.observe(sol.rho_star(0, 0), describe);
   PropertyResult pa{"fixed_point", "climbing pi*(A|A)"};
   pa.bound = 0.9999;
   pa.at_least = true;
   pa.observe(sol.pi_star(0, 0, 0), describe);
   PropertyResult am{"fixed_point", "climbing joint argmax is (A,A) (1 = yes)"};
   am.bound = 1.0;
   am.at_least = true;
   auto [a, b] = soft::joint_argmax(sol.pi_star, sol.rho_star);
   am.observe(a == 0 && b == 0 ? 1.0 : 0.0, describe);
   out = {lo, hi, pa, am};

   Rng rng(seed);
   PropertyResult fp{"fixed_point", "||T Q* - Q*|| on random games (gamma 0.9)"};
   fp.bound = 1e-8;
   for(std::size_t c = 0; c < 50; ++c) {
      std::size_t na = detail::uniform_int(rng, 1, 4), nb = detail::uniform_int(rng, 1, 4);
      auto r = detail::random_table(na, nb, rng, 10.0);
      auto prior = detail::random_prior(nb, rng);
      soft::SoftConfig g;
      g.gamma = 0.9;
      g.alpha = detail::uniform(rng, 0.2, 2.0);
      auto s = soft::solve_fixed_point(r, prior, g);
      fp.observe(soft::bellman_operator(s.q_star, r, prior, g).distance(s.q_star),
                 [&] { return json{{"reward", detail::table_json(r)}, {"alpha", g.alpha}}; });
   }
   out.push_back(fp);
   return out;
}

/// Every extracted or learned distribution stays on the simplex.
inline std::vector< PropertyResult > check_normalization(std::size_t cases = 200, std::uint64_t seed = 6)
{
   Rng rng(seed);
   auto simplex_gap = [](std::span< const double > p) {
      double s = 0.0, neg = 0.0;
      for(double x : p) {
         s += x;
         neg = std::max(neg, -x);
      }
      return std::max(std::abs(s - 1.0), neg);
   };
   PropertyResult ext{"normalization", "extracted pi*, rho* distance from the simplex"};
   ext.bound = 1e-12;
   for(std::size_t c = 0; c < cases; ++c) {
      std::size_t na = detail::uniform_int(rng, 1, 5), nb = detail::uniform_int(rng, 1, 5);
      auto q = detail::random_table(na, nb, rng, 200.0);
      auto prior = detail::random_prior(nb, rng);
      double alpha = std::exp(detail::uniform(rng, -3, 2));
      auto pi = soft::extract_policy(q, alpha);
      auto rho = soft::extract_opponent_model(q, prior, alpha);
      double gap = simplex_gap(rho.row(0));
      for(std::size_t b = 0; b < nb; ++b) {
         gap = std::max(gap, simplex_gap(pi.row(0, b)));
      }
      ext.observe(gap, [&] { return json{{"q", detail::table_json(q)}, {"alpha", alpha}}; });
   }

   PropertyResult learned{"normalization", "learner policies and opponent estimates distance from the simplex"};
   learned.bound = 1e-12;
   auto game = climbing_game();
   for(auto kind : {BaselineKind::jal, BaselineKind::wolf_phc, BaselineKind::fmq, BaselineKind::rommeo_q_emp}) {
      BaselineConfig bc;
      bc.kind = kind;
      std::array< std::unique_ptr< DiscreteLearner >, 2 > ag{
         make_baseline(bc, game.action_space(0), game.action_space(1), seed),
         make_baseline(bc, game.action_space(1), game.action_space(0), seed + 1)};
      std::array< std::unique_ptr< DiscreteLearner >, 1 > q{std::make_unique< QLearner >(1, 3, 3, QLearnerConfig{}, seed)};
      for(std::size_t t = 0; t < 100; ++t) {
         std::array< std::size_t, 2 > j{ag[0]->act(0), ag[1]->act(0)};
         auto r = game.rewards(j);
         for(std::size_t i = 0; i < 2; ++i) {
            ag[i]->observe({0, j[i], j[1 - i], std::nullopt, 0, r[i], true});
            ag[i]->update();
         }
         std::size_t qa = q[0]->act(0);
         q[0]->observe({0, qa, j[1], std::nullopt, 0, game.rewards({qa, j[1]})[0], true});
         q[0]->update();
         for(const auto* l : {ag[0].get(), ag[1].get(), q[0].get()}) {
            double gap = std::max(simplex_gap(l->policy(0)), simplex_gap(l->opponent_estimate(0)));
            learned.observe(gap, [&] { return json{{"learner", l->name()}, {"step", t}}; });
         }
      }
   }
   return {ext, learned};
}

/// Runs one suite by id, or every suite for "all".
inline std::vector< PropertyResult > run_suite(const std::string& id)
{
   if(id.empty()) {
      throw ContractViolation("suite id must not be empty");
   }
   if(id == "all") {
      std::vector< PropertyResult > out;
      for(const auto& s : suite_ids()) {
         auto part = run_suite(s);
         out.insert(out.end(), part.begin(), part.end());
      }
      return out;
   }
   if(id == "contraction") {
      return check_contraction();
   }
   if(id == "monotone") {
      return check_monotone();
   }
   if(id == "gradients") {
      return check_gradients();
   }
   if(id == "vbar") {
      return check_vbar();
   }
   if(id == "fixed_point") {
      return check_fixed_point();
   }
   if(id == "normalization") {
      return check_normalization();
   }
   throw ContractViolation("unknown suite '" + id + "'");
}

inline json report_json(const std::vector< PropertyResult >& results)
{
   json props = json::array();
   bool pass = true;
   for(const auto& r : results) {
      props.push_back(to_json(r));
      pass = pass && r.pass;
   }
   return {{"version", kVersion}, {"pass", pass}, {"properties", props}};
}

}  // namespace rommeo::harness
