// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <chrono>
#include <cstdio>
#include <functional>
#include <string>
#include <thread>

#include "rommeo/harness/check.hpp"
#include "rommeo/harness/config.hpp"
#include "rommeo/harness/runner.hpp"

#ifndef ROMMEO_CONFIG_DIR
#define ROMMEO_CONFIG_DIR "configs"
#endif

using namespace rommeo;
using namespace rommeo::harness;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
   bool pass = false;
   std::string detail;
};

int failures = 0;

void criterion(int id, const std::string& title, double time_limit, const std::function< Outcome() >& body)
{
   auto t0 = Clock::now();
   Outcome o;
   try {
      o = body();
   } catch(const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
   }
   double sec = std::chrono::duration< double >(Clock::now() - t0).count();
   bool in_time = time_limit <= 0.0 || sec < time_limit;
   bool pass = o.pass && in_time;
   failures += ! pass;
   std::printf("[%s] %2d %s: %s (%.2fs%s)\n", pass ? "PASS" : "FAIL", id, title.c_str(), o.detail.c_str(), sec,
               in_time ? "" : ", over time limit");
   std::fflush(stdout);
}

std::string fmt(const char* f, auto... args)
{
   char buf[512];
   std::snprintf(buf, sizeof buf, f, args...);
   return buf;
}

std::size_t workers() { return std::max(1u, std::thread::hardware_concurrency()); }

ExperimentConfig load(const std::string& name)
{
   auto c = load_config(std::string(ROMMEO_CONFIG_DIR) + "/" + name);
   c.workers = workers();
   return c;
}

Outcome all_pass(const std::vector< PropertyResult >& results)
{
   Outcome o{true, ""};
   for(const auto& r : results) {
      o.pass = o.pass && r.pass;
      o.detail += fmt("%s%s worst %.3g (n=%zu)", o.detail.empty() ? "" : "; ", r.property.c_str(), r.worst, r.samples);
   }
   return o;
}

}  // namespace

int main()
{
   std::printf("acceptance run, %zu worker threads\n", workers());

   criterion(1, "exact solver on the climbing game", 1.0, [] {
      auto game = climbing_game();
      auto sol = soft::solve_fixed_point(game, soft::OpponentPrior::uniform(1, 3), soft::SoftConfig{});
      // oracle: closed forms with Q = R, uniform prior, alpha = 1
      double z[3], total = 0.0, worst = 0.0;
      for(std::size_t b = 0; b < 3; ++b) {
         z[b] = 0.0;
         for(std::size_t a = 0; a < 3; ++a) {
            z[b] += std::exp(game.payoff(0, a, b));
         }
         total += z[b] / 3.0;
      }
      for(std::size_t b = 0; b < 3; ++b) {
         worst = std::max(worst, std::abs(sol.rho_star(0, b) - (z[b] / 3.0) / total));
         for(std::size_t a = 0; a < 3; ++a) {
            worst = std::max(worst, std::abs(sol.pi_star(0, b, a) - std::exp(game.payoff(0, a, b)) / z[b]));
         }
      }
      auto [a, b] = soft::joint_argmax(sol.pi_star, sol.rho_star);
      double rho_a = sol.rho_star(0, 0), pi_aa = sol.pi_star(0, 0, 0);
      bool ok = rho_a >= 0.970 && rho_a <= 0.977 && pi_aa >= 0.9999 && a == 0 && b == 0 && worst < 1e-12;
      return Outcome{ok, fmt("rho*(A)=%.5f pi*(A|A)=%.6f argmax (%c,%c) max|solver-oracle|=%.1e", rho_a, pi_aa,
                             char('A' + a), char('A' + b), worst)};
   });

   criterion(2, "soft Bellman operator is a gamma-contraction", 10.0, [] { return all_pass(check_contraction(1000)); });

   criterion(3, "alternating improvement is monotone", 30.0, [] { return all_pass(check_monotone(100, 10)); });

   Summary q_summary, emp_summary;
   criterion(4, "ROMMEO-Q on the climbing game", 60.0, [&] {
      auto cfg = load("icg_rommeo_q.json");
      auto results = run_trials(cfg);
      q_summary = summarize(cfg, results);
      double reward_rate = q_summary.reward_rate(), conv_rate = q_summary.convergence_rate();
      return Outcome{q_summary.failed == 0 && reward_rate >= 0.80 && conv_rate >= 0.70,
                     fmt("%zu trials, last-10 reward >= 10.5 in %.0f%% (need 80%%), P(A,A) >= 0.9 in %.0f%% (need 70%%)",
                         q_summary.trials, 100 * reward_rate, 100 * conv_rate)};
   });

   criterion(5, "ablation: ROMMEO-Q beats the empirical-opponent variant", 60.0, [&] {
      auto cfg = load("icg_rommeo_q_emp.json");
      emp_summary = summarize(cfg, run_trials(cfg));
      double gap = q_summary.convergence_rate() - emp_summary.convergence_rate();
      return Outcome{emp_summary.failed == 0 && gap >= 0.10,
                     fmt("convergence %.0f%% vs %.0f%%, gap %.0f points (need 10)", 100 * q_summary.convergence_rate(),
                         100 * emp_summary.convergence_rate(), 100 * gap)};
   });

   criterion(6, "opponent model leads the opponent's policy", 0.0, [&] {
      double rate = q_summary.lead_rate();
      return Outcome{q_summary.lead_trials > 0 && rate >= 0.60,
                     fmt("%zu of %zu converged trials (%.0f%%, need 60%%)", q_summary.lead_hits, q_summary.lead_trials,
                         100 * rate)};
   });

   criterion(7, "ROMMEO-AC on max of two quadratics", 600.0, [] {
      auto cfg = load("differential_rommeo_ac.json");
      cfg.trials = 10;
      auto results = run_trials(cfg);
      auto s = summarize(cfg, results);
      std::string finals;
      for(const auto& r : results) {
         finals += r.failed ? " failed" : fmt(" %.2f", r.final_reward);
      }
      return Outcome{s.failed == 0 && s.converged >= 7,
                     fmt("%zu/10 seeds with final reward >= 9.0 (need 7); finals:%s", s.converged, finals.c_str())};
   });

   criterion(8, "analytic gradients match finite differences", 0.0, [] { return all_pass(check_gradients(100)); });

   criterion(9, "V_bar estimator consistency at K=1e5", 0.0, [] { return all_pass(check_vbar(100000, 5)); });

   criterion(10, "environment spot checks", 0.0, [] {
      DifferentialGame d;
      bool ok = d.rewards({5.0, 5.0})[0] == 10.0 && d.rewards({-5.0, -5.0})[0] == 0.0;
      const double printed[3][3] = {{11, -30, 0}, {-30, 7, 6}, {0, 0, 5}};
      auto g = climbing_game();
      for(std::size_t a = 0; a < 3; ++a) {
         for(std::size_t b = 0; b < 3; ++b) {
            ok = ok && g.payoff(0, a, b) == printed[a][b] && g.payoff(1, a, b) == printed[a][b];
         }
      }
      return Outcome{ok, fmt("r(5,5)=%g r(-5,-5)=%g, climbing matrix %s", d.rewards({5.0, 5.0})[0],
                             d.rewards({-5.0, -5.0})[0], ok ? "matches" : "differs")};
   });

   std::printf("%d criteria failed\n", failures);
   return failures == 0 ? 0 : 1;
}
