#pragma once

// Multi-trial experiment execution and result persistence.

#include <atomic>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <iomanip>
#include <thread>

#include "rommeo/harness/config.hpp"

namespace rommeo::harness {

namespace fs = std::filesystem;

struct TrialResult {
   std::size_t trial = 0;
   std::uint64_t seed = 0;
   bool failed = false;
   std::string error;
   std::vector< std::string > columns;
   /// One row per episode, aligned with `columns`.
   std::vector< std::vector< double > > rows;
   bool converged = false;
   double final_reward = 0.0;
   double window_reward = 0.0;
   /// Matrix games: joint probability of the payoff-maximizing joint action.
   double final_joint_prob = 0.0;
   /// First episode at which agent i's opponent model puts >= 0.9 on the
   /// opponent's optimal action, and at which the opponent's own policy does.
   /// -1 when never reached.
   std::array< long, 2 > model_first{-1, -1};
   std::array< long, 2 > opponent_policy_first{-1, -1};
   std::array< json, 2 > checkpoints;

   [[nodiscard]] std::vector< double > column(const std::string& name) const
   {
      auto it = std::find(columns.begin(), columns.end(), name);
      require(it != columns.end(), "no column '" + name + "'");
      auto c = std::size_t(it - columns.begin());
      std::vector< double > out;
      out.reserve(rows.size());
      for(const auto& r : rows) {
         out.push_back(r[c]);
      }
      return out;
   }
};

/// Per-episode hook for callers that want to observe a trial as it runs.
using EpisodeCallback = std::function< void(std::size_t episode, const std::vector< double >& row) >;

namespace detail {

inline char action_letter(std::size_t a) { return char('A' + a); }

inline std::pair< std::size_t, std::size_t > best_joint_action(const MatrixGame& g)
{
   std::pair< std::size_t, std::size_t > best{0, 0};
   double v = -std::numeric_limits< double >::infinity();
   for(std::size_t a = 0; a < g.num_actions(0); ++a) {
      for(std::size_t b = 0; b < g.num_actions(1); ++b) {
         double s = g.payoff(0, a, b) + g.payoff(1, a, b);
         if(s > v) {
            v = s;
            best = {a, b};
         }
      }
   }
   return best;
}

inline void finish_rewards(TrialResult& res, const ExperimentConfig& cfg)
{
   auto r = res.column("mean_reward");
   res.final_reward = r.back();
   double w = 0.0;
   for(std::size_t k = r.size() - cfg.reward_window; k < r.size(); ++k) {
      w += r[k];
   }
   res.window_reward = w / double(cfg.reward_window);
}

}  // namespace detail

inline TrialResult run_discrete_trial(const ExperimentConfig& cfg, std::size_t trial,
                                      const EpisodeCallback& cb = {})
{
   TrialResult res;
   res.trial = trial;
   res.seed = cfg.seed + trial;
   MatrixGame g = make_matrix_game(cfg.game);
   std::array< std::unique_ptr< DiscreteLearner >, 2 > ag{
      make_discrete_learner(cfg.agents[0], g, 0, agent_seed(cfg.seed, trial, 0)),
      make_discrete_learner(cfg.agents[1], g, 1, agent_seed(cfg.seed, trial, 1))};
   auto [opt_a, opt_b] = detail::best_joint_action(g);
   std::array< std::size_t, 2 > opt{opt_a, opt_b};
   std::size_t n1 = g.num_actions(0), n2 = g.num_actions(1);

   res.columns = {"episode", "mean_reward"};
   for(std::size_t a = 0; a < n1; ++a) {
      for(std::size_t b = 0; b < n2; ++b) {
         res.columns.push_back(std::string("p_") + detail::action_letter(a) + detail::action_letter(b));
      }
   }
   for(std::size_t i = 0; i < 2; ++i) {
      std::string ai = std::to_string(i + 1);
      std::string ao(1, detail::action_letter(opt[i]));
      std::string bo(1, detail::action_letter(opt[1 - i]));
      res.columns.push_back("pi" + ai + "_" + ao);
      res.columns.push_back("rho" + ai + "_" + bo);
      res.columns.push_back("emp" + ai + "_" + bo);
   }
   res.columns.push_back("action1");
   res.columns.push_back("action2");

   for(std::size_t e = 0; e < cfg.episodes; ++e) {
      Episode< MatrixGame > ep(g, cfg.steps_per_episode);
      double total = 0.0;
      std::array< std::size_t, 2 > joint{};
      while(! ep.done()) {
         StateId s = ep.state();
         joint = {ag[0]->act(s), ag[1]->act(s)};
         auto step = ep.step(joint);
         total += step.rewards[0];
         for(std::size_t i = 0; i < 2; ++i) {
            ag[i]->observe({s, joint[i], joint[1 - i], std::nullopt, step.s_next, step.rewards[i], step.done});
         }
         ag[0]->update();
         ag[1]->update();
      }
      ag[0]->end_episode();
      ag[1]->end_episode();

      std::array< std::vector< double >, 2 > pol{ag[0]->policy(kStatelessState), ag[1]->policy(kStatelessState)};
      std::vector< double > row{double(e), total / double(cfg.steps_per_episode)};
      for(std::size_t a = 0; a < n1; ++a) {
         for(std::size_t b = 0; b < n2; ++b) {
            row.push_back(pol[0][a] * pol[1][b]);
         }
      }
      for(std::size_t i = 0; i < 2; ++i) {
         auto model = ag[i]->opponent_estimate(kStatelessState);
         auto emp = ag[i]->empirical_opponent(kStatelessState);
         row.push_back(pol[i][opt[i]]);
         row.push_back(model[opt[1 - i]]);
         row.push_back(emp[opt[1 - i]]);
         if(res.model_first[i] < 0 && model[opt[1 - i]] >= 0.9) {
            res.model_first[i] = long(e);
         }
         if(res.opponent_policy_first[i] < 0 && pol[1 - i][opt[1 - i]] >= 0.9) {
            res.opponent_policy_first[i] = long(e);
         }
      }
      row.push_back(double(joint[0]));
      row.push_back(double(joint[1]));
      if(cb) {
         cb(e, row);
      }
      res.rows.push_back(std::move(row));
   }
   auto p1 = ag[0]->policy(kStatelessState);
   auto p2 = ag[1]->policy(kStatelessState);
   res.final_joint_prob = p1[opt[0]] * p2[opt[1]];
   res.converged = res.final_joint_prob >= cfg.converge_joint_prob;
   detail::finish_rewards(res, cfg);
   if(cfg.save_checkpoints) {
      res.checkpoints = {ag[0]->checkpoint(), ag[1]->checkpoint()};
   }
   return res;
}

inline TrialResult run_continuous_trial(const ExperimentConfig& cfg, std::size_t trial,
                                        const EpisodeCallback& cb = {})
{
   TrialResult res;
   res.trial = trial;
   res.seed = cfg.seed + trial;
   DifferentialGame g;
   std::array< ac::ACAgent, 2 > ag{ac::ACAgent(cfg.agents[0].ac, agent_seed(cfg.seed, trial, 0)),
                                   ac::ACAgent(cfg.agents[1].ac, agent_seed(cfg.seed, trial, 1))};
   res.columns = {"episode", "mean_reward", "action1_mean", "action2_mean", "pi1_mean",
                  "pi2_mean",  "rho1_mean",   "rho2_mean",    "rejected_steps"};
   for(std::size_t e = 0; e < cfg.episodes; ++e) {
      Episode< DifferentialGame > ep(g, cfg.steps_per_episode);
      double total = 0.0, a1 = 0.0, a2 = 0.0;
      while(! ep.done()) {
         StateId s = ep.state();
         auto [x1, m1] = ag[0].act(s);
         auto [x2, m2] = ag[1].act(s);
         auto step = ep.step({x1, x2});
         total += step.rewards[0];
         a1 += x1;
         a2 += x2;
         ag[0].observe({s, x1, x2, m1, step.s_next, step.rewards[0], step.done});
         ag[1].observe({s, x2, x1, m2, step.s_next, step.rewards[1], step.done});
         ag[0].update();
         ag[1].update();
      }
      double n = double(cfg.steps_per_episode);
      std::vector< double > row{double(e),
                                total / n,
                                a1 / n,
                                a2 / n,
                                ag[0].policy_mean(kStatelessState),
                                ag[1].policy_mean(kStatelessState),
                                ag[0].opponent_model_mean(kStatelessState),
                                ag[1].opponent_model_mean(kStatelessState),
                                double(ag[0].rejected_steps() + ag[1].rejected_steps())};
      for(double v : row) {
         if(! std::isfinite(v)) {
            throw std::runtime_error("non-finite metric in episode " + std::to_string(e));
         }
      }
      if(cb) {
         cb(e, row);
      }
      res.rows.push_back(std::move(row));
   }
   detail::finish_rewards(res, cfg);
   res.converged = res.final_reward >= cfg.converge_reward;
   if(cfg.save_checkpoints) {
      res.checkpoints = {ag[0].checkpoint(), ag[1].checkpoint()};
   }
   return res;
}

/// Runs one trial; any exception marks the trial failed instead of escaping.
inline TrialResult run_trial(const ExperimentConfig& cfg, std::size_t trial, const EpisodeCallback& cb = {})
{
   try {
      return is_discrete(cfg.game) ? run_discrete_trial(cfg, trial, cb) : run_continuous_trial(cfg, trial, cb);
   } catch(const std::exception& e) {
      TrialResult r;
      r.trial = trial;
      r.seed = cfg.seed + trial;
      r.failed = true;
      r.error = e.what();
      return r;
   }
}

/// Runs all trials on up to cfg.workers threads. Results come back sorted by
/// trial index regardless of scheduling.
inline std::vector< TrialResult > run_trials(const ExperimentConfig& cfg)
{
   std::vector< TrialResult > out(cfg.trials);
   std::atomic< std::size_t > next{0};
   auto work = [&] {
      for(std::size_t k = next++; k < cfg.trials; k = next++) {
         out[k] = run_trial(cfg, k);
      }
   };
   std::size_t n = std::min(cfg.workers, cfg.trials);
   if(n <= 1) {
      work();
      return out;
   }
   std::vector< std::jthread > pool;
   for(std::size_t w = 0; w < n; ++w) {
      pool.emplace_back(work);
   }
   pool.clear();
   return out;
}

// ---------------------------------------------------------------------------
// aggregation and persistence

struct Summary {
   std::size_t trials = 0;
   std::size_t failed = 0;
   std::size_t converged = 0;
   std::size_t reward_hits = 0;
   std::size_t lead_trials = 0;
   std::size_t lead_hits = 0;
   double mean_final_reward = 0.0;

   [[nodiscard]] double convergence_rate() const { return trials ? double(converged) / double(trials) : 0.0; }
   [[nodiscard]] double reward_rate() const { return trials ? double(reward_hits) / double(trials) : 0.0; }
   [[nodiscard]] double lead_rate() const { return lead_trials ? double(lead_hits) / double(lead_trials) : 0.0; }
};

/// Agent 0's opponent model reached the threshold no later than agent 1's
/// policy did.
inline bool model_leads(const TrialResult& r)
{
   return r.model_first[0] >= 0 && (r.opponent_policy_first[0] < 0 || r.model_first[0] <= r.opponent_policy_first[0]);
}

inline Summary summarize(const ExperimentConfig& cfg, const std::vector< TrialResult >& results)
{
   Summary s;
   s.trials = results.size();
   double total = 0.0;
   std::size_t ok = 0;
   for(const auto& r : results) {
      if(r.failed) {
         ++s.failed;
         continue;
      }
      ++ok;
      total += r.final_reward;
      s.converged += r.converged;
      s.reward_hits += r.window_reward >= cfg.reward_target;
      if(r.converged && is_discrete(cfg.game)) {
         ++s.lead_trials;
         s.lead_hits += model_leads(r);
      }
   }
   s.mean_final_reward = ok ? total / double(ok) : 0.0;
   return s;
}

inline std::string format_number(double v)
{
   if(v == std::floor(v) && std::abs(v) < 1e15) {
      return std::to_string(static_cast< long long >(v));
   }
   std::ostringstream os;
   os << std::setprecision(10) << v;
   return os.str();
}

inline void write_csv(const TrialResult& r, const fs::path& file)
{
   std::ofstream out(file);
   if(! out) {
      throw std::runtime_error("cannot write " + file.string());
   }
   for(std::size_t c = 0; c < r.columns.size(); ++c) {
      out << (c ? "," : "") << r.columns[c];
   }
   out << "\n";
   for(const auto& row : r.rows) {
      for(std::size_t c = 0; c < row.size(); ++c) {
         out << (c ? "," : "") << format_number(row[c]);
      }
      out << "\n";
   }
}

inline std::string utc_timestamp()
{
   auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
   std::tm tm{};
   gmtime_r(&t, &tm);
   std::ostringstream os;
   os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
   return os.str();
}

inline json summary_json(const ExperimentConfig& cfg, const std::vector< TrialResult >& results, double seconds)
{
   Summary s = summarize(cfg, results);
   json trials = json::array();
   for(const auto& r : results) {
      json t{{"trial", r.trial}, {"seed", r.seed}, {"failed", r.failed}};
      if(r.failed) {
         t["error"] = r.error;
      } else {
         t["converged"] = r.converged;
         t["final_reward"] = r.final_reward;
         t["window_reward"] = r.window_reward;
         if(is_discrete(cfg.game)) {
            t["final_joint_prob"] = r.final_joint_prob;
            t["model_first"] = r.model_first;
            t["opponent_policy_first"] = r.opponent_policy_first;
         }
      }
      trials.push_back(std::move(t));
   }
   json j{{"name", cfg.name},
          {"version", kVersion},
          {"config", effective_config(cfg)},
          {"learners",
           {{"agent1", to_string(cfg.agents[0].kind)}, {"agent2", to_string(cfg.agents[1].kind)}}},
          {"trials", s.trials},
          {"failed_trials", s.failed},
          {"converged_trials", s.converged},
          {"convergence_rate", s.convergence_rate()},
          {"mean_final_reward", s.mean_final_reward},
          {"reward_window", cfg.reward_window},
          {"reward_target", cfg.reward_target},
          {"reward_target_rate", s.reward_rate()},
          {"per_trial", trials},
          {"metadata", {{"timestamp", utc_timestamp()}, {"seconds", seconds}, {"workers", cfg.workers}}}};
   if(is_discrete(cfg.game)) {
      j["model_leads_trials"] = s.lead_trials;
      j["model_leads_rate"] = s.lead_rate();
   }
   return j;
}

/// Writes config.json, trial_<k>.csv and summary.json into cfg.out.
inline json write_results(const ExperimentConfig& cfg, const std::vector< TrialResult >& results, double seconds)
{
   fs::path dir(cfg.out);
   fs::create_directories(dir);
   std::ofstream(dir / "config.json") << effective_config(cfg).dump(2) << "\n";
   for(const auto& r : results) {
      if(! r.failed) {
         write_csv(r, dir / ("trial_" + std::to_string(r.trial) + ".csv"));
         if(cfg.save_checkpoints) {
            std::ofstream(dir / ("trial_" + std::to_string(r.trial) + "_checkpoint.json"))
               << json{{"agent1", r.checkpoints[0]}, {"agent2", r.checkpoints[1]}}.dump() << "\n";
         }
      }
   }
   json summary = summary_json(cfg, results, seconds);
   std::ofstream(dir / "summary.json") << summary.dump(2) << "\n";
   return summary;
}

inline json run_experiment(const ExperimentConfig& cfg)
{
   auto t0 = std::chrono::steady_clock::now();
   auto results = run_trials(cfg);
   double sec = std::chrono::duration< double >(std::chrono::steady_clock::now() - t0).count();
   return write_results(cfg, results, sec);
}

}  // namespace rommeo::harness
