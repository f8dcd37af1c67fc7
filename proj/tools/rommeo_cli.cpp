// Command-line front end: run experiments, solve matrix games exactly, run
// property suites and render plots.

#include <chrono>
#include <iostream>

#include <CLI11.hpp>

#include "rommeo/harness/check.hpp"
#include "rommeo/harness/plot.hpp"
#include "rommeo/harness/runner.hpp"
#include "rommeo/harness/solve.hpp"

using namespace rommeo;
using namespace rommeo::harness;

namespace {

constexpr int kUsageError = 64;

int cmd_run(const std::string& config, std::optional< std::size_t > trials, std::optional< std::uint64_t > seed,
            std::optional< std::string > out, std::optional< std::size_t > workers, bool plot)
{
   ExperimentConfig cfg;
   try {
      cfg = load_config(config);
   } catch(const ConfigError& e) {
      std::cerr << "config error at " << (e.where().empty() ? "/" : e.where()) << ": " << e.what() << "\n";
      return 2;
   }
   if(trials) {
      if(*trials < 1) {
         std::cerr << "--trials must be >= 1\n";
         return kUsageError;
      }
      cfg.trials = *trials;
   }
   if(seed) {
      cfg.seed = *seed;
   }
   if(out) {
      cfg.out = *out;
   }
   if(workers) {
      cfg.workers = std::max< std::size_t >(1, *workers);
   }
   auto summary = run_experiment(cfg);
   std::cout << "wrote " << cfg.out << ": " << summary["trials"] << " trials, " << summary["failed_trials"]
             << " failed, convergence rate " << summary["convergence_rate"] << ", mean final reward "
             << summary["mean_final_reward"] << "\n";
   if(plot) {
      for(const auto& p : plot_results(cfg.out)) {
         std::cout << "wrote " << p.string() << "\n";
      }
   }
   return summary["failed_trials"].get< std::size_t >() == 0 ? 0 : 3;
}

int cmd_solve(const std::string& game_id, double alpha, double gamma, bool as_json)
{
   auto g = game_from_string(game_id);
   if(! g || ! is_discrete(*g)) {
      std::cerr << "unknown matrix game '" << game_id << "' (expected climbing or climbing_cc3)\n";
      return kUsageError;
   }
   soft::SoftConfig cfg;
   cfg.alpha = alpha;
   cfg.gamma = gamma;
   try {
      cfg.validate();
   } catch(const ContractViolation& e) {
      std::cerr << e.what() << "\n";
      return kUsageError;
   }
   auto game = make_matrix_game(*g);
   try {
      auto sol = soft::solve_fixed_point(game, soft::OpponentPrior::uniform(1, game.num_actions(1)), cfg);
      std::cout << (as_json ? solution_json(sol).dump(2) + "\n" : format_solution(sol));
   } catch(const ConvergenceError& e) {
      std::cerr << e.what() << " (residual " << e.residual() << " after " << e.iterations() << " iterations)\n";
      return 2;
   }
   return 0;
}

int cmd_check(const std::string& suite)
{
   if(suite.empty()) {
      std::cerr << "--suite must name a suite or 'all'\n";
      return kUsageError;
   }
   const auto& ids = suite_ids();
   if(suite != "all" && std::find(ids.begin(), ids.end(), suite) == ids.end()) {
      std::cerr << "unknown suite '" << suite << "'; choose one of all";
      for(const auto& s : ids) {
         std::cerr << ", " << s;
      }
      std::cerr << "\n";
      return kUsageError;
   }
   auto report = report_json(run_suite(suite));
   std::cout << report.dump(2) << "\n";
   return report["pass"].get< bool >() ? 0 : 1;
}

int cmd_plot(const std::string& dir)
{
   for(const auto& p : plot_results(dir)) {
      std::cout << "wrote " << p.string() << "\n";
   }
   return 0;
}

}  // namespace

int main(int argc, char** argv)
{
   CLI::App app{"ROMMEO multi-agent learning lab"};
   app.set_version_flag("--version", std::string(kVersion));
   app.require_subcommand(1);

   auto* run = app.add_subcommand("run", "run a multi-trial experiment from a JSON config");
   std::string config;
   std::optional< std::size_t > trials, workers;
   std::optional< std::uint64_t > seed;
   std::optional< std::string > out;
   bool plot_after = false;
   run->add_option("--config", config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
   run->add_option("--trials", trials, "override the number of trials");
   run->add_option("--seed", seed, "override the base seed");
   run->add_option("--out", out, "override the output directory");
   run->add_option("--workers", workers, "worker threads");
   run->add_flag("--plot", plot_after, "write SVG plots after the run");

   auto* solve = app.add_subcommand("solve", "solve a matrix game's soft fixed point exactly");
   std::string game;
   double alpha = 1.0, gamma = 0.0;
   bool as_json = false;
   solve->add_option("--game", game, "climbing | climbing_cc3")->required();
   solve->add_option("--alpha", alpha, "temperature");
   solve->add_option("--gamma", gamma, "discount");
   solve->add_flag("--json", as_json, "print JSON instead of tables");

   auto* check = app.add_subcommand("check", "run property suites and print a JSON report");
   std::string suite;
   check->add_option("--suite", suite, "suite id or 'all'")->required();

   auto* plot = app.add_subcommand("plot", "render SVG charts for a results directory");
   std::string results;
   plot->add_option("--results", results, "results directory")->required()->check(CLI::ExistingDirectory);

   try {
      app.parse(argc, argv);
   } catch(const CLI::ParseError& e) {
      int code = app.exit(e);
      return code == 0 ? 0 : kUsageError;
   }

   try {
      if(*run) {
         return cmd_run(config, trials, seed, out, workers, plot_after);
      }
      if(*solve) {
         return cmd_solve(game, alpha, gamma, as_json);
      }
      if(*check) {
         return cmd_check(suite);
      }
      if(*plot) {
         return cmd_plot(results);
      }
   } catch(const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return 1;
   }
   return kUsageError;
}
