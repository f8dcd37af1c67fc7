#pragma once

// Experiment configuration: parsing from JSON with located errors, and the
// factories that turn a learner spec into a live learner.

#include <fstream>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <variant>

#include "rommeo/baselines.hpp"
#include "rommeo/rommeo_ac.hpp"
#include "rommeo/rommeo_q.hpp"

namespace rommeo::harness {

/// Invalid configuration. `where()` is a JSON pointer into the document.
class ConfigError : public std::runtime_error {
 public:
   ConfigError(std::string where, const std::string& what)
       : std::runtime_error(where.empty() ? what : where + ": " + what), where_(std::move(where))
   {
   }
   [[nodiscard]] const std::string& where() const { return where_; }

 private:
   std::string where_;
};

enum class GameId { climbing, climbing_cc3, differential };

inline std::string to_string(GameId g)
{
   switch(g) {
      case GameId::climbing: return "climbing";
      case GameId::climbing_cc3: return "climbing_cc3";
      case GameId::differential: return "differential";
   }
   return "?";
}

inline std::optional< GameId > game_from_string(const std::string& s)
{
   if(s == "climbing") {
      return GameId::climbing;
   }
   if(s == "climbing_cc3") {
      return GameId::climbing_cc3;
   }
   if(s == "differential") {
      return GameId::differential;
   }
   return std::nullopt;
}

inline bool is_discrete(GameId g) { return g != GameId::differential; }

inline MatrixGame make_matrix_game(GameId g)
{
   require(is_discrete(g), "not a matrix game");
   return climbing_game(g == GameId::climbing);
}

enum class LearnerKind { rommeo_q, rommeo_q_emp, jal, wolf_phc, fmq, rommeo_ac };

inline std::string to_string(LearnerKind k)
{
   switch(k) {
      case LearnerKind::rommeo_q: return "rommeo_q";
      case LearnerKind::rommeo_q_emp: return "rommeo_q_emp";
      case LearnerKind::jal: return "jal";
      case LearnerKind::wolf_phc: return "wolf_phc";
      case LearnerKind::fmq: return "fmq";
      case LearnerKind::rommeo_ac: return "rommeo_ac";
   }
   return "?";
}

struct LearnerSpec {
   LearnerKind kind = LearnerKind::rommeo_q;
   QLearnerConfig q;
   BaselineConfig baseline;
   ac::ACConfig ac;
};

struct ExperimentConfig {
   std::string name = "experiment";
   GameId game = GameId::climbing;
   std::array< LearnerSpec, 2 > agents;
   std::size_t episodes = 100;
   std::size_t steps_per_episode = 1;
   std::size_t trials = 1;
   std::uint64_t seed = 0;
   std::string out = "results";
   std::size_t workers = 1;
   /// Joint probability of the payoff-maximizing joint action that counts as
   /// convergence (matrix games).
   double converge_joint_prob = 0.9;
   /// Final-episode mean reward that counts as convergence (differential game).
   double converge_reward = 9.0;
   /// Mean reward over the last `reward_window` episodes is reported against
   /// `reward_target`.
   std::size_t reward_window = 10;
   double reward_target = 10.5;
   bool save_checkpoints = false;
   /// Verbatim source document, echoed into results.
   json source;
};

namespace detail {

/// Typed access to a JSON object that tracks its pointer for error messages
/// and rejects unknown keys.
class Reader {
 public:
   Reader(const json& j, std::string where) : j_(&j), where_(std::move(where))
   {
      if(! j.is_object()) {
         throw ConfigError(where_, "expected an object");
      }
   }

   [[nodiscard]] bool has(const std::string& key) const { return j_->contains(key); }

   [[nodiscard]] std::string path(const std::string& key) const { return where_ + "/" + key; }

   const json& at(const std::string& key)
   {
      seen_.insert(key);
      if(! j_->contains(key)) {
         throw ConfigError(path(key), "missing required field");
      }
      return (*j_)[key];
   }

   template < class T >
   void get(const std::string& key, T& out)
   {
      if(! has(key)) {
         seen_.insert(key);
         return;
      }
      const json& v = at(key);
      try {
         if constexpr(std::is_same_v< T, bool >) {
            if(! v.is_boolean()) {
               throw ConfigError(path(key), "expected a boolean");
            }
         } else if constexpr(std::is_unsigned_v< T >) {
            if(! v.is_number_integer() || v.get< long long >() < 0) {
               throw ConfigError(path(key), "expected a non-negative integer");
            }
         } else if constexpr(std::is_arithmetic_v< T >) {
            if(! v.is_number()) {
               throw ConfigError(path(key), "expected a number");
            }
         } else if constexpr(std::is_same_v< T, std::string >) {
            if(! v.is_string()) {
               throw ConfigError(path(key), "expected a string");
            }
         }
         out = v.get< T >();
      } catch(const json::exception& e) {
         throw ConfigError(path(key), e.what());
      }
   }

   /// Fails on keys that were never consumed.
   void finish() const
   {
      for(const auto& [k, v] : j_->items()) {
         if(! seen_.count(k)) {
            throw ConfigError(path(k), "unknown field");
         }
      }
   }

 private:
   const json* j_;
   std::string where_;
   std::set< std::string > seen_;
};

template < class F >
void checked(const std::string& where, F&& validate)
{
   try {
      validate();
   } catch(const ContractViolation& e) {
      throw ConfigError(where, e.what());
   }
}

inline LearnerKind learner_kind_from(const json& j, const std::string& where)
{
   if(! j.is_string()) {
      throw ConfigError(where, "expected a string");
   }
   auto s = j.get< std::string >();
   for(auto k : {LearnerKind::rommeo_q, LearnerKind::rommeo_q_emp, LearnerKind::jal, LearnerKind::wolf_phc,
                 LearnerKind::fmq, LearnerKind::rommeo_ac}) {
      if(to_string(k) == s) {
         return k;
      }
   }
   throw ConfigError(where, "unknown learner kind '" + s + "'");
}

inline void read_q(Reader& r, QLearnerConfig& c)
{
   r.get("alpha", c.alpha);
   r.get("gamma", c.gamma);
   r.get("lr", c.lr);
   r.get("k_samples", c.k_samples);
   r.get("batch", c.batch);
   r.get("target_interval", c.target_interval);
   r.get("buffer_capacity", c.buffer_capacity);
}

inline void read_baseline(Reader& r, BaselineConfig& c)
{
   if(r.has("epsilon")) {
      Reader e(r.at("epsilon"), r.path("epsilon"));
      e.get("start", c.epsilon.start);
      e.get("end", c.epsilon.end);
      e.get("decay_steps", c.epsilon.decay_steps);
      e.finish();
   }
   r.get("lr", c.lr);
   r.get("gamma", c.gamma);
   r.get("fmq_c", c.fmq_c);
   r.get("fmq_max_temp", c.fmq_max_temp);
   r.get("fmq_temp_decay", c.fmq_temp_decay);
   r.get("wolf_delta_win", c.wolf_delta_win);
   r.get("wolf_delta_lose", c.wolf_delta_lose);
}

inline void read_ac(Reader& r, ac::ACConfig& c)
{
   r.get("alpha", c.alpha);
   r.get("gamma", c.gamma);
   if(r.has("lr")) {
      double lr = 0.0;
      r.get("lr", lr);
      c.lr_q = c.lr_pi = c.lr_rho = c.lr_prior = lr;
   }
   r.get("lr_q", c.lr_q);
   r.get("lr_pi", c.lr_pi);
   r.get("lr_rho", c.lr_rho);
   r.get("lr_prior", c.lr_prior);
   r.get("batch", c.batch);
   r.get("beta", c.beta);
   r.get("target_interval", c.target_interval);
   r.get("buffer_capacity", c.buffer_capacity);
   r.get("init_log_std", c.init_log_std);
   if(r.has("hidden")) {
      const auto& h = r.at("hidden");
      if(! h.is_array() || h.empty()) {
         throw ConfigError(r.path("hidden"), "expected a non-empty array of widths");
      }
      c.hidden.clear();
      for(std::size_t i = 0; i < h.size(); ++i) {
         if(! h[i].is_number_unsigned() || h[i].get< std::size_t >() == 0) {
            throw ConfigError(r.path("hidden") + "/" + std::to_string(i), "expected a positive integer");
         }
         c.hidden.push_back(h[i]);
      }
   }
   if(r.has("activation")) {
      std::string a;
      r.get("activation", a);
      checked(r.path("activation"), [&] { c.activation = nn::activation_from_string(a); });
   }
   if(r.has("optimizer")) {
      std::string o;
      r.get("optimizer", o);
      if(o != "adam" && o != "sgd") {
         throw ConfigError(r.path("optimizer"), "expected 'adam' or 'sgd'");
      }
      c.optimizer = o == "adam" ? nn::OptimizerKind::adam : nn::OptimizerKind::sgd;
   }
}

inline LearnerSpec read_learner(const json& j, const std::string& where)
{
   Reader r(j, where);
   LearnerSpec spec;
   spec.kind = learner_kind_from(r.at("kind"), r.path("kind"));
   json empty = json::object();
   const json& params = r.has("params") ? r.at("params") : empty;
   Reader p(params, r.path("params"));
   switch(spec.kind) {
      case LearnerKind::rommeo_q:
      case LearnerKind::rommeo_q_emp:
         read_q(p, spec.q);
         spec.q.empirical_opponent = spec.kind == LearnerKind::rommeo_q_emp;
         checked(r.path("params"), [&] { spec.q.validate(); });
         break;
      case LearnerKind::jal:
      case LearnerKind::wolf_phc:
      case LearnerKind::fmq:
         read_baseline(p, spec.baseline);
         spec.baseline.kind = spec.kind == LearnerKind::jal        ? BaselineKind::jal
                              : spec.kind == LearnerKind::wolf_phc ? BaselineKind::wolf_phc
                                                                   : BaselineKind::fmq;
         checked(r.path("params"), [&] { spec.baseline.validate(); });
         break;
      case LearnerKind::rommeo_ac:
         read_ac(p, spec.ac);
         checked(r.path("params"), [&] { spec.ac.validate(); });
         break;
   }
   p.finish();
   r.finish();
   return spec;
}

}  // namespace detail

inline ExperimentConfig parse_config(const json& j)
{
   using detail::Reader;
   Reader r(j, "");
   ExperimentConfig c;
   c.source = j;
   r.get("name", c.name);
   std::string game;
   r.get("game", game);
   if(! r.has("game")) {
      throw ConfigError("/game", "missing required field");
   }
   auto g = game_from_string(game);
   if(! g) {
      throw ConfigError("/game", "unknown game '" + game + "'");
   }
   c.game = *g;
   if(r.has("learner") == r.has("agents")) {
      throw ConfigError("", "give exactly one of 'learner' (shared by both agents) or 'agents' (two entries)");
   }
   if(r.has("learner")) {
      auto spec = detail::read_learner(r.at("learner"), "/learner");
      c.agents = {spec, spec};
   } else {
      const auto& a = r.at("agents");
      if(! a.is_array() || a.size() != 2) {
         throw ConfigError("/agents", "expected an array of exactly two learner specs");
      }
      c.agents = {detail::read_learner(a[0], "/agents/0"), detail::read_learner(a[1], "/agents/1")};
   }
   for(std::size_t i = 0; i < 2; ++i) {
      bool continuous = c.agents[i].kind == LearnerKind::rommeo_ac;
      if(continuous == is_discrete(c.game)) {
         throw ConfigError(r.has("learner") ? "/learner/kind" : "/agents/" + std::to_string(i) + "/kind",
                           "learner '" + to_string(c.agents[i].kind) + "' does not support game '" + game + "'");
      }
   }
   r.get("episodes", c.episodes);
   r.get("steps_per_episode", c.steps_per_episode);
   r.get("trials", c.trials);
   r.get("seed", c.seed);
   r.get("out", c.out);
   r.get("workers", c.workers);
   r.get("save_checkpoints", c.save_checkpoints);
   if(r.has("convergence")) {
      Reader cv(r.at("convergence"), "/convergence");
      cv.get("joint_prob", c.converge_joint_prob);
      cv.get("reward", c.converge_reward);
      cv.get("reward_window", c.reward_window);
      cv.get("reward_target", c.reward_target);
      cv.finish();
   }
   r.finish();
   if(c.episodes < 1) {
      throw ConfigError("/episodes", "must be >= 1");
   }
   if(c.steps_per_episode < 1) {
      throw ConfigError("/steps_per_episode", "must be >= 1");
   }
   if(c.trials < 1) {
      throw ConfigError("/trials", "must be >= 1");
   }
   if(c.workers < 1) {
      throw ConfigError("/workers", "must be >= 1");
   }
   if(c.reward_window < 1 || c.reward_window > c.episodes) {
      throw ConfigError("/convergence/reward_window", "must lie in [1, episodes]");
   }
   return c;
}

inline ExperimentConfig parse_config_text(const std::string& text)
{
   json j;
   try {
      j = json::parse(text);
   } catch(const json::parse_error& e) {
      throw ConfigError("byte " + std::to_string(e.byte), std::string("malformed JSON: ") + e.what());
   }
   return parse_config(j);
}

inline ExperimentConfig load_config(const std::string& path)
{
   std::ifstream in(path);
   if(! in) {
      throw ConfigError(path, "cannot open config file");
   }
   std::stringstream ss;
   ss << in.rdbuf();
   return parse_config_text(ss.str());
}

/// The config as run: the source document with command-line overrides applied.
inline json effective_config(const ExperimentConfig& c)
{
   json j = c.source;
   j["trials"] = c.trials;
   j["seed"] = c.seed;
   j["out"] = c.out;
   j.erase("workers");
   return j;
}

/// Per-agent seed for a trial; trials use base_seed + trial_index.
inline std::uint64_t agent_seed(std::uint64_t base, std::size_t trial, std::size_t agent)
{
   return 2 * (base + trial) + agent;
}

inline std::unique_ptr< DiscreteLearner > make_discrete_learner(const LearnerSpec& spec, const MatrixGame& g,
                                                                std::size_t agent, std::uint64_t seed)
{
   std::size_t own = g.num_actions(agent);
   std::size_t opp = g.num_actions(1 - agent);
   switch(spec.kind) {
      case LearnerKind::rommeo_q:
      case LearnerKind::rommeo_q_emp: return std::make_unique< QLearner >(g.num_states(), own, opp, spec.q, seed);
      case LearnerKind::jal:
      case LearnerKind::wolf_phc:
      case LearnerKind::fmq:
         return make_baseline(spec.baseline, g.action_space(agent), g.action_space(1 - agent), seed);
      case LearnerKind::rommeo_ac: throw UnsupportedGame("rommeo_ac needs a continuous game");
   }
   throw ContractViolation("unknown learner kind");
}

}  // namespace rommeo::harness
