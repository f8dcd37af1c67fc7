#include <gtest/gtest.h>

#include "rommeo/rommeo_q.hpp"

using namespace rommeo;

namespace {

constexpr std::size_t A = 0, B = 1;

DiscreteTransition terminal(std::size_t a, std::size_t b, double r) { return {0, a, b, std::nullopt, 0, r, true}; }

void set_climbing(soft::JointQTable& q)
{
   auto r = soft::reward_table(climbing_game());
   q = r;
}

/// Plays n self-play single-step rounds of the climbing game.
void self_play(QLearner& x, QLearner& y, int n)
{
   auto g = climbing_game();
   for(int i = 0; i < n; ++i) {
      std::size_t a = x.act(0), b = y.act(0);
      auto r = g.rewards({a, b});
      x.observe(terminal(a, b, r[0]));
      y.observe(terminal(b, a, r[1]));
      x.update();
      y.update();
   }
}

}  // namespace

TEST(QLearnerAct, ZeroTableIsUniform)
{
   QLearner l(1, 3, 3, {}, 1);
   for(double p : l.policy(0)) {
      EXPECT_NEAR(p, 1.0 / 3.0, 1e-15);
   }
}

TEST(QLearnerAct, ClimbingTableMarginalAndSampling)
{
   QLearner l(1, 3, 3, {}, 2);
   set_climbing(l.q());
   // marginal P(A) = sum_b exp(R(A, b)) / sum_{a,b} exp(R(a, b)) at alpha 1, uniform prior
   const double r[3][3] = {{11, -30, 0}, {-30, 7, 6}, {0, 0, 5}};
   double num = 0.0, den = 0.0;
   for(int a = 0; a < 3; ++a) {
      for(int b = 0; b < 3; ++b) {
         den += std::exp(r[a][b]);
         if(a == 0) {
            num += std::exp(r[a][b]);
         }
      }
   }
   EXPECT_NEAR(l.policy(0)[A], num / den, 1e-12);
   EXPECT_NEAR(l.policy(0)[A], 0.974, 1e-3);
   int hits = 0;
   const int n = 20000;
   for(int i = 0; i < n; ++i) {
      hits += l.act(0) == A;
   }
   EXPECT_NEAR(double(hits) / n, num / den, 0.005);
}

TEST(QLearnerAct, FixedSeedReproducible)
{
   QLearner x(1, 3, 3, {}, 77), y(1, 3, 3, {}, 77);
   set_climbing(x.q());
   set_climbing(y.q());
   for(int i = 0; i < 100; ++i) {
      EXPECT_EQ(x.act(0), y.act(0));
   }
}

TEST(QLearnerObserve, BufferEvictsOldest)
{
   QLearnerConfig c;
   c.buffer_capacity = 2;
   c.batch = 1;
   QLearner l(1, 3, 3, c, 1);
   l.observe(terminal(0, 0, 1));
   l.observe(terminal(1, 1, 2));
   l.observe(terminal(2, 2, 3));
   ASSERT_EQ(l.buffer().size(), 2u);
   EXPECT_EQ(l.buffer()[0].r, 2.0);
   EXPECT_EQ(l.buffer()[1].r, 3.0);
}

TEST(QLearnerObserve, CountRatios)
{
   QLearner l(1, 3, 3, {}, 1);
   l.observe(terminal(0, A, 0));
   l.observe(terminal(0, A, 0));
   l.observe(terminal(0, B, 0));
   auto p = l.empirical_opponent(0);
   EXPECT_NEAR(p[A], 2.0 / 3.0, 1e-15);
   EXPECT_NEAR(p[B], 1.0 / 3.0, 1e-15);
   EXPECT_EQ(p[2], 0.0);
}

TEST(QLearnerObserve, UnvisitedStateIsUniform)
{
   QLearner l(2, 3, 3, {}, 1);
   l.observe(terminal(0, A, 0));
   for(double p : l.empirical_opponent(1)) {
      EXPECT_NEAR(p, 1.0 / 3.0, 1e-15);
   }
}

TEST(QLearnerObserve, RejectsInvalidTransitions)
{
   QLearner l(1, 3, 3, {}, 1);
   EXPECT_THROW(l.observe(terminal(3, 0, 0)), ContractViolation);
   EXPECT_THROW(l.observe(terminal(0, 0, NAN)), ContractViolation);
}

TEST(EstimateVBar, ConvergesToSoftValue)
{
   Rng rng(3);
   auto q = soft::reward_table(climbing_game());
   for(auto& v : q.values()) {
      v /= 10.0;
   }
   auto prior = soft::OpponentPrior(1, 3, {0.5, 0.3, 0.2});
   auto pi = soft::extract_policy(q, 1.0);
   auto rho = soft::OpponentModelTable(1, 3, {0.2, 0.5, 0.3});
   double exact = soft::soft_value(q, prior, 1.0)[0];
   double err_small = 0.0, err_large = 0.0;
   for(int rep = 0; rep < 20; ++rep) {
      err_small += std::abs(estimate_v_bar(q, pi, rho, prior, 1.0, 0, 10, rng) - exact) / 20;
      err_large += std::abs(estimate_v_bar(q, pi, rho, prior, 1.0, 0, 1000, rng) - exact) / 20;
   }
   double err_huge = std::abs(estimate_v_bar(q, pi, rho, prior, 1.0, 0, 100000, rng) - exact);
   EXPECT_LT(err_large, err_small);
   EXPECT_LT(err_huge, 1e-2);
}

TEST(EstimateVBar, SingleActionsGiveExactValue)
{
   Rng rng(1);
   soft::JointQTable q(1, 1, 1, 4.25);
   auto pi = soft::ConditionalPolicyTable::uniform(1, 1, 1);
   auto rho = soft::OpponentModelTable::uniform(1, 1);
   auto prior = soft::OpponentPrior::uniform(1, 1);
   for(std::size_t k : {1u, 7u, 100u}) {
      EXPECT_NEAR(estimate_v_bar(q, pi, rho, prior, 1.0, 0, k, rng), 4.25, 1e-12);
      EXPECT_NEAR(estimate_v_bar(q, pi, rho, prior, 0.5, 0, k, rng), 4.25, 1e-12);
   }
}

TEST(EstimateVBar, ZeroTableUniformIsLogActionCount)
{
   Rng rng(1);
   soft::JointQTable q(1, 3, 3);
   auto pi = soft::ConditionalPolicyTable::uniform(1, 3, 3);
   auto rho = soft::OpponentModelTable::uniform(1, 3);
   auto prior = soft::OpponentPrior::uniform(1, 3);
   // every importance weight equals |A_own|, so the estimate is exact
   EXPECT_NEAR(estimate_v_bar(q, pi, rho, prior, 1.0, 0, 30, rng), std::log(3.0), 1e-12);
}

TEST(TrainStep, TerminalFullStepSetsReward)
{
   QLearnerConfig c;
   c.lr = 1.0;
   c.batch = 1;
   c.buffer_capacity = 1;
   QLearner l(1, 3, 3, c, 4);
   auto g = climbing_game();
   for(std::size_t a = 0; a < 3; ++a) {
      for(std::size_t b = 0; b < 3; ++b) {
         l.observe(terminal(a, b, g.payoff(0, a, b)));
         l.train_step();
         EXPECT_EQ(l.q()(0, a, b), g.payoff(0, a, b));
      }
   }
   EXPECT_EQ(l.q(), soft::reward_table(g));
}

TEST(TrainStep, GeometricConvergenceToReward)
{
   QLearnerConfig c;
   c.lr = 0.1;
   c.batch = 1;
   QLearner l(1, 2, 2, c, 4);
   l.observe(terminal(1, 0, 5.0));
   for(int k = 1; k <= 100; ++k) {
      l.train_step();
      EXPECT_NEAR(l.q()(0, 1, 0), 5.0 * (1.0 - std::pow(0.9, k)), 1e-12);
   }
}

TEST(TrainStep, RequiresFullBatch)
{
   QLearner l(1, 3, 3, {}, 1);
   l.observe(terminal(0, 0, 1));
   EXPECT_THROW(l.train_step(), ContractViolation);
   EXPECT_NO_THROW(l.update());
   EXPECT_EQ(l.train_steps(), 0u);
}

TEST(TrainStep, TargetCopiedOnlyAtInterval)
{
   QLearnerConfig c;
   c.lr = 1.0;
   c.batch = 1;
   c.target_interval = 3;
   QLearner l(1, 2, 2, c, 1);
   l.observe(terminal(0, 0, 2.0));
   l.train_step();
   l.train_step();
   EXPECT_EQ(l.q_target()(0, 0, 0), 0.0);
   l.train_step();
   EXPECT_EQ(l.q_target()(0, 0, 0), 2.0);
}

TEST(TrainStep, NonTerminalBootstrapsFromTarget)
{
   QLearnerConfig c;
   c.lr = 1.0;
   c.batch = 1;
   c.gamma = 0.5;
   c.target_interval = 1000;
   QLearner l(1, 2, 2, c, 1);
   l.observe({0, 0, 0, std::nullopt, 0, 1.0, false});
   l.train_step();
   // target table is all zeros with uniform pi, rho, prior: V_bar = log 2 exactly
   EXPECT_NEAR(l.q()(0, 0, 0), 1.0 + 0.5 * std::log(2.0), 1e-12);
}

TEST(QLearner, ConvergesToPayoffWhenAllCellsVisited)
{
   QLearnerConfig c;
   c.batch = 4;
   QLearner l(1, 3, 3, c, 9);
   auto g = climbing_game();
   for(int rep = 0; rep < 200; ++rep) {
      for(std::size_t a = 0; a < 3; ++a) {
         for(std::size_t b = 0; b < 3; ++b) {
            l.observe(terminal(a, b, g.payoff(0, a, b)));
            l.update();
         }
      }
   }
   for(std::size_t a = 0; a < 3; ++a) {
      for(std::size_t b = 0; b < 3; ++b) {
         EXPECT_NEAR(l.q()(0, a, b), g.payoff(0, a, b), 1e-6);
      }
   }
}

TEST(QLearner, PriorAlwaysNormalizedAndCountsMonotone)
{
   QLearner x(1, 3, 3, {}, 10), y(1, 3, 3, {}, 11);
   std::uint64_t last = 0;
   auto g = climbing_game();
   for(int i = 0; i < 200; ++i) {
      std::size_t a = x.act(0), b = y.act(0);
      x.observe(terminal(a, b, g.payoff(0, a, b)));
      x.update();
      EXPECT_TRUE(is_distribution(x.prior().row(0), 1e-12));
      EXPECT_TRUE(is_distribution(x.policy(0), 1e-12));
      EXPECT_GE(x.counts().visits(0), last);
      last = x.counts().visits(0);
   }
}

TEST(QLearner, DeterministicUnderSeed)
{
   QLearner a1(1, 3, 3, {}, 5), b1(1, 3, 3, {}, 6), a2(1, 3, 3, {}, 5), b2(1, 3, 3, {}, 6);
   self_play(a1, b1, 60);
   self_play(a2, b2, 60);
   EXPECT_EQ(a1.checkpoint(), a2.checkpoint());
   EXPECT_EQ(b1.checkpoint(), b2.checkpoint());
}

TEST(QLearner, CheckpointRoundTrip)
{
   QLearner a(1, 3, 3, {}, 5), b(1, 3, 3, {}, 6);
   self_play(a, b, 40);
   auto restored = QLearner::restore(a.checkpoint());
   EXPECT_EQ(restored.checkpoint(), a.checkpoint());
   QLearner b2 = QLearner::restore(b.checkpoint());
   self_play(a, b, 20);
   self_play(restored, b2, 20);
   EXPECT_EQ(restored.checkpoint(), a.checkpoint());
}

TEST(QLearnerEmp, UsesEmpiricalPriorForActing)
{
   QLearnerConfig c;
   c.empirical_opponent = true;
   QLearner emp(1, 3, 3, c, 1);
   set_climbing(emp.q());
   emp.observe(terminal(0, 0, 0));
   emp.observe(terminal(0, 1, 0));
   emp.observe(terminal(0, 2, 0));
   auto pi = soft::extract_policy(emp.q(), 1.0);
   auto uniform = soft::StateDistribution::uniform(1, 3);
   auto expected = soft::marginal_policy(pi, uniform, 0);
   auto got = emp.policy(0);
   for(std::size_t a = 0; a < 3; ++a) {
      EXPECT_NEAR(got[a], expected[a], 1e-6);
   }
}

TEST(QLearnerConfig, Validation)
{
   QLearnerConfig c;
   c.lr = 0.0;
   EXPECT_THROW(QLearner(1, 3, 3, c, 1), ContractViolation);
   c.lr = 1.5;
   EXPECT_THROW(QLearner(1, 3, 3, c, 1), ContractViolation);
   c = {};
   c.k_samples = 0;
   EXPECT_THROW(QLearner(1, 3, 3, c, 1), ContractViolation);
}
