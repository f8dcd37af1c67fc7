#include <gtest/gtest.h>

#include "rommeo/baselines.hpp"
#include "rommeo/game.hpp"

using namespace rommeo;

namespace {

DiscreteTransition step(std::size_t a, std::size_t b, double r) { return {0, a, b, std::nullopt, 0, r, true}; }

BaselineConfig config(BaselineKind k)
{
   BaselineConfig c;
   c.kind = k;
   return c;
}

bool on_simplex(const std::vector< double >& p)
{
   double s = 0.0;
   for(double x : p) {
      if(! (x >= 0.0 && x <= 1.0)) {
         return false;
      }
      s += x;
   }
   return std::abs(s - 1.0) < 1e-9;
}

}  // namespace

TEST(Epsilon, LinearDecayThenFloor)
{
   EpsilonSchedule e{0.2, 0.01, 80};
   EXPECT_DOUBLE_EQ(e.at(0), 0.2);
   EXPECT_NEAR(e.at(40), 0.105, 1e-12);
   EXPECT_DOUBLE_EQ(e.at(80), 0.01);
   EXPECT_DOUBLE_EQ(e.at(1000), 0.01);
}

TEST(Jal, BestRespondsToFixedOpponent)
{
   auto g = climbing_game();
   JointActionLearner l(3, 3, config(BaselineKind::jal), 3);
   for(int t = 0; t < 200; ++t) {
      auto a = l.act(0);
      l.observe(step(a, 0, g.payoff(0, a, 0)));
      l.update();
   }
   auto ev = l.expected_values(0);
   EXPECT_EQ(detail::argmax(ev), 0u);
   EXPECT_NEAR(l.policy(0)[0], 1.0 - 0.01 + 0.01 / 3.0, 1e-12);
   EXPECT_EQ(l.opponent_estimate(0)[0], l.empirical_opponent(0)[0]);
   EXPECT_GT(l.opponent_estimate(0)[0], 0.99);
}

TEST(Fmq, ZeroHeuristicWeightIsIndependentQ)
{
   auto c = config(BaselineKind::fmq);
   c.fmq_c = 0.0;
   FmqLearner l(3, 3, c, 5);
   std::vector< double > ref(3, 0.0);
   Rng rng(9);
   for(int t = 0; t < 500; ++t) {
      std::size_t a = rng() % 3;
      std::size_t b = rng() % 3;
      double r = climbing_game().payoff(0, a, b);
      l.observe(step(a, b, r));
      ref[a] += c.lr * (r - ref[a]);
      ASSERT_EQ(l.biased_values(), ref);
      ASSERT_EQ(l.q_values(), ref);
   }
   // Boltzmann over the plain values
   auto p = l.policy(0);
   std::vector< double > logits(ref);
   for(double& v : logits) {
      v /= l.temperature();
   }
   auto expected = softmax(logits);
   for(std::size_t a = 0; a < 3; ++a) {
      EXPECT_NEAR(p[a], expected[a], 1e-15);
   }
}

TEST(Fmq, HeuristicFavoursRareHighReward)
{
   FmqLearner l(3, 3, config(BaselineKind::fmq), 5);
   // A pays 11 once and -30 twice; C pays 5 three times
   l.observe(step(0, 0, 11));
   l.observe(step(0, 1, -30));
   l.observe(step(0, 1, -30));
   for(int i = 0; i < 3; ++i) {
      l.observe(step(2, 2, 5));
   }
   auto ev = l.biased_values();
   EXPECT_NEAR(ev[0], l.q_values()[0] + 10.0 * (1.0 / 3.0) * 11.0, 1e-12);
   EXPECT_NEAR(ev[2], l.q_values()[2] + 10.0 * 1.0 * 5.0, 1e-12);
   EXPECT_EQ(ev[1], 0.0);
}

TEST(Fmq, TemperatureDecaysToOne)
{
   FmqLearner l(3, 3, config(BaselineKind::fmq), 5);
   EXPECT_DOUBLE_EQ(l.temperature(), 501.0);
   for(int i = 0; i < 1000; ++i) {
      l.observe(step(0, 0, 1.0));
   }
   EXPECT_NEAR(l.temperature(), 1.0, 1e-12);
}

TEST(Wolf, PolicyStaysOnSimplex)
{
   Rng rng(11);
   for(int trial = 0; trial < 20; ++trial) {
      auto c = config(BaselineKind::wolf_phc);
      c.wolf_delta_win = 0.01 + 0.1 * std::generate_canonical< double, 53 >(rng);
      c.wolf_delta_lose = c.wolf_delta_win * (1.5 + 3.0 * std::generate_canonical< double, 53 >(rng));
      WolfPhcLearner l(3, 3, c, rng());
      for(int t = 0; t < 300; ++t) {
         auto a = l.act(0);
         std::size_t b = rng() % 3;
         l.observe(step(a, b, climbing_game().payoff(0, a, b)));
         l.update();
         ASSERT_TRUE(on_simplex(l.raw_policy())) << "trial " << trial << " step " << t;
         ASSERT_TRUE(on_simplex(l.average_policy()));
         ASSERT_TRUE(on_simplex(l.policy(0)));
      }
   }
}

TEST(Wolf, LearnsDominantActionAgainstFixedOpponent)
{
   WolfPhcLearner l(3, 3, config(BaselineKind::wolf_phc), 2);
   for(int t = 0; t < 400; ++t) {
      auto a = l.act(0);
      l.observe(step(a, 0, climbing_game().payoff(0, a, 0)));
      l.update();
   }
   EXPECT_GT(l.raw_policy()[0], 0.95);
}

TEST(Emp, UniformHistoryGivesUniformOpponentModel)
{
   auto l = rommeo_q_emp(3, 3, QLearnerConfig{}, 1);
   for(int i = 0; i < 30; ++i) {
      l->observe(step(0, std::size_t(i % 3), 0.0));
   }
   for(double p : l->opponent_estimate(0)) {
      EXPECT_NEAR(p, 1.0 / 3.0, 1e-6);
   }
   EXPECT_EQ(l->name(), "rommeo_q_emp");
}

TEST(Emp, FactoryMatchesFlaggedLearner)
{
   QLearnerConfig c;
   auto a = rommeo_q_emp(3, 3, c, 17);
   c.empirical_opponent = true;
   QLearner b(1, 3, 3, c, 17);
   auto g = climbing_game();
   for(int t = 0; t < 100; ++t) {
      auto x = a->act(0);
      ASSERT_EQ(x, b.act(0));
      a->observe(step(x, t % 3, g.payoff(0, x, t % 3)));
      b.observe(step(x, t % 3, g.payoff(0, x, t % 3)));
      a->update();
      b.update();
   }
   EXPECT_EQ(a->checkpoint(), b.checkpoint());
}

TEST(Baselines, SameSeedSameTrajectory)
{
   auto g = climbing_game();
   for(auto k : {BaselineKind::jal, BaselineKind::wolf_phc, BaselineKind::fmq, BaselineKind::rommeo_q_emp}) {
      auto space = g.action_space(0);
      auto x = make_baseline(config(k), space, space, 42);
      auto y = make_baseline(config(k), space, space, 42);
      for(int t = 0; t < 200; ++t) {
         auto a = x->act(0);
         ASSERT_EQ(a, y->act(0)) << to_string(k);
         x->observe(step(a, 1, g.payoff(0, a, 1)));
         y->observe(step(a, 1, g.payoff(0, a, 1)));
         x->update();
         y->update();
      }
      EXPECT_EQ(x->checkpoint(), y->checkpoint()) << to_string(k);
   }
}

TEST(Baselines, ContinuousGameIsUnsupported)
{
   DifferentialGame g;
   auto disc = climbing_game().action_space(0);
   for(auto k : {BaselineKind::jal, BaselineKind::wolf_phc, BaselineKind::fmq, BaselineKind::rommeo_q_emp}) {
      EXPECT_THROW(make_baseline(config(k), g.action_space(0), g.action_space(1), 1), UnsupportedGame);
      EXPECT_THROW(make_baseline(config(k), disc, g.action_space(1), 1), UnsupportedGame);
   }
}

TEST(Baselines, ConfigValidation)
{
   auto c = config(BaselineKind::wolf_phc);
   c.wolf_delta_lose = c.wolf_delta_win;
   EXPECT_THROW(WolfPhcLearner(3, 3, c, 1), ContractViolation);
   c = config(BaselineKind::fmq);
   c.fmq_c = -1.0;
   EXPECT_THROW(FmqLearner(3, 3, c, 1), ContractViolation);
   c = config(BaselineKind::jal);
   c.lr = 0.0;
   EXPECT_THROW(JointActionLearner(3, 3, c, 1), ContractViolation);
   c = config(BaselineKind::jal);
   c.epsilon.start = 1.5;
   EXPECT_THROW(JointActionLearner(3, 3, c, 1), ContractViolation);
}

TEST(Baselines, DistributionsAreNormalized)
{
   auto g = climbing_game();
   Rng rng(4);
   for(auto k : {BaselineKind::jal, BaselineKind::wolf_phc, BaselineKind::fmq, BaselineKind::rommeo_q_emp}) {
      auto space = g.action_space(0);
      auto l = make_baseline(config(k), space, space, 8);
      for(int t = 0; t < 100; ++t) {
         auto a = l->act(0);
         std::size_t b = rng() % 3;
         l->observe(step(a, b, g.payoff(0, a, b)));
         l->update();
         ASSERT_TRUE(on_simplex(l->policy(0))) << to_string(k);
         ASSERT_TRUE(on_simplex(l->opponent_estimate(0))) << to_string(k);
         ASSERT_TRUE(on_simplex(l->empirical_opponent(0))) << to_string(k);
      }
   }
}
