#include <gtest/gtest.h>

#include "rommeo/nn/gradcheck.hpp"
#include "rommeo/nn/mlp.hpp"
#include "rommeo/nn/optimizer.hpp"
#include "rommeo/nn/squashed_gaussian.hpp"

using namespace rommeo;
using namespace rommeo::nn;

namespace {

Mlp random_net(Rng& rng, Activation act)
{
   std::vector< std::size_t > w{1 + rng() % 4};
   std::size_t depth = 1 + rng() % 3;
   for(std::size_t l = 0; l < depth; ++l) {
      w.push_back(1 + rng() % 8);
   }
   w.push_back(1 + rng() % 3);
   Mlp net(w, act);
   net.init(rng, 1.0, 1.0);
   for(std::size_t l = 0; l < net.num_layers(); ++l) {
      for(Eigen::Index i = 0; i < net.bias(l).size(); ++i) {
         net.bias(l)(i) = 0.1 * standard_normal(rng);
      }
   }
   return net;
}

Vector random_vector(Eigen::Index n, Rng& rng)
{
   Vector v(n);
   for(Eigen::Index i = 0; i < n; ++i) {
      v(i) = standard_normal(rng);
   }
   return v;
}

}  // namespace

// forward -------------------------------------------------------------------

TEST(MlpForward, ZeroParamsGiveZeroOutput)
{
   Mlp net({3, 5, 2}, Activation::tanh);
   auto y = net.forward(Vector(Vector::Ones(3)));
   EXPECT_EQ(y, Vector::Zero(2));
}

TEST(MlpForward, IdentityLinearLayer)
{
   Mlp net({3, 3}, Activation::relu);
   net.weight(0) = Matrix::Identity(3, 3);
   Vector x(3);
   x << 1.5, -2.0, 0.25;
   EXPECT_EQ(net.forward(x), x);
}

TEST(MlpForward, DeterministicAndBatchMatchesColumns)
{
   Rng rng(1);
   for(int c = 0; c < 20; ++c) {
      auto net = random_net(rng, c % 2 ? Activation::relu : Activation::tanh);
      Matrix x = Matrix::NullaryExpr(Eigen::Index(net.input_width()), 4, [&] { return standard_normal(rng); });
      Matrix y1 = net.forward(x), y2 = net.forward(x);
      EXPECT_EQ(y1, y2);
      for(Eigen::Index j = 0; j < x.cols(); ++j) {
         Vector col = x.col(j);
         EXPECT_TRUE(net.forward(col).isApprox(y1.col(j), 1e-14));
      }
   }
}

TEST(MlpForward, WidthMismatchIsContractError)
{
   Mlp net({3, 2}, Activation::tanh);
   EXPECT_THROW(net.forward(Vector(Vector::Zero(2))), ContractViolation);
   EXPECT_THROW(Mlp({3}, Activation::tanh), ContractViolation);
   EXPECT_THROW(Mlp({3, 0, 1}, Activation::tanh), ContractViolation);
}

// backward ------------------------------------------------------------------

TEST(MlpBackward, MatchesFiniteDifferencesOnRandomNets)
{
   Rng rng(2);
   for(int c = 0; c < 100; ++c) {
      auto net = random_net(rng, Activation::tanh);
      Vector x = random_vector(Eigen::Index(net.input_width()), rng);
      Vector up = random_vector(Eigen::Index(net.output_width()), rng);
      auto [gp, gx] = net.backward(x, up);
      Mlp probe = net;
      auto fp = [&](const Vector& p) {
         probe.params() = p;
         return probe.forward(x).dot(up);
      };
      auto fx = [&](const Vector& v) { return net.forward(v).dot(up); };
      EXPECT_LT(max_relative_error(gp, finite_difference(fp, net.params())), 1e-4) << "net " << c;
      EXPECT_LT(max_relative_error(gx, finite_difference(fx, x)), 1e-4) << "net " << c;
   }
}

TEST(MlpBackward, ReluNetsMatchAwayFromKinks)
{
   Rng rng(3);
   int checked = 0;
   for(int c = 0; c < 200 && checked < 50; ++c) {
      auto net = random_net(rng, Activation::relu);
      Vector x = random_vector(Eigen::Index(net.input_width()), rng);
      Mlp::Cache cache;
      net.forward(Matrix(x), &cache);
      bool near_kink = false;
      for(std::size_t l = 0; l + 1 < net.num_layers(); ++l) {
         Matrix z = net.weight(l) * cache.inputs[l];
         z.colwise() += net.bias(l);
         near_kink = near_kink || z.cwiseAbs().minCoeff() < 1e-3;
      }
      if(near_kink) {
         continue;
      }
      ++checked;
      Vector up = random_vector(Eigen::Index(net.output_width()), rng);
      auto [gp, gx] = net.backward(x, up);
      Mlp probe = net;
      auto fp = [&](const Vector& p) {
         probe.params() = p;
         return probe.forward(x).dot(up);
      };
      EXPECT_LT(max_relative_error(gp, finite_difference(fp, net.params())), 1e-4);
   }
   EXPECT_GE(checked, 50);
}

TEST(MlpBackward, LinearInputGradientIsTransposeTimesUpstream)
{
   Rng rng(4);
   Mlp net({4, 3}, Activation::tanh);
   net.init(rng);
   Vector x = random_vector(4, rng), up = random_vector(3, rng);
   auto [gp, gx] = net.backward(x, up);
   EXPECT_TRUE(gx.isApprox(net.weight(0).transpose() * up, 1e-15));
}

TEST(MlpBackward, ZeroUpstreamGivesZeroGradients)
{
   Rng rng(5);
   auto net = random_net(rng, Activation::tanh);
   Vector x = random_vector(Eigen::Index(net.input_width()), rng);
   auto [gp, gx] = net.backward(x, Vector(Vector::Zero(Eigen::Index(net.output_width()))));
   EXPECT_EQ(gp, Vector::Zero(gp.size()));
   EXPECT_EQ(gx, Vector::Zero(gx.size()));
}

TEST(MlpSerialization, RoundTripsBitExactly)
{
   Rng rng(6);
   for(int c = 0; c < 20; ++c) {
      auto net = random_net(rng, c % 2 ? Activation::relu : Activation::tanh);
      auto text = net.to_json().dump();
      auto back = Mlp::from_json(nlohmann::json::parse(text));
      EXPECT_EQ(back.widths(), net.widths());
      EXPECT_EQ(back.activation(), net.activation());
      ASSERT_EQ(back.params().size(), net.params().size());
      EXPECT_EQ(std::memcmp(back.params().data(), net.params().data(), sizeof(double) * std::size_t(net.params().size())), 0);
   }
}

TEST(MlpSerialization, RejectsWrongLayoutOrSize)
{
   Mlp net({2, 2}, Activation::tanh);
   auto j = net.to_json();
   j["layout_version"] = 99;
   EXPECT_THROW(Mlp::from_json(j), ContractViolation);
   j = net.to_json();
   j["params"].push_back(1.0);
   EXPECT_THROW(Mlp::from_json(j), ContractViolation);
}

// squashed Gaussian -------------------------------------------------------------

TEST(SquashedGaussian, ZeroNoiseGivesSquashedMean)
{
   Bounds b{-10, 10};
   for(double m : {-3.0, -0.2, 0.0, 1.7}) {
      auto s = sample_squashed({m, 0.4}, 0.0, b);
      EXPECT_DOUBLE_EQ(s.action, 10.0 * std::tanh(m));
      EXPECT_DOUBLE_EQ(s.action, squash(m, b));
   }
}

TEST(SquashedGaussian, HandEvaluatedLogProbAtOrigin)
{
   auto s = sample_squashed({0.0, 0.0}, 0.0, {-10, 10});
   EXPECT_EQ(s.action, 0.0);
   double oracle = std::log(1.0 / std::sqrt(2.0 * M_PI)) - std::log(10.0 * 1.0);
   EXPECT_NEAR(s.log_prob, oracle, 1e-6);
   EXPECT_NEAR(s.log_prob, -3.2215, 1e-4);
}

TEST(SquashedGaussian, AffineMapMatchesLowHighForm)
{
   Rng rng(1);
   Bounds b{-3, 7};
   for(int i = 0; i < 100; ++i) {
      double raw = 2.0 * standard_normal(rng);
      EXPECT_NEAR(squash(raw, b), b.low + (b.high - b.low) * (std::tanh(raw) + 1.0) / 2.0, 1e-12);
   }
}

TEST(SquashedGaussian, DensityIntegratesToOne)
{
   // E_{x ~ Uniform(-10, 10)}[20 p(x)] = 1
   Rng rng(8);
   Bounds b{-10, 10};
   GaussianHead h{0.7, -0.3};
   const int n = 1000000;
   double acc = 0.0;
   for(int i = 0; i < n; ++i) {
      double x = -10.0 + 20.0 * std::generate_canonical< double, 53 >(rng);
      acc += 20.0 * std::exp(squashed_log_density(x, h, b).log_prob);
   }
   EXPECT_NEAR(acc / n, 1.0, 0.01);
}

TEST(SquashedGaussian, SampleLogProbEqualsDensityAtSample)
{
   Rng rng(9);
   Bounds b{-10, 10};
   for(int i = 0; i < 500; ++i) {
      GaussianHead h{standard_normal(rng), -1.0 + standard_normal(rng) * 0.5};
      auto s = sample_squashed(h, standard_normal(rng), b);
      EXPECT_NEAR(squashed_log_density(s.action, h, b).log_prob, s.log_prob, 1e-6);
   }
}

TEST(SquashedGaussian, ActionsStrictlyInsideBounds)
{
   Rng rng(10);
   Bounds b{-10, 10};
   for(int i = 0; i < 100000; ++i) {
      GaussianHead h{20.0 * standard_normal(rng), 5.0 * standard_normal(rng)};
      double a = sample_squashed(h, 3.0 * standard_normal(rng), b).action;
      ASSERT_GT(a, b.low);
      ASSERT_LT(a, b.high);
   }
   EXPECT_LT(sample_squashed({1e6, 0.0}, 0.0, b).action, b.high);
}

TEST(SquashedGaussian, LogStdIsClamped)
{
   auto lo = sample_squashed({0.0, -50.0}, 1.0, {-1, 1});
   auto at = sample_squashed({0.0, kLogStdMin}, 1.0, {-1, 1});
   EXPECT_EQ(lo.action, at.action);
   EXPECT_EQ(lo.log_prob, at.log_prob);
   auto hi = sample_squashed({0.0, 50.0}, 0.1, {-1, 1});
   auto top = sample_squashed({0.0, kLogStdMax}, 0.1, {-1, 1});
   EXPECT_EQ(hi.action, top.action);
   EXPECT_EQ(hi.dlogp_dlogstd, 0.0);
}

TEST(SquashedGaussian, GradientsMatchFiniteDifferences)
{
   Rng rng(11);
   int density_cases = 0;
   for(int c = 0; c < 200; ++c) {
      Bounds b{-10.0 + 5.0 * std::generate_canonical< double, 53 >(rng), 0.0};
      b.high = b.low + 1.0 + 15.0 * std::generate_canonical< double, 53 >(rng);
      GaussianHead h{2.0 * standard_normal(rng), -3.0 + 4.5 * std::generate_canonical< double, 53 >(rng)};
      double eps = standard_normal(rng);
      auto s = sample_squashed(h, eps, b);
      Vector p(2);
      p << h.mean, h.log_std;
      Vector ga(2), gl(2);
      ga << s.daction_dmean, s.daction_dlogstd;
      gl << s.dlogp_dmean, s.dlogp_dlogstd;
      EXPECT_LT(max_relative_error(ga, finite_difference([&](const Vector& v) { return sample_squashed({v(0), v(1)}, eps, b).action; }, p)), 1e-4);
      EXPECT_LT(max_relative_error(gl, finite_difference([&](const Vector& v) { return sample_squashed({v(0), v(1)}, eps, b).log_prob; }, p)), 1e-4);

      // x-derivative checked through the pre-squash coordinate
      double r = h.mean + std::exp(clamped_log_std(h.log_std)) * standard_normal(rng);
      double x = squash(r, b);
      auto d = squashed_log_density(x, h, b);
      double u = (x - b.mid()) / b.half();
      if(1.0 - u * u < 1e-6) {
         continue;  // x not representable finely enough for a difference quotient
      }
      ++density_cases;
      Vector q(3), gd(3);
      q << h.mean, h.log_std, r;
      gd << d.dmean, d.dlogstd, d.dx * b.half() * (1.0 - u * u);
      EXPECT_LT(max_relative_error(gd, finite_difference([&](const Vector& v) { return squashed_log_density(squash(v(2), b), {v(0), v(1)}, b).log_prob; }, q)), 1e-4) << "case " << c;
   }
   EXPECT_GE(density_cases, 100);
}

TEST(SquashedGaussian, DensityIsFlatInsideTheClamp)
{
   Bounds b{-1.0, 1.0};
   auto d = squashed_log_density(1.0, {0.0, 0.0}, b);
   EXPECT_EQ(d.dx, 0.0);
   EXPECT_EQ(d.log_prob, squashed_log_density(1.0 - 1e-14, {0.0, 0.0}, b).log_prob);
}

// optimizer -----------------------------------------------------------------

TEST(Optimizer, SgdSingleStep)
{
   Optimizer opt(OptimizerKind::sgd, 0.1);
   Vector p = Vector::Zero(1);
   Vector g = Vector::Ones(1);
   EXPECT_DOUBLE_EQ(optimizer_step(opt, p, g)(0), -0.1);
}

TEST(Optimizer, ZeroGradientLeavesParams)
{
   Rng rng(1);
   for(auto kind : {OptimizerKind::sgd, OptimizerKind::adam}) {
      Optimizer opt(kind, 0.01);
      Vector p = random_vector(5, rng);
      EXPECT_EQ(optimizer_step(opt, p, Vector::Zero(5)), p);
   }
}

TEST(Optimizer, QuadraticBowlDecaysGeometrically)
{
   Optimizer opt(OptimizerKind::sgd, 0.4);
   Vector x = Vector::Constant(1, 3.0);
   double last = 3.0;
   int k = 0;
   for(; k < 50 && std::abs(x(0)) >= 1e-6; ++k) {
      opt.step(x, 2.0 * x);
      EXPECT_LT(std::abs(x(0)), last);
      EXPECT_NEAR(x(0), 3.0 * std::pow(1.0 - 2.0 * 0.4, k + 1), 1e-12);
      last = std::abs(x(0));
   }
   EXPECT_LT(std::abs(x(0)), 1e-6);
   EXPECT_LE(k, 50);
}

TEST(Optimizer, AdamMinimizesQuadratic)
{
   Optimizer opt(OptimizerKind::adam, 0.05);
   Vector x(2);
   x << 3.0, -2.0;
   for(int k = 0; k < 2000; ++k) {
      opt.step(x, 2.0 * x);
   }
   EXPECT_LT(x.norm(), 1e-3);
}

TEST(Optimizer, NonFiniteGradientRejected)
{
   Optimizer opt(OptimizerKind::adam, 0.1);
   Vector p = Vector::Ones(3);
   Vector g = Vector::Ones(3);
   g(1) = std::numeric_limits< double >::quiet_NaN();
   EXPECT_THROW(opt.step(p, g), NonFiniteGradient);
   EXPECT_EQ(p, Vector::Ones(3));
   EXPECT_EQ(opt.steps(), 0u);
}

TEST(Optimizer, StepSizeMustBePositive)
{
   EXPECT_THROW(Optimizer(OptimizerKind::sgd, 0.0), ContractViolation);
}

TEST(Optimizer, SerializationPreservesMoments)
{
   Rng rng(3);
   Optimizer a(OptimizerKind::adam, 0.01);
   Vector p = random_vector(4, rng);
   for(int k = 0; k < 5; ++k) {
      a.step(p, random_vector(4, rng));
   }
   auto b = Optimizer::from_json(a.to_json());
   Vector p2 = p, g = random_vector(4, rng);
   a.step(p, g);
   b.step(p2, g);
   EXPECT_EQ(p, p2);
}
