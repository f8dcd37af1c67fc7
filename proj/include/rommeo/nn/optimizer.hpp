#pragma once

#include <nlohmann/json.hpp>

#include "rommeo/nn/mlp.hpp"

namespace rommeo::nn {

class NonFiniteGradient : public std::runtime_error {
 public:
   using std::runtime_error::runtime_error;
};

enum class OptimizerKind { sgd, adam };

/// First-order descent. Adam keeps per-parameter moment estimates.
class Optimizer {
 public:
   Optimizer() = default;
   Optimizer(OptimizerKind kind, double step_size, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
       : kind_(kind), lr_(step_size), beta1_(beta1), beta2_(beta2), eps_(eps)
   {
      require(step_size > 0.0, "optimizer step size must be > 0");
      require(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0, "moment decays must lie in [0, 1)");
   }

   [[nodiscard]] OptimizerKind kind() const { return kind_; }
   [[nodiscard]] double step_size() const { return lr_; }
   [[nodiscard]] std::size_t steps() const { return t_; }

   /// In-place descent: params -= step(grad). A gradient with a non-finite
   /// entry is rejected and leaves params untouched.
   void step(Vector& params, const Vector& grad)
   {
      require(params.size() == grad.size(), "gradient and parameter sizes differ");
      if(! grad.allFinite()) {
         throw NonFiniteGradient("non-finite gradient; optimizer step rejected");
      }
      if(kind_ == OptimizerKind::sgd) {
         params -= lr_ * grad;
         return;
      }
      if(m_.size() != params.size()) {
         m_ = Vector::Zero(params.size());
         v_ = Vector::Zero(params.size());
      }
      ++t_;
      m_ = beta1_ * m_ + (1.0 - beta1_) * grad;
      v_ = beta2_ * v_ + (1.0 - beta2_) * grad.cwiseProduct(grad);
      double c1 = 1.0 - std::pow(beta1_, double(t_));
      double c2 = 1.0 - std::pow(beta2_, double(t_));
      params.array() -= lr_ * (m_.array() / c1) / ((v_.array() / c2).sqrt() + eps_);
   }

   [[nodiscard]] nlohmann::json to_json() const
   {
      return {{"kind", kind_ == OptimizerKind::sgd ? "sgd" : "adam"},
              {"step_size", lr_},
              {"beta1", beta1_},
              {"beta2", beta2_},
              {"eps", eps_},
              {"t", t_},
              {"m", std::vector< double >(m_.data(), m_.data() + m_.size())},
              {"v", std::vector< double >(v_.data(), v_.data() + v_.size())}};
   }

   static Optimizer from_json(const nlohmann::json& j)
   {
      Optimizer o(j.at("kind") == "sgd" ? OptimizerKind::sgd : OptimizerKind::adam, j.at("step_size"),
                  j.at("beta1"), j.at("beta2"), j.at("eps"));
      o.t_ = j.at("t");
      auto m = j.at("m").get< std::vector< double > >();
      auto v = j.at("v").get< std::vector< double > >();
      o.m_ = Eigen::Map< const Vector >(m.data(), Eigen::Index(m.size()));
      o.v_ = Eigen::Map< const Vector >(v.data(), Eigen::Index(v.size()));
      return o;
   }

 private:
   OptimizerKind kind_ = OptimizerKind::sgd;
   double lr_ = 1e-3;
   double beta1_ = 0.9;
   double beta2_ = 0.999;
   double eps_ = 1e-8;
   std::size_t t_ = 0;
   Vector m_;
   Vector v_;
};

inline Vector optimizer_step(Optimizer& opt, Vector params, const Vector& grad)
{
   opt.step(params, grad);
   return params;
}

}  // namespace rommeo::nn
