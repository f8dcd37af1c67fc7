#pragma once

#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "rommeo/common.hpp"

namespace rommeo::nn {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

enum class Activation { tanh, relu };

inline std::string to_string(Activation a) { return a == Activation::tanh ? "tanh" : "relu"; }

inline Activation activation_from_string(const std::string& s)
{
   if(s == "tanh") {
      return Activation::tanh;
   }
   if(s == "relu") {
      return Activation::relu;
   }
   throw ContractViolation("unknown activation '" + s + "'");
}

/// Parameter layout version written into checkpoints.
inline constexpr int kLayoutVersion = 1;

/// Fully connected feed-forward network with a linear output layer.
///
/// Parameters live in one flat vector. For each layer l in order: the weight
/// matrix (out_l x in_l, column-major) followed by the bias (out_l).
class Mlp {
 public:
   /// Activations saved by forward() for the matching backward().
   struct Cache {
      std::vector< Matrix > inputs;  // input to each layer
      std::vector< Matrix > outputs; // post-activation output of each hidden layer
   };

   Mlp() = default;

   Mlp(std::vector< std::size_t > widths, Activation act) : widths_(std::move(widths)), act_(act)
   {
      require(widths_.size() >= 2, "an MLP needs at least input and output widths");
      for(auto w : widths_) {
         require(w >= 1, "layer widths must be >= 1");
      }
      std::size_t n = 0;
      for(std::size_t l = 0; l + 1 < widths_.size(); ++l) {
         offsets_.push_back(n);
         n += widths_[l + 1] * widths_[l] + widths_[l + 1];
      }
      params_ = Vector::Zero(Eigen::Index(n));
   }

   /// Scaled Gaussian init, std = gain / sqrt(fan_in); the output layer uses
   /// `output_gain`. Biases start at zero.
   void init(Rng& rng, double gain = 1.0, double output_gain = 1.0)
   {
      for(std::size_t l = 0; l < num_layers(); ++l) {
         double g = (l + 1 == num_layers() ? output_gain : gain) / std::sqrt(double(widths_[l]));
         auto w = weight(l);
         for(Eigen::Index j = 0; j < w.cols(); ++j) {
            for(Eigen::Index i = 0; i < w.rows(); ++i) {
               w(i, j) = g * standard_normal(rng);
            }
         }
         bias(l).setZero();
      }
   }

   [[nodiscard]] std::size_t num_layers() const { return widths_.size() - 1; }
   [[nodiscard]] std::size_t input_width() const { return widths_.front(); }
   [[nodiscard]] std::size_t output_width() const { return widths_.back(); }
   [[nodiscard]] const std::vector< std::size_t >& widths() const { return widths_; }
   [[nodiscard]] Activation activation() const { return act_; }
   [[nodiscard]] std::size_t num_params() const { return std::size_t(params_.size()); }

   [[nodiscard]] const Vector& params() const { return params_; }
   [[nodiscard]] Vector& params() { return params_; }

   void set_params(const Vector& p)
   {
      require(p.size() == params_.size(), "parameter vector has wrong size");
      params_ = p;
   }

   Eigen::Map< Matrix > weight(std::size_t l)
   {
      return {params_.data() + offsets_[l], Eigen::Index(widths_[l + 1]), Eigen::Index(widths_[l])};
   }
   [[nodiscard]] Eigen::Map< const Matrix > weight(std::size_t l) const
   {
      return {params_.data() + offsets_[l], Eigen::Index(widths_[l + 1]), Eigen::Index(widths_[l])};
   }
   Eigen::Map< Vector > bias(std::size_t l)
   {
      return {params_.data() + offsets_[l] + widths_[l + 1] * widths_[l], Eigen::Index(widths_[l + 1])};
   }
   [[nodiscard]] Eigen::Map< const Vector > bias(std::size_t l) const
   {
      return {params_.data() + offsets_[l] + widths_[l + 1] * widths_[l], Eigen::Index(widths_[l + 1])};
   }

   /// Column-wise batch evaluation: X is input_width x B.
   Matrix forward(const Matrix& x, Cache* cache = nullptr) const
   {
      require(std::size_t(x.rows()) == input_width(), "input width does not match the first layer");
      if(cache) {
         cache->inputs.clear();
         cache->outputs.clear();
      }
      Matrix h = x;
      for(std::size_t l = 0; l < num_layers(); ++l) {
         if(cache) {
            cache->inputs.push_back(h);
         }
         Matrix z = weight(l) * h;
         z.colwise() += bias(l);
         if(l + 1 < num_layers()) {
            activate(z);
            if(cache) {
               cache->outputs.push_back(z);
            }
         }
         h = std::move(z);
      }
      return h;
   }

   [[nodiscard]] Vector forward(const Vector& x) const
   {
      Matrix out = forward(Matrix(x));
      return out.col(0);
   }

   /// Reverse pass for a cached batch. `upstream` is output_width x B
   /// (dL/dy per column). Returns the parameter gradient summed over the
   /// batch and the per-column input gradient.
   std::pair< Vector, Matrix > backward(const Cache& cache, const Matrix& upstream) const
   {
      require(std::size_t(upstream.rows()) == output_width(), "upstream width does not match the output layer");
      require(cache.inputs.size() == num_layers(), "cache does not belong to this network");
      Vector grad = Vector::Zero(params_.size());
      Matrix g = upstream;
      for(std::size_t l = num_layers(); l-- > 0;) {
         if(l + 1 < num_layers()) {
            const Matrix& out = cache.outputs[l];
            if(act_ == Activation::tanh) {
               g.array() *= 1.0 - out.array().square();
            } else {
               g.array() *= (out.array() > 0.0).cast< double >();
            }
         }
         Eigen::Map< Matrix > gw(grad.data() + offsets_[l], Eigen::Index(widths_[l + 1]), Eigen::Index(widths_[l]));
         Eigen::Map< Vector > gb(grad.data() + offsets_[l] + widths_[l + 1] * widths_[l], Eigen::Index(widths_[l + 1]));
         gw.noalias() = g * cache.inputs[l].transpose();
         gb = g.rowwise().sum();
         Matrix prev = weight(l).transpose() * g;
         g = std::move(prev);
      }
      return {std::move(grad), std::move(g)};
   }

   /// Single-sample reverse pass.
   [[nodiscard]] std::pair< Vector, Vector > backward(const Vector& x, const Vector& upstream) const
   {
      Cache cache;
      forward(Matrix(x), &cache);
      auto [gp, gx] = backward(cache, Matrix(upstream));
      return {std::move(gp), Vector(gx.col(0))};
   }

   [[nodiscard]] nlohmann::json to_json() const
   {
      return {{"layout_version", kLayoutVersion},
              {"widths", widths_},
              {"activation", to_string(act_)},
              {"params", std::vector< double >(params_.data(), params_.data() + params_.size())}};
   }

   static Mlp from_json(const nlohmann::json& j)
   {
      require(j.at("layout_version").get< int >() == kLayoutVersion, "unsupported parameter layout version");
      Mlp net(j.at("widths").get< std::vector< std::size_t > >(),
              activation_from_string(j.at("activation").get< std::string >()));
      auto p = j.at("params").get< std::vector< double > >();
      require(p.size() == net.num_params(), "parameter count does not match the declared widths");
      net.params_ = Eigen::Map< const Vector >(p.data(), Eigen::Index(p.size()));
      return net;
   }

 private:
   void activate(Matrix& z) const
   {
      if(act_ == Activation::tanh) {
         z = z.array().tanh();
      } else {
         z = z.array().max(0.0);
      }
   }

   std::vector< std::size_t > widths_;
   Activation act_ = Activation::tanh;
   std::vector< std::size_t > offsets_;
   Vector params_;
};

}  // namespace rommeo::nn
