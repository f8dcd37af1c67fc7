#pragma once

// Central finite differences and the error measure used to compare them
// against analytic gradients.

#include <functional>

#include "rommeo/nn/mlp.hpp"

namespace rommeo::nn {

inline constexpr double kFiniteDifferenceStep = 1e-5;

/// d f / d x by central differences. `x` is restored before returning.
inline Vector finite_difference(const std::function< double(const Vector&) >& f, Vector x,
                                double h = kFiniteDifferenceStep)
{
   Vector g(x.size());
   for(Eigen::Index i = 0; i < x.size(); ++i) {
      double keep = x(i);
      x(i) = keep + h;
      double up = f(x);
      x(i) = keep - h;
      double down = f(x);
      x(i) = keep;
      g(i) = (up - down) / (2.0 * h);
   }
   return g;
}

/// Largest per-coordinate relative error. Each coordinate is scaled by
/// max(|analytic|, |numeric|, 1e-3 * max|numeric|, 1e-8) so that entries far
/// below the gradient's own scale are judged against that scale.
inline double max_relative_error(const Vector& analytic, const Vector& numeric)
{
   require(analytic.size() == numeric.size(), "gradient sizes differ");
   double scale = numeric.size() ? numeric.cwiseAbs().maxCoeff() : 0.0;
   double worst = 0.0;
   for(Eigen::Index i = 0; i < analytic.size(); ++i) {
      double a = analytic(i), n = numeric(i);
      double denom = std::max({std::abs(a), std::abs(n), 1e-3 * scale, 1e-8});
      worst = std::max(worst, std::abs(a - n) / denom);
   }
   return worst;
}

}  // namespace rommeo::nn
