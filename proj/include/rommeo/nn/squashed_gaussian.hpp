#pragma once

// Gaussian distribution on a raw variable, pushed through tanh and an affine
// map onto a bounded interval. All quantities come with their analytic
// derivatives with respect to the head outputs (mean, raw log-std) so that
// callers can chain them into network backward passes.

#include <cmath>

#include "rommeo/common.hpp"

namespace rommeo::nn {

inline constexpr double kLogStdMin = -5.0;
inline constexpr double kLogStdMax = 2.0;
/// Guards log(1 - tanh^2) near saturation.
inline constexpr double kJacobianEps = 1e-6;
/// Keeps squashed values strictly inside the interval.
inline constexpr double kSquashLimit = 1.0 - 1e-12;
inline constexpr double kHalfLog2Pi = 0.91893853320467274178;

struct Bounds {
   double low = -1.0;
   double high = 1.0;

   [[nodiscard]] double mid() const { return 0.5 * (low + high); }
   [[nodiscard]] double half() const { return 0.5 * (high - low); }
};

/// Head outputs as produced by a network: mean and unclamped log-std.
struct GaussianHead {
   double mean = 0.0;
   double log_std = 0.0;
};

inline double clamped_log_std(double raw) { return std::clamp(raw, kLogStdMin, kLogStdMax); }
inline double log_std_slope(double raw) { return (raw > kLogStdMin && raw < kLogStdMax) ? 1.0 : 0.0; }

/// Reparameterized draw plus derivatives at fixed noise.
struct SquashedSample {
   double action = 0.0;
   double raw = 0.0;
   double log_prob = 0.0;
   double daction_dmean = 0.0;
   double daction_dlogstd = 0.0;
   double dlogp_dmean = 0.0;
   double dlogp_dlogstd = 0.0;
};

/// Log density of a squashed value plus derivatives w.r.t. the head and x.
struct SquashedDensity {
   double log_prob = 0.0;
   double dmean = 0.0;
   double dlogstd = 0.0;
   double dx = 0.0;
};

namespace detail {

/// log(half (1 - t^2) + eps) and its derivative w.r.t. the raw variable.
inline std::pair< double, double > squash_correction(double t, double half)
{
   double one_minus = 1.0 - t * t;
   double denom = half * one_minus + kJacobianEps;
   return {std::log(denom), half * (-2.0 * t * one_minus) / denom};
}

}  // namespace detail

inline double squash(double raw, const Bounds& b)
{
   double t = std::clamp(std::tanh(raw), -kSquashLimit, kSquashLimit);
   return b.mid() + b.half() * t;
}

/// raw = mean + exp(log_std) * epsilon; action = squash(raw).
inline SquashedSample sample_squashed(const GaussianHead& head, double epsilon, const Bounds& b)
{
   double ls = clamped_log_std(head.log_std);
   double slope = log_std_slope(head.log_std);
   double sigma = std::exp(ls);
   SquashedSample s;
   s.raw = head.mean + sigma * epsilon;
   double t = std::clamp(std::tanh(s.raw), -kSquashLimit, kSquashLimit);
   s.action = b.mid() + b.half() * t;
   auto [corr, dcorr] = detail::squash_correction(t, b.half());
   s.log_prob = -0.5 * epsilon * epsilon - ls - kHalfLog2Pi - corr;
   double da_draw = b.half() * (1.0 - t * t);
   s.daction_dmean = da_draw;
   s.daction_dlogstd = da_draw * sigma * epsilon * slope;
   s.dlogp_dmean = -dcorr;
   s.dlogp_dlogstd = (-1.0 - dcorr * sigma * epsilon) * slope;
   return s;
}

/// Log density at a squashed value x in (low, high).
inline SquashedDensity squashed_log_density(double x, const GaussianHead& head, const Bounds& b)
{
   double ls = clamped_log_std(head.log_std);
   double slope = log_std_slope(head.log_std);
   double sigma = std::exp(ls);
   double u_in = (x - b.mid()) / b.half();
   double u = std::clamp(u_in, -kSquashLimit, kSquashLimit);
   double raw = std::atanh(u);
   double z = (raw - head.mean) / sigma;
   auto [corr, dcorr] = detail::squash_correction(u, b.half());
   SquashedDensity d;
   d.log_prob = -0.5 * z * z - ls - kHalfLog2Pi - corr;
   d.dmean = z / sigma;
   d.dlogstd = (z * z - 1.0) * slope;
   double dlogp_draw = -z / sigma - dcorr;
   // flat in x where the clamp is active
   d.dx = u == u_in ? dlogp_draw / (b.half() * (1.0 - u * u)) : 0.0;
   return d;
}

}  // namespace rommeo::nn
