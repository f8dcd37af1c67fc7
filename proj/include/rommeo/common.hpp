#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace rommeo {

inline constexpr const char* kVersion = "1.0.0";

using Rng = std::mt19937_64;

/// Raised when a caller breaks a documented precondition (unnormalized
/// distribution, shape mismatch, bad hyperparameter).
class ContractViolation : public std::invalid_argument {
 public:
   using std::invalid_argument::invalid_argument;
};

/// Raised by iterative solvers that hit their iteration cap.
class ConvergenceError : public std::runtime_error {
 public:
   ConvergenceError(const std::string& what, double residual, std::size_t iterations)
       : std::runtime_error(what + " (residual " + std::to_string(residual) + " after "
                            + std::to_string(iterations) + " iterations)"),
         residual_(residual),
         iterations_(iterations)
   {
   }

   [[nodiscard]] double residual() const noexcept { return residual_; }
   [[nodiscard]] std::size_t iterations() const noexcept { return iterations_; }

 private:
   double residual_;
   std::size_t iterations_;
};

inline void require(bool condition, const std::string& message)
{
   if(! condition) {
      throw ContractViolation(message);
   }
}

/// log(sum(exp(x))) with max shift. Empty input gives -inf.
inline double log_sum_exp(std::span< const double > x)
{
   if(x.empty()) {
      return -std::numeric_limits< double >::infinity();
   }
   double m = *std::max_element(x.begin(), x.end());
   if(! std::isfinite(m)) {
      return m;
   }
   double acc = 0.0;
   for(double v : x) {
      acc += std::exp(v - m);
   }
   return m + std::log(acc);
}

/// In-place softmax of `logits`, computed with max shift.
inline void softmax_inplace(std::span< double > logits)
{
   double lse = log_sum_exp(logits);
   for(double& v : logits) {
      v = std::exp(v - lse);
   }
}

inline std::vector< double > softmax(std::span< const double > logits)
{
   std::vector< double > out(logits.begin(), logits.end());
   softmax_inplace(out);
   return out;
}

/// Shannon entropy in nats; 0·log 0 = 0.
inline double entropy(std::span< const double > p)
{
   double h = 0.0;
   for(double v : p) {
      if(v > 0.0) {
         h -= v * std::log(v);
      }
   }
   return h;
}

/// KL(p || q) in nats. Requires q > 0 wherever p > 0.
inline double kl_divergence(std::span< const double > p, std::span< const double > q)
{
   double kl = 0.0;
   for(std::size_t i = 0; i < p.size(); ++i) {
      if(p[i] > 0.0) {
         kl += p[i] * (std::log(p[i]) - std::log(q[i]));
      }
   }
   return kl;
}

inline bool is_distribution(std::span< const double > p, double tol = 1e-9)
{
   double total = 0.0;
   for(double v : p) {
      if(! std::isfinite(v) || v < -tol) {
         return false;
      }
      total += v;
   }
   return std::abs(total - 1.0) <= tol;
}

/// Inverse-CDF draw from a discrete distribution. Consumes exactly one
/// uniform variate so that sampling sequences are reproducible across
/// standard library implementations of <random> distributions.
inline std::size_t sample_index(std::span< const double > probs, Rng& rng)
{
   double u = std::generate_canonical< double, 53 >(rng);
   double cum = 0.0;
   for(std::size_t i = 0; i < probs.size(); ++i) {
      cum += probs[i];
      if(u < cum) {
         return i;
      }
   }
   // u landed in the rounding slack above the cumulative total
   for(std::size_t i = probs.size(); i-- > 0;) {
      if(probs[i] > 0.0) {
         return i;
      }
   }
   return 0;
}

/// Standard normal draw via Box-Muller, for the same reproducibility reason.
inline double standard_normal(Rng& rng)
{
   double u1 = std::generate_canonical< double, 53 >(rng);
   double u2 = std::generate_canonical< double, 53 >(rng);
   u1 = std::max(u1, std::numeric_limits< double >::min());
   return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

inline std::string rng_state(const Rng& rng)
{
   std::ostringstream os;
   os << rng;
   return os.str();
}

inline void restore_rng(Rng& rng, const std::string& state)
{
   std::istringstream is(state);
   is >> rng;
   if(is.fail()) {
      throw ContractViolation("malformed RNG state");
   }
}

}  // namespace rommeo
