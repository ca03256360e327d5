#pragma once

#include <cmath>
#include <stdexcept>

namespace steinmc::normal {

inline constexpr double kSqrt2 = 1.4142135623730951;
inline constexpr double kSqrt2Pi = 2.5066282746310002;
inline constexpr double kInvSqrt2Pi = 0.3989422804014327;  // density bound 1/sqrt(2*pi)

inline double pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

// Phi(x) = erfc(-x/sqrt(2))/2. Absolute error well below 1e-10 everywhere;
// full relative accuracy in the lower tail.
inline double cdf(double x) { return 0.5 * std::erfc(-x / kSqrt2); }

// complementary cdf with lower-tail relative accuracy
inline double cdf_upper(double x) { return 0.5 * std::erfc(x / kSqrt2); }

// Inverse cdf. Tail-asymptotic start, then safeguarded Newton on
// cdf(x) - p with a maintained bracket; converges for all p in (0,1).
inline double quantile(double p) {
  if (!(p > 0.0 && p < 1.0))
    throw std::invalid_argument("normal quantile: p must be in (0,1)");
  if (p == 0.5) return 0.0;
  const bool upper = p > 0.5;
  const double q = upper ? 1.0 - p : p;  // q <= 1/2, target lower tail
  double x = -std::sqrt(-2.0 * std::log(q));  // crude tail start, x < 0
  double lo = -40.0;
  double hi = 0.0;
  for (int it = 0; it < 100; ++it) {
    const double err = cdf(x) - q;
    if (err > 0.0)
      hi = x;
    else
      lo = x;
    const double d = pdf(x);
    double step = d > 0.0 ? err / d : 0.0;
    double nx = x - step;
    if (!(nx > lo && nx < hi)) nx = 0.5 * (lo + hi);  // bisection fallback
    if (std::abs(nx - x) < 1e-15 * (1.0 + std::abs(x))) {
      x = nx;
      break;
    }
    x = nx;
  }
  return upper ? -x : x;
}

}  // namespace steinmc::normal
