#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace steinmc {

struct MeanSE {
  double estimate = 0.0;
  double se = 0.0;
  std::int64_t count = 0;
};

inline double sample_mean(std::span<const double> xs) {
  if (xs.empty()) throw std::invalid_argument("sample_mean: empty sample");
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

// unbiased sample variance
inline double sample_variance(std::span<const double> xs) {
  if (xs.size() < 2) throw std::invalid_argument("sample_variance: need >= 2 values");
  const double m = sample_mean(xs);
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return s / static_cast<double>(xs.size() - 1);
}

inline MeanSE mean_se(std::span<const double> xs) {
  MeanSE r;
  r.count = static_cast<std::int64_t>(xs.size());
  r.estimate = sample_mean(xs);
  r.se = xs.size() > 1
             ? std::sqrt(sample_variance(xs) / static_cast<double>(xs.size()))
             : 0.0;
  return r;
}

// Jackknife standard error from precomputed leave-one-out statistics.
inline double jackknife_se(std::span<const double> loo) {
  const std::size_t r = loo.size();
  if (r < 2) return 0.0;
  const double m = sample_mean(loo);
  double s = 0.0;
  for (double x : loo) s += (x - m) * (x - m);
  return std::sqrt(s * static_cast<double>(r - 1) / static_cast<double>(r));
}

// Regularized lower incomplete gamma P(a, x); series for x < a + 1,
// continued fraction otherwise.
inline double gamma_p(double a, double x) {
  if (!(a > 0.0) || x < 0.0)
    throw std::invalid_argument("gamma_p: need a > 0, x >= 0");
  if (x == 0.0) return 0.0;
  const double lg = std::lgamma(a);
  if (x < a + 1.0) {
    double term = 1.0 / a, sum = term, ap = a;
    for (int it = 0; it < 500; ++it) {
      ap += 1.0;
      term *= x / ap;
      sum += term;
      if (std::abs(term) < std::abs(sum) * 1e-16) break;
    }
    return sum * std::exp(-x + a * std::log(x) - lg);
  }
  // Lentz continued fraction for Q(a, x)
  const double tiny = 1e-300;
  double b = x + 1.0 - a, c = 1.0 / tiny, d = 1.0 / b, h = d;
  for (int i = 1; i <= 500; ++i) {
    const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < 1e-16) break;
  }
  const double q = std::exp(-x + a * std::log(x) - lg) * h;
  return 1.0 - q;
}

inline double chi_square_cdf(double x, double dof) {
  return gamma_p(0.5 * dof, 0.5 * x);
}

// Quantile by bracketed Newton; Wilson-Hilferty start.
inline double chi_square_quantile(double p, double dof) {
  if (!(p > 0.0 && p < 1.0))
    throw std::invalid_argument("chi_square_quantile: p must be in (0,1)");
  const double c = 2.0 / (9.0 * dof);
  // normal quantile via rough rational start is avoided; reuse a coarse
  // expansion, the Newton loop below does the real work
  double z = p > 0.5 ? std::sqrt(-2.0 * std::log(1.0 - p))
                     : -std::sqrt(-2.0 * std::log(p));
  double x = dof * std::pow(1.0 - c + z * std::sqrt(c), 3);
  if (!(x > 0.0)) x = dof;
  double lo = 0.0, hi = dof + 200.0 * std::sqrt(dof) + 200.0;
  for (int it = 0; it < 200; ++it) {
    const double err = chi_square_cdf(x, dof) - p;
    if (err > 0.0)
      hi = x;
    else
      lo = x;
    const double pdf = std::exp((0.5 * dof - 1.0) * std::log(0.5 * x) -
                                0.5 * x - std::lgamma(0.5 * dof)) *
                       0.5;
    double nx = pdf > 0.0 ? x - err / pdf : 0.5 * (lo + hi);
    if (!(nx > lo && nx < hi)) nx = 0.5 * (lo + hi);
    if (std::abs(nx - x) < 1e-12 * (1.0 + x)) return nx;
    x = nx;
  }
  return x;
}

// Least-squares slope of y on x (with intercept).
inline double fit_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("fit_slope: need matched samples of size >= 2");
  const double mx = sample_mean(x), my = sample_mean(y);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  if (sxx == 0.0) throw std::invalid_argument("fit_slope: degenerate x");
  return sxy / sxx;
}

}  // namespace steinmc
