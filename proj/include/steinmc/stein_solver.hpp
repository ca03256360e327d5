#pragma once

#include <array>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

namespace steinmc {

class SolverFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Piecewise-linear bump used as the test function of the smoothing
// argument: 1 on one side of the threshold, 0 past the smoothing window,
// linear in between.
struct SmoothedIndicator {
  enum class Direction { Upper, Lower };

  double threshold = 0.0;
  double width = 0.1;  // must be > 0
  Direction direction = Direction::Upper;

  // Upper: 1 for x <= t, 0 for x >= t + width.
  // Lower: 1 for x <= t - width, 0 for x >= t.
  double operator()(double x) const {
    const double lo = direction == Direction::Upper ? threshold : threshold - width;
    if (x <= lo) return 1.0;
    if (x >= lo + width) return 0.0;
    return 1.0 - (x - lo) / width;
  }

  // a.e. derivative
  double slope(double x) const {
    const double lo = direction == Direction::Upper ? threshold : threshold - width;
    return (x > lo && x < lo + width) ? -1.0 / width : 0.0;
  }

  std::array<double, 2> kinks() const {
    const double lo = direction == Direction::Upper ? threshold : threshold - width;
    return {lo, lo + width};
  }
};

// Canonical bounded solution of  f'(x) - x f(x) = g(x) - E g(Z).
//
// f(x) = e^{x^2/2} \int_{-inf}^{x} e^{-t^2/2} (g(t) - E g(Z)) dt, evaluated
// through the substituted tail form (s = distance from x) whose integrand
// e^{-|x|s - s^2/2} never overflows; the right-tail form is used for x > 0.
// The derivative evaluator integrates the differentiated integrand, so the
// equation residual is a genuine cross-check of both quadratures.
struct SteinSolverOptions {
  double quadrature_tol = 1e-10;
  double g_mean_tol = 1e-9;
  int max_refine = 10;
};

class SteinSolution {
 public:
  using Options = SteinSolverOptions;

  SteinSolution(std::function<double(double)> g,
                std::function<double(double)> g_prime,
                std::vector<double> kinks = {},
                Options options = Options());

  static SteinSolution for_indicator(const SmoothedIndicator& g,
                                     Options options = Options());

  double g(double x) const { return g_(x); }
  double g_mean() const { return g_mean_; }  // E g(Z)

  double value(double x) const;
  double derivative(double x) const;

  // f'(x) - x f(x) - (g(x) - E g(Z))
  double residual(double x) const {
    return derivative(x) - x * value(x) - (g_(x) - g_mean_);
  }

 private:
  double tail_integral(double x, bool differentiated) const;

  std::function<double(double)> g_, g_prime_;
  std::vector<double> kinks_;
  Options opt_;
  double g_mean_ = 0.0;
};

// Validates g on the grid, solves, and checks the equation residual at
// every grid point. Non-finite g values reject the input; an unconverged
// quadrature or an out-of-tolerance residual raises SolverFailure.
SteinSolution solve_stein_equation(std::function<double(double)> g,
                                   std::function<double(double)> g_prime,
                                   std::vector<double> kinks,
                                   std::span<const double> grid,
                                   SteinSolverOptions options = SteinSolverOptions(),
                                   double grid_residual_tol = 1e-6);

}  // namespace steinmc
