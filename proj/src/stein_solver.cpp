#include "steinmc/stein_solver.hpp"

#include <cmath>
#include <utility>

#include "steinmc/normal.hpp"
#include "steinmc/quadrature.hpp"

namespace steinmc {

SteinSolution::SteinSolution(std::function<double(double)> g,
                             std::function<double(double)> g_prime,
                             std::vector<double> kinks, Options options)
    : g_(std::move(g)),
      g_prime_(std::move(g_prime)),
      kinks_(std::move(kinks)),
      opt_(options) {
  if (!g_) throw std::invalid_argument("SteinSolution: g required");
  if (!g_prime_) throw std::invalid_argument("SteinSolution: g' required");
  // E g(Z); the [-16,16] window loses < sup|g| * 2*Phi(-16) mass
  auto r = quadrature::integrate(
      [this](double t) { return g_(t) * normal::pdf(t); }, -16.0, 16.0,
      kinks_, opt_.g_mean_tol, opt_.max_refine);
  if (!r.converged)
    throw SolverFailure("SteinSolution: E g(Z) quadrature did not converge");
  g_mean_ = r.value;
}

SteinSolution SteinSolution::for_indicator(const SmoothedIndicator& g,
                                           Options options) {
  if (!(g.width > 0.0))
    throw std::invalid_argument("SmoothedIndicator: width must be > 0");
  auto k = g.kinks();
  return SteinSolution([g](double x) { return g(x); },
                       [g](double x) { return g.slope(x); },
                       std::vector<double>{k[0], k[1]}, options);
}

// For x <= 0:  f(x)  =  int_0^inf e^{xs - s^2/2} h(x - s) ds
//              f'(x) =  int_0^inf e^{xs - s^2/2} [s h(x-s) + g'(x-s)] ds
// For x >  0:  f(x)  = -int_0^inf e^{-xs - s^2/2} h(x + s) ds
//              f'(x) =  int_0^inf e^{-xs - s^2/2} [s h(x+s) - g'(x+s)] ds
// with h = g - E g(Z). Exponents are <= 0 throughout, so no overflow for
// any x (the naive e^{x^2/2} * integral form blows up past |x| ~ 6).
double SteinSolution::tail_integral(double x, bool differentiated) const {
  const double ax = std::abs(x);
  const double s_max = std::sqrt(x * x + 100.0) - ax;  // exponent -50 at cut
  const double c = g_mean_;

  std::vector<double> breaks;
  for (double k : kinks_) {
    const double s = x <= 0.0 ? x - k : k - x;
    if (s > 0.0 && s < s_max) breaks.push_back(s);
  }

  auto h = [&](double t) { return g_(t) - c; };
  std::function<double(double)> integrand;
  if (x <= 0.0) {
    if (differentiated)
      integrand = [&, x](double s) {
        return std::exp(x * s - 0.5 * s * s) *
               (s * h(x - s) + g_prime_(x - s));
      };
    else
      integrand = [&, x](double s) {
        return std::exp(x * s - 0.5 * s * s) * h(x - s);
      };
  } else {
    if (differentiated)
      integrand = [&, x](double s) {
        return std::exp(-x * s - 0.5 * s * s) *
               (s * h(x + s) - g_prime_(x + s));
      };
    else
      integrand = [&, x](double s) {
        return -std::exp(-x * s - 0.5 * s * s) * h(x + s);
      };
  }

  auto r = quadrature::integrate(integrand, 0.0, s_max, breaks,
                                 opt_.quadrature_tol, opt_.max_refine);
  if (!r.converged)
    throw SolverFailure("SteinSolution: tail quadrature did not converge");
  return r.value;
}

double SteinSolution::value(double x) const { return tail_integral(x, false); }

double SteinSolution::derivative(double x) const {
  return tail_integral(x, true);
}

SteinSolution solve_stein_equation(std::function<double(double)> g,
                                   std::function<double(double)> g_prime,
                                   std::vector<double> kinks,
                                   std::span<const double> grid,
                                   SteinSolverOptions options,
                                   double grid_residual_tol) {
  if (grid.empty())
    throw std::invalid_argument("solve_stein_equation: empty grid");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!std::isfinite(grid[i]))
      throw std::invalid_argument("solve_stein_equation: non-finite grid point");
    if (i > 0 && grid[i] < grid[i - 1])
      throw std::invalid_argument("solve_stein_equation: grid not sorted");
    if (!std::isfinite(g(grid[i])))
      throw std::invalid_argument(
          "solve_stein_equation: g non-finite on grid");
  }
  SteinSolution sol(std::move(g), std::move(g_prime), std::move(kinks),
                    options);
  for (double x : grid) {
    if (std::abs(sol.residual(x)) > grid_residual_tol)
      throw SolverFailure("solve_stein_equation: residual tolerance exceeded");
  }
  return sol;
}

}  // namespace steinmc
