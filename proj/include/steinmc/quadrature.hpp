#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

namespace steinmc::quadrature {

// 16-point Gauss-Legendre rule on [-1,1], positive half (rule is symmetric).
inline constexpr std::array<double, 8> kGl16Nodes = {
    0.095012509837637454, 0.28160355077925892, 0.45801677765722737,
    0.61787624440264377,  0.755404408355003,   0.86563120238783176,
    0.9445750230732326,   0.98940093499164994};
inline constexpr std::array<double, 8> kGl16Weights = {
    0.18945061045506859,  0.18260341504492361,  0.16915651939500262,
    0.14959598881657676,  0.12462897125553403,  0.095158511682492591,
    0.062253523938647706, 0.027152459411754037};

template <typename F>
double gl16_panel(F&& f, double a, double b) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  double s = 0.0;
  for (int k = 0; k < 8; ++k) {
    const double dx = h * kGl16Nodes[k];
    s += kGl16Weights[k] * (f(c - dx) + f(c + dx));
  }
  return s * h;
}

struct Result {
  double value = 0.0;
  bool converged = false;
  int refinements = 0;
};

// Composite GL-16 over [a,b] with mandatory splits at the interior
// breakpoints (integrand kinks), refined by uniform panel halving until
// two successive levels agree to abs_tol.
template <typename F>
Result integrate(F&& f, double a, double b, std::span<const double> breaks,
                 double abs_tol, int max_refine = 10) {
  if (!(b > a)) return {0.0, true, 0};
  std::vector<double> cuts;
  cuts.push_back(a);
  for (double t : breaks)
    if (t > a && t < b) cuts.push_back(t);
  cuts.push_back(b);
  std::sort(cuts.begin(), cuts.end());

  auto level_value = [&](int splits_per_segment) {
    double total = 0.0;
    for (std::size_t s = 0; s + 1 < cuts.size(); ++s) {
      const double lo = cuts[s], hi = cuts[s + 1];
      // initial panel width <= 1 so the first level already resolves the
      // Gaussian-scale variation of the integrand
      const int base = std::max(1, static_cast<int>(std::ceil(hi - lo)));
      const int m = base * splits_per_segment;
      const double w = (hi - lo) / m;
      for (int j = 0; j < m; ++j)
        total += gl16_panel(f, lo + j * w, lo + (j + 1) * w);
    }
    return total;
  };

  Result r;
  int splits = 1;
  double prev = level_value(splits);
  for (int lvl = 1; lvl <= max_refine; ++lvl) {
    splits *= 2;
    const double cur = level_value(splits);
    r.refinements = lvl;
    if (std::abs(cur - prev) <= abs_tol) {
      r.value = cur;
      r.converged = true;
      return r;
    }
    prev = cur;
  }
  r.value = prev;
  r.converged = false;
  return r;
}

}  // namespace steinmc::quadrature
