#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace steinmc {

struct SampleSet {
  std::vector<double> values;
  std::uint64_t seed = 0;

  std::vector<double> sorted_values() const;
};

// sup_t |F_m(t) - Phi(t)| computed exactly over the sorted sample,
// checking both one-sided gaps at every jump.
double kolmogorov_distance(const SampleSet& samples);

struct DictionaryEntry {
  std::string label;
  std::function<double(double)> f;
  std::function<double(double)> f_prime;
};

// Scaled solutions (width/2 factor puts them in the unit class) for upper
// smoothed indicators at 41 thresholds t in {-4, -3.8, ..., 4}, width 0.2.
// Tabulated on a fine grid for fast pointwise evaluation; exact quadrature
// is used outside the table range.
std::vector<DictionaryEntry> default_stein_dictionary(int jobs = 1);

// 2 * (max over the dictionary of |mean(f'(W) - W f(W))|)^{1/2}.
// A finite dictionary only lower-approximates the sup over the smooth
// class, so this is a diagnostic rather than a certified bound.
double stein_discrepancy(const SampleSet& samples,
                         std::span<const DictionaryEntry> dictionary,
                         int jobs = 1);

// Plug-in standardization of raw values followed by the distance to
// normal, with a leave-one-out jackknife error (the distance is nonlinear
// in the sample, so the plain SE formula does not apply).
struct StandardizedKolmogorov {
  double mu = 0.0;
  double sigma = 0.0;
  double kolmogorov = 0.0;
  double kolmogorov_se = 0.0;
  double standardized_mean = 0.0;
  double standardized_variance = 0.0;
};

StandardizedKolmogorov standardized_kolmogorov(std::span<const double> raw);

// distance of (raw - mu)/sigma from normal with mu, sigma held fixed;
// returns the estimate and its jackknife SE
std::pair<double, double> kolmogorov_fixed_standardization(
    std::span<const double> raw, double mu, double sigma);

}  // namespace steinmc
