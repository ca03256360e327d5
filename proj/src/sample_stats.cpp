#include "steinmc/sample_stats.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>

#include "steinmc/normal.hpp"
#include "steinmc/parallel.hpp"
#include "steinmc/stats.hpp"
#include "steinmc/stein_solver.hpp"

namespace steinmc {

std::vector<double> SampleSet::sorted_values() const {
  std::vector<double> v = values;
  std::sort(v.begin(), v.end());
  return v;
}

double kolmogorov_distance(const SampleSet& samples) {
  if (samples.values.empty())
    throw std::invalid_argument("kolmogorov_distance: empty sample set");
  for (double v : samples.values)
    if (!std::isfinite(v))
      throw std::invalid_argument("kolmogorov_distance: non-finite sample");
  const std::vector<double> w = samples.sorted_values();
  const double m = static_cast<double>(w.size());
  double d = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double phi = normal::cdf(w[i]);
    d = std::max(d, phi - static_cast<double>(i) / m);        // gap below jump
    d = std::max(d, static_cast<double>(i + 1) / m - phi);    // gap above jump
  }
  return d;
}

namespace {

// Cubic Hermite interpolation on a uniform grid; falls back to the exact
// evaluator outside the tabulated range.
struct HermiteTable {
  double x0 = 0.0, dx = 1.0;
  std::vector<double> y, d;
  std::function<double(double)> outside;

  double operator()(double x) const {
    const double last = x0 + dx * static_cast<double>(y.size() - 1);
    if (x < x0 || x > last) return outside(x);
    auto i = static_cast<std::size_t>((x - x0) / dx);
    if (i >= y.size() - 1) i = y.size() - 2;
    const double t = (x - (x0 + dx * static_cast<double>(i))) / dx;
    const double t2 = t * t, t3 = t2 * t;
    const double h00 = 2 * t3 - 3 * t2 + 1;
    const double h10 = t3 - 2 * t2 + t;
    const double h01 = -2 * t3 + 3 * t2;
    const double h11 = t3 - t2;
    return h00 * y[i] + h10 * dx * d[i] + h01 * y[i + 1] + h11 * dx * d[i + 1];
  }
};

constexpr double kTableLo = -8.75;
constexpr double kTableStep = 1.0 / 64.0;
constexpr int kTablePoints = 1121;  // covers [-8.75, 8.75]

}  // namespace

std::vector<DictionaryEntry> default_stein_dictionary(int jobs) {
  constexpr int kCount = 41;
  constexpr double kWidth = 0.2;
  std::vector<DictionaryEntry> out(kCount);
  parallel_for_index(kCount, jobs, [&](std::int64_t idx) {
    const double t = -4.0 + 0.2 * static_cast<double>(idx);
    SmoothedIndicator g{t, kWidth, SmoothedIndicator::Direction::Upper};
    auto sol = std::make_shared<SteinSolution>(SteinSolution::for_indicator(g));
    const double scale = kWidth / 2.0;  // puts |f|, |f'|, |f''| within 1

    HermiteTable f_tab, fp_tab;
    f_tab.x0 = fp_tab.x0 = kTableLo;
    f_tab.dx = fp_tab.dx = kTableStep;
    f_tab.y.resize(kTablePoints);
    f_tab.d.resize(kTablePoints);
    fp_tab.y.resize(kTablePoints);
    fp_tab.d.resize(kTablePoints);
    for (int j = 0; j < kTablePoints; ++j) {
      const double x = kTableLo + kTableStep * j;
      const double f = sol->value(x);
      const double fp = sol->derivative(x);
      f_tab.y[j] = scale * f;
      f_tab.d[j] = scale * fp;
      fp_tab.y[j] = scale * fp;
      // f'' from the equation itself: f'' = f + x f' + g'
      fp_tab.d[j] = scale * (f + x * fp + g.slope(x));
    }
    f_tab.outside = [sol, scale](double x) { return scale * sol->value(x); };
    fp_tab.outside = [sol, scale](double x) {
      return scale * sol->derivative(x);
    };

    DictionaryEntry e;
    e.label = "indicator_t" + std::to_string(t);
    e.f = f_tab;
    e.f_prime = fp_tab;
    out[static_cast<std::size_t>(idx)] = std::move(e);
  });
  return out;
}

namespace {

// KS distance over a presorted array with one index skipped and an affine
// standardization; shared by the jackknife loops
double ks_skip(std::span<const double> sorted, std::size_t skip, double mu,
               double sigma) {
  const std::size_t m = sorted.size() - 1;
  double d = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double v = sorted[i < skip ? i : i + 1];
    const double phi = normal::cdf((v - mu) / sigma);
    d = std::max(d, phi - static_cast<double>(i) / static_cast<double>(m));
    d = std::max(d, static_cast<double>(i + 1) / static_cast<double>(m) - phi);
  }
  return d;
}

}  // namespace

StandardizedKolmogorov standardized_kolmogorov(std::span<const double> raw) {
  if (raw.size() < 2)
    throw std::invalid_argument("standardized_kolmogorov: need >= 2 values");
  std::vector<double> sorted(raw.begin(), raw.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  double s1 = 0.0, s2 = 0.0;
  for (double v : sorted) {
    s1 += v;
    s2 += v * v;
  }
  StandardizedKolmogorov out;
  out.mu = s1 / n;
  const double var = (s2 - n * out.mu * out.mu) / (n - 1.0);
  if (!(var > 0.0))
    throw std::invalid_argument("standardized_kolmogorov: degenerate sample");
  out.sigma = std::sqrt(var);

  SampleSet standardized;
  standardized.values.reserve(sorted.size());
  double zs = 0.0, zs2 = 0.0;
  for (double v : sorted) {
    const double z = (v - out.mu) / out.sigma;
    standardized.values.push_back(z);
    zs += z;
    zs2 += z * z;
  }
  out.kolmogorov = kolmogorov_distance(standardized);
  out.standardized_mean = zs / n;
  out.standardized_variance = (zs2 - n * out.standardized_mean * out.standardized_mean) / (n - 1.0);

  if (sorted.size() >= 3) {
    std::vector<double> loo(sorted.size());
    for (std::size_t j = 0; j < sorted.size(); ++j) {
      const double v = sorted[j];
      const double mu_j = (s1 - v) / (n - 1.0);
      const double var_j =
          (s2 - v * v - (n - 1.0) * mu_j * mu_j) / (n - 2.0);
      const double sigma_j = std::sqrt(std::max(var_j, 1e-300));
      loo[j] = ks_skip(sorted, j, mu_j, sigma_j);
    }
    out.kolmogorov_se = jackknife_se(loo);
  }
  return out;
}

std::pair<double, double> kolmogorov_fixed_standardization(
    std::span<const double> raw, double mu, double sigma) {
  if (raw.size() < 2)
    throw std::invalid_argument("kolmogorov_fixed_standardization: need >= 2 values");
  if (!(sigma > 0.0))
    throw std::invalid_argument("kolmogorov_fixed_standardization: sigma must be > 0");
  std::vector<double> sorted(raw.begin(), raw.end());
  std::sort(sorted.begin(), sorted.end());
  SampleSet standardized;
  standardized.values.reserve(sorted.size());
  for (double v : sorted) standardized.values.push_back((v - mu) / sigma);
  const double ks = kolmogorov_distance(standardized);
  std::vector<double> loo(sorted.size());
  for (std::size_t j = 0; j < sorted.size(); ++j)
    loo[j] = ks_skip(sorted, j, mu, sigma);
  return {ks, jackknife_se(loo)};
}

double stein_discrepancy(const SampleSet& samples,
                         std::span<const DictionaryEntry> dictionary,
                         int jobs) {
  if (dictionary.empty())
    throw std::invalid_argument("stein_discrepancy: empty dictionary");
  if (samples.values.empty())
    throw std::invalid_argument("stein_discrepancy: empty sample set");
  std::vector<double> means(dictionary.size(), 0.0);
  parallel_for_index(static_cast<std::int64_t>(dictionary.size()), jobs,
                     [&](std::int64_t k) {
                       const auto& e = dictionary[static_cast<std::size_t>(k)];
                       double acc = 0.0;
                       for (double w : samples.values)
                         acc += e.f_prime(w) - w * e.f(w);
                       means[static_cast<std::size_t>(k)] =
                           acc / static_cast<double>(samples.values.size());
                     });
  double worst = 0.0;
  for (double m : means) worst = std::max(worst, std::abs(m));
  return 2.0 * std::sqrt(worst);
}

}  // namespace steinmc
