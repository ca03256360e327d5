#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "steinmc/normal.hpp"
#include "steinmc/rng.hpp"
#include "steinmc/sample_stats.hpp"
#include "steinmc/stein_solver.hpp"

using namespace steinmc;

TEST_CASE("distance of a point mass at zero is one half") {
  for (std::size_t m : {1u, 7u, 100u}) {
    SampleSet s;
    s.values.assign(m, 0.0);
    CHECK(kolmogorov_distance(s) == doctest::Approx(0.5).epsilon(1e-12));
  }
}

TEST_CASE("quantile grid achieves the half-spacing optimum") {
  const int m = 100;
  SampleSet s;
  for (int i = 1; i <= m; ++i)
    s.values.push_back(normal::quantile((i - 0.5) / m));
  CHECK(kolmogorov_distance(s) <= 0.005 + 1e-6);
  CHECK(kolmogorov_distance(s) >= 0.005 - 1e-6);
}

TEST_CASE("reference normal draws stay under the DKW-style band") {
  const int m = 100000;
  for (std::uint64_t seed : {11u, 12u, 13u}) {
    SampleSet s;
    s.seed = seed;
    Rng rng(seed);
    s.values.reserve(m);
    for (int i = 0; i < m; ++i) s.values.push_back(rng.normal());
    CHECK(kolmogorov_distance(s) < 2.0 / std::sqrt(static_cast<double>(m)));
  }
}

TEST_CASE("distance is permutation invariant; input validated") {
  Rng rng(404);
  SampleSet s;
  for (int i = 0; i < 257; ++i) s.values.push_back(rng.normal() * 1.3);
  const double d = kolmogorov_distance(s);
  for (int shuffle = 0; shuffle < 5; ++shuffle) {
    for (std::size_t i = s.values.size() - 1; i > 0; --i)
      std::swap(s.values[i], s.values[static_cast<std::size_t>(
                                 rng.uniform_index(static_cast<int>(i + 1)))]);
    CHECK(kolmogorov_distance(s) == d);
  }
  auto sorted = s.sorted_values();
  CHECK(std::is_sorted(sorted.begin(), sorted.end()));
  CHECK_THROWS_AS(kolmogorov_distance(SampleSet{}), std::invalid_argument);
}

TEST_CASE("upper smoothed indicator dominates the empirical cdf") {
  // mean g(W) >= P(W <= t) pathwise because g >= 1{. <= t}
  Rng rng(77);
  for (int trial = 0; trial < 20; ++trial) {
    const double t = rng.uniform(-1.5, 1.5);
    SmoothedIndicator g{t, rng.uniform(0.05, 0.5),
                        SmoothedIndicator::Direction::Upper};
    double gsum = 0.0;
    int below = 0;
    const int m = 500;
    for (int i = 0; i < m; ++i) {
      const double w = rng.normal() * rng.uniform(0.5, 2.0);
      gsum += g(w);
      below += w <= t ? 1 : 0;
    }
    CHECK(gsum / m >= static_cast<double>(below) / m - 1e-12);
  }
}

TEST_CASE("discrepancy: zero dictionary gives zero, empty is rejected") {
  SampleSet s;
  Rng rng(5);
  for (int i = 0; i < 100; ++i) s.values.push_back(rng.normal());
  std::vector<DictionaryEntry> zero(1);
  zero[0].label = "zero";
  zero[0].f = [](double) { return 0.0; };
  zero[0].f_prime = [](double) { return 0.0; };
  CHECK(stein_discrepancy(s, zero) == 0.0);
  CHECK_THROWS_AS(stein_discrepancy(s, std::vector<DictionaryEntry>{}),
                  std::invalid_argument);
  CHECK_THROWS_AS(stein_discrepancy(SampleSet{}, zero), std::invalid_argument);
}

TEST_CASE("discrepancy flags a point mass and clears true normals") {
  auto dict = default_stein_dictionary(2);
  CHECK(dict.size() == 41);

  SampleSet degenerate;
  degenerate.values.assign(2000, 0.0);
  CHECK(stein_discrepancy(degenerate, dict) > 0.05);

  // the scaled solutions stay inside the unit class
  Rng probe(31);
  for (const auto& e : dict)
    for (int i = 0; i < 50; ++i) {
      const double x = probe.uniform(-9.5, 9.5);
      CHECK(std::abs(e.f(x)) <= 1.0 + 1e-9);
      CHECK(std::abs(e.f_prime(x)) <= 1.0 + 1e-9);
    }

  for (std::uint64_t seed : {21u, 22u}) {
    SampleSet s;
    s.seed = seed;
    Rng rng(seed);
    for (int i = 0; i < 100000; ++i) s.values.push_back(rng.normal());
    CHECK(stein_discrepancy(s, dict, 2) <= 0.1);
  }
}

TEST_CASE("tabulated dictionary matches direct evaluation") {
  auto dict = default_stein_dictionary(2);
  const double eps = 0.2, t = 0.0;  // middle entry
  const auto& entry = dict[20];
  auto sol = SteinSolution::for_indicator({t, eps, SmoothedIndicator::Direction::Upper});
  Rng rng(123);
  for (int i = 0; i < 25; ++i) {
    const double x = rng.uniform(-8.5, 8.5);
    CHECK(std::abs(entry.f(x) - 0.5 * eps * sol.value(x)) < 1e-6);
    CHECK(std::abs(entry.f_prime(x) - 0.5 * eps * sol.derivative(x)) < 1e-5);
  }
  // outside the table the exact evaluator takes over
  CHECK(std::abs(entry.f(9.4) - 0.5 * eps * sol.value(9.4)) < 1e-9);
}

TEST_CASE("standardized distance helper") {
  Rng rng(2718);
  std::vector<double> raw;
  for (int i = 0; i < 4000; ++i) raw.push_back(3.0 + 2.5 * rng.normal());
  auto r = standardized_kolmogorov(raw);
  CHECK(std::abs(r.mu - 3.0) < 0.2);
  CHECK(std::abs(r.sigma - 2.5) < 0.2);
  CHECK(r.kolmogorov < 2.0 / std::sqrt(4000.0));
  CHECK(r.kolmogorov_se > 0.0);
  CHECK(std::abs(r.standardized_mean) < 1e-12);
  CHECK(std::abs(r.standardized_variance - 1.0) < 1e-12);

  auto [ks, se] = kolmogorov_fixed_standardization(raw, r.mu, r.sigma);
  CHECK(ks == doctest::Approx(r.kolmogorov).epsilon(1e-12));
  CHECK(se > 0.0);
}
