#include <cmath>
#include <vector>

#include "doctest.h"
#include "steinmc/couplings.hpp"
#include "steinmc/rng.hpp"

using namespace steinmc;

TEST_CASE("iid sum pair satisfies the three conditions at lambda = 1/n") {
  const int n = 50;
  auto pair = make_iid_sum_pair(n);
  CHECK(pair.lambda == doctest::Approx(1.0 / n));
  auto diag = exchangeable_pair_diagnostics(pair, 100000, 20, 31415, 2);
  CHECK(std::abs(diag.slope - 1.0) < 0.1);
  CHECK(std::abs(diag.quadratic_ratio - 1.0) < 0.05);
  CHECK(diag.third_ratio > 0.0);
  // binned conditional mean of (W'-W)^2 is 2 lambda per bin: the scaled
  // ratio is 1 within 4 sigma in every bin
  for (const auto& bin : diag.bins) {
    CHECK(bin.count > 0);
    CHECK(std::abs(bin.sq_mean - 1.0) < 4.0 * bin.sq_se);
  }
}

TEST_CASE("trivial pair W' = W zeroes the drift and quadratic terms") {
  ExchangeablePairSampler pair;
  pair.lambda = 0.1;
  pair.draw = [](Rng& rng) {
    const double w = rng.normal();
    return std::make_pair(w, w);
  };
  auto diag = exchangeable_pair_diagnostics(pair, 5000, 10, 99, 1);
  CHECK(diag.slope == 0.0);
  CHECK(diag.quadratic_ratio == 0.0);
  CHECK(diag.third_ratio == 0.0);
}

TEST_CASE("pair increments are symmetric about zero for the sum pair") {
  auto pair = make_iid_sum_pair(20);
  Rng rng(777);
  const int r = 20000;
  double sign_sum = 0.0;
  for (int i = 0; i < r; ++i) {
    auto [w, wp] = pair.draw(rng);
    const double d = w - wp;
    if (d != 0.0) sign_sum += d > 0.0 ? 1.0 : -1.0;
  }
  CHECK(std::abs(sign_sum / r) < 4.0 / std::sqrt(static_cast<double>(r)));
}

TEST_CASE("pair diagnostics validation") {
  auto pair = make_iid_sum_pair(10);
  CHECK_THROWS_AS(exchangeable_pair_diagnostics(pair, 100, 20, 1, 1),
                  std::invalid_argument);
  CHECK_THROWS_AS(exchangeable_pair_diagnostics(pair, 5000, 3, 1, 1),
                  std::invalid_argument);
  ExchangeablePairSampler degenerate;
  degenerate.lambda = 0.1;
  degenerate.draw = [](Rng&) { return std::make_pair(1.0, 1.0); };
  CHECK_THROWS_AS(exchangeable_pair_diagnostics(degenerate, 5000, 10, 1, 1),
                  std::invalid_argument);
}

TEST_CASE("rademacher chain: E T = (n-1)/n and variance decays") {
  const int n = 100;
  auto model = make_rademacher_chain(n);
  auto rep = dependency_graph_bound(model, 20000, 2025, 2);
  const double expect = static_cast<double>(n - 1) / n;
  CHECK(std::abs(rep.t_mean.estimate - expect) < 4.0 * rep.t_mean.se);
  CHECK(rep.kolmogorov < 0.1);

  double prev = 1e9;
  for (int size : {32, 128, 512}) {
    auto r = dependency_graph_bound(make_rademacher_chain(size), 20000, 7, 2);
    CHECK(r.t_variance < prev);
    prev = r.t_variance;
  }
}

TEST_CASE("dependency decomposition W_i + sum_{N_i} X_j = W pathwise") {
  auto model = make_rademacher_chain(12);
  Rng rng(5);
  std::vector<double> x;
  for (int trial = 0; trial < 50; ++trial) {
    model.sample(x, rng);
    double w = 0.0;
    for (double v : x) w += v;
    for (int i = 0; i < model.size(); ++i) {
      double nb = 0.0, w_i = 0.0;
      std::vector<char> in_nb(static_cast<std::size_t>(model.size()), 0);
      for (int j : model.neighborhoods[static_cast<std::size_t>(i)]) {
        nb += x[static_cast<std::size_t>(j)];
        in_nb[static_cast<std::size_t>(j)] = 1;
      }
      for (int j = 0; j < model.size(); ++j)
        if (!in_nb[static_cast<std::size_t>(j)]) w_i += x[static_cast<std::size_t>(j)];
      CHECK(std::abs(w_i + nb - w) <= 1e-12 * (1.0 + std::abs(w)));
    }
  }
}

TEST_CASE("empty graph: T = sum X_i^2 and E T = Var W") {
  // iid coordinates scaled so Var W = 1
  const int n = 10;
  DependencyGraphModel model;
  model.neighborhoods.resize(n);
  for (int i = 0; i < n; ++i) model.neighborhoods[i] = {i};
  const double s = std::sqrt(3.0);
  model.sample = [n, s](std::vector<double>& x, Rng& rng) {
    x.resize(n);
    for (auto& v : x) v = rng.uniform(-s, s) / std::sqrt(static_cast<double>(n));
  };
  auto rep = dependency_graph_bound(model, 40000, 11, 2);
  CHECK(std::abs(rep.t_mean.estimate - 1.0) < 4.0 * rep.t_mean.se);
}

TEST_CASE("asymmetric graphs are rejected at validation") {
  DependencyGraphModel model;
  model.neighborhoods = {{0, 1}, {1}};
  model.sample = [](std::vector<double>& x, Rng&) { x = {0.0, 0.0}; };
  CHECK_THROWS_AS(model.validate(), std::invalid_argument);
  CHECK_THROWS_AS(dependency_graph_bound(model, 100, 1, 1),
                  std::invalid_argument);
  DependencyGraphModel no_self;
  no_self.neighborhoods = {{1}, {0}};
  CHECK_THROWS_AS(no_self.validate(), std::invalid_argument);
}

TEST_CASE("size bias: bernoulli case is the identity p g(1)") {
  auto pair = make_bernoulli_size_bias(0.3);
  const std::vector<std::pair<std::string, std::function<double(double)>>> gs = {
      {"identity", [](double x) { return x; }},
      {"square", [](double x) { return x * x; }},
  };
  auto check = size_bias_identity_check(pair, gs, 50000, 404, 2);
  CHECK(check.worst_abs_z < 4.0);
  for (const auto& row : check.rows) CHECK(std::abs(row.z) < 4.0);
}

TEST_CASE("size bias: exponential base with gamma(2,1) biased version") {
  auto pair = make_exponential_size_bias();
  const std::vector<std::pair<std::string, std::function<double(double)>>> gs = {
      {"identity", [](double x) { return x; }},
      {"square", [](double x) { return x * x; }},
      {"exp_neg", [](double x) { return std::exp(-x); }},
  };
  auto check = size_bias_identity_check(pair, gs, 100000, 3, 2);
  CHECK(check.worst_abs_z < 4.0);
}

TEST_CASE("size bias: iid bernoulli sum with one coordinate size-biased") {
  auto pair = make_bernoulli_sum_size_bias(20, 0.3);
  CHECK(pair.lambda == doctest::Approx(6.0));
  const std::vector<std::pair<std::string, std::function<double(double)>>> gs = {
      {"identity", [](double x) { return x; }},
      {"exp_neg", [](double x) { return std::exp(-x); }},
  };
  auto check = size_bias_identity_check(pair, gs, 100000, 12, 2);
  CHECK(check.worst_abs_z < 4.0);

  // base mean matches lambda, biased draws stay nonnegative
  Rng rng(9);
  double mean = 0.0;
  const int r = 50000;
  for (int i = 0; i < r; ++i) {
    mean += pair.draw_base(rng);
    CHECK(pair.draw_biased(rng) >= 0.0);
  }
  mean /= r;
  CHECK(std::abs(mean - pair.lambda) < 4.0 * std::sqrt(20 * 0.3 * 0.7 / r));
}

TEST_CASE("size bias contract: negative base draws are a violation") {
  SizeBiasPair bad;
  bad.lambda = 1.0;
  bad.draw_base = [](Rng& rng) { return -rng.uniform01(); };
  bad.draw_biased = [](Rng&) { return 1.0; };
  const std::vector<std::pair<std::string, std::function<double(double)>>> gs = {
      {"identity", [](double x) { return x; }}};
  CHECK_THROWS_AS(size_bias_identity_check(bad, gs, 100, 1, 1),
                  std::runtime_error);
}

TEST_CASE("lindeberg telescoping is pathwise exact") {
  const int n = 32;
  const double s3 = std::sqrt(3.0);
  auto h = [n](std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return s / static_cast<double>(n);
  };
  auto res = lindeberg_telescope(
      h, [s3](Rng& rng) { return rng.uniform(-s3, s3); },
      [](Rng& rng) { return rng.normal(); }, n, 1000, 2024, 2);
  CHECK(res.max_relative_residual <= 1e-12);
  CHECK(static_cast<int>(res.step_means.size()) == n);
  // matched second moments: total within 4 sigma of zero
  CHECK(std::abs(res.total.estimate) < 4.0 * res.total.se);
}

TEST_CASE("lindeberg: odd-moment symmetry gives a null cubic total") {
  const int n = 24;
  const double s3 = std::sqrt(3.0);
  const double scale = std::pow(static_cast<double>(n), -1.5);
  auto h = [scale](std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v * v * v;
    return s * scale;
  };
  auto res = lindeberg_telescope(
      h, [s3](Rng& rng) { return rng.uniform(-s3, s3); },
      [](Rng& rng) { return rng.normal(); }, n, 4000, 4096, 2);
  CHECK(std::abs(res.total.estimate) < 4.0 * res.total.se);
}

TEST_CASE("lindeberg determinism across jobs") {
  const int n = 8;
  auto h = [](std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v;
    return s;
  };
  auto a = lindeberg_telescope(
      h, [](Rng& rng) { return rng.uniform01(); },
      [](Rng& rng) { return rng.normal(); }, n, 300, 5, 1);
  auto b = lindeberg_telescope(
      h, [](Rng& rng) { return rng.uniform01(); },
      [](Rng& rng) { return rng.normal(); }, n, 300, 5, 2);
  CHECK(a.total.estimate == b.total.estimate);
  for (int i = 0; i < n; ++i)
    CHECK(a.step_means[i].estimate == b.step_means[i].estimate);
}
