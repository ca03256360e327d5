#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "steinmc/rng.hpp"
#include "steinmc/stats.hpp"

namespace steinmc {

struct ExchangeablePairSampler {
  std::function<std::pair<double, double>(Rng&)> draw;  // (W, W')
  double lambda = 0.0;
};

// W = sum(X)/sqrt(n), W' = W - X_I/sqrt(n) + X'_I/sqrt(n) with I uniform;
// lambda = 1/n. Coordinates are Uniform(-sqrt3, sqrt3).
ExchangeablePairSampler make_iid_sum_pair(int n);

struct PairBin {
  double w_mean = 0.0;
  double drift_mean = 0.0;   // E(W' - W | bin)
  double drift_se = 0.0;
  double sq_mean = 0.0;      // E((W' - W)^2 / (2 lambda) | bin)
  double sq_se = 0.0;
  std::int64_t count = 0;
};

// Residuals of the three pair conditions, estimated by equal-count
// binning on W. The conditions are asymptotic, so these are reported as
// numbers with errors, not pass/fail.
struct PairDiagnostics {
  double slope = 0.0;     // binned drift regressed through origin on -lambda W
  double slope_se = 0.0;
  double quadratic_ratio = 0.0;  // mean (W'-W)^2 / (2 lambda)
  double quadratic_se = 0.0;
  double third_ratio = 0.0;      // E|W'-W|^3 / lambda
  double third_se = 0.0;
  std::vector<PairBin> bins;
  int replicas = 0;
};

PairDiagnostics exchangeable_pair_diagnostics(const ExchangeablePairSampler& pair,
                                              int replicas, int bins,
                                              std::uint64_t seed, int jobs = 1);

struct DependencyGraphModel {
  std::vector<std::vector<int>> neighborhoods;  // N_i, each containing i
  std::function<void(std::vector<double>&, Rng&)> sample;  // centered X

  int size() const { return static_cast<int>(neighborhoods.size()); }
  void validate() const;  // symmetric adjacency, self-membership
};

// X_i = Y_i Y_{i+1} / sqrt(n) for Rademacher Y_1..Y_n; variables are the
// n-1 products, adjacent when the index gap is 1.
DependencyGraphModel make_rademacher_chain(int n);

struct DependencyGraphReport {
  MeanSE t_mean;            // sigma^2 := E T for T = sum_i X_i (W - W_i)
  double t_variance = 0.0;
  double t_variance_se = 0.0;
  double kolmogorov = 0.0;  // distance of W / sigma-hat from normal
  int replicas = 0;
};

DependencyGraphReport dependency_graph_bound(const DependencyGraphModel& model,
                                             int replicas, std::uint64_t seed,
                                             int jobs = 1);

struct SizeBiasPair {
  std::function<double(Rng&)> draw_base;    // W >= 0
  std::function<double(Rng&)> draw_biased;  // W*
  double lambda = 0.0;                      // E W
};

SizeBiasPair make_bernoulli_size_bias(double p);     // W* == 1
SizeBiasPair make_exponential_size_bias();           // W ~ Exp(1), W* ~ Gamma(2,1)
SizeBiasPair make_bernoulli_sum_size_bias(int n, double p);  // W* = 1 + Bin(n-1, p)

struct SizeBiasRow {
  std::string label;
  double lhs = 0.0;       // mean W g(W)
  double rhs = 0.0;       // lambda * mean g(W*)
  double residual = 0.0;
  double se = 0.0;
  double z = 0.0;
};

struct SizeBiasCheck {
  std::vector<SizeBiasRow> rows;
  double worst_abs_z = 0.0;
  int replicas = 0;
};

// E(W g(W)) = lambda E g(W*) for each test function, with MC error bands.
SizeBiasCheck size_bias_identity_check(
    const SizeBiasPair& pair,
    const std::vector<std::pair<std::string, std::function<double(double)>>>&
        test_functions,
    int replicas, std::uint64_t seed, int jobs = 1);

struct LindebergResult {
  std::vector<MeanSE> step_means;  // E[h(U^i) - h(U^{i-1})]
  MeanSE total;
  double max_relative_residual = 0.0;  // pathwise telescoping defect
  int replicas = 0;
};

// Hybrid vectors U^i = (X_1..X_i, Z_{i+1}..Z_n) under common random
// numbers; the per-path step sum telescopes to h(X) - h(Z) identically.
LindebergResult lindeberg_telescope(
    const std::function<double(std::span<const double>)>& h,
    const std::function<double(Rng&)>& x_law,
    const std::function<double(Rng&)>& z_law, int n, int replicas,
    std::uint64_t seed, int jobs = 1);

}  // namespace steinmc
