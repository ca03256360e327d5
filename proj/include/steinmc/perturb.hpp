#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "steinmc/rng.hpp"
#include "steinmc/stats.hpp"

namespace steinmc {

// n independent coordinates with per-index samplers. Resampling one index
// never touches the bits of any other coordinate.
struct IndependentEnvironment {
  int n = 0;
  std::string domain;
  std::function<double(int index, Rng&)> sample_coordinate;

  void sample(std::vector<double>& out, Rng& rng) const;
};

IndependentEnvironment make_iid_environment(int n,
                                            std::function<double(Rng&)> law,
                                            std::string name);
// Uniform(-sqrt3, sqrt3): mean 0, variance 1
IndependentEnvironment make_uniform_unit_environment(int n);

// Deterministic functional of a configuration. The standardized value
// W = (f - mu) / sigma is what enters every bound.
struct Functional {
  int n = 0;
  std::function<double(std::span<const double>)> evaluate;
  double mu = 0.0;
  double sigma = 1.0;

  double standardized(std::span<const double> x) const {
    return (evaluate(x) - mu) / sigma;
  }
};

// f = sum(x) / sqrt(n); already standardized for unit-variance coordinates
Functional make_normalized_sum(int n);

// nu(A) = 1 / (n * C(n-1, |A|)) on subsets of [n] \ {i}; each size class
// carries total mass exactly 1/n, so sampling draws the size uniformly on
// {0, ..., n-1} and then a uniform subset of that size.
double nu_mass(int n, int subset_size);

// scratch-buffer form for hot loops; `pool` is reusable working storage
void sample_nu_subset(int n, int i, Rng& rng, std::vector<int>& subset,
                      std::vector<int>& pool);
std::vector<int> sample_nu_subset(int n, int i, Rng& rng);

// A perturbation: coordinate i, resample subset A (excluding i), and the
// paired configurations. X^A agrees with `base` off A and with
// `replacement` on A.
struct PerturbationPlan {
  int index = 0;
  std::vector<int> subset;
  std::vector<double> base;
  std::vector<double> replacement;

  void validate() const;
};

struct DerivativeSample {
  double delta = 0.0;         // f(X) - f(X^i)
  double delta_subset = 0.0;  // f(X^A) - f(X^{A u i})
};

// Standardized randomized derivatives. Exactly four functional
// evaluations; when A is empty the first pair is reused, so the two
// derivatives are bit-identical by construction.
DerivativeSample discrete_derivatives(const Functional& f,
                                      const PerturbationPlan& plan);

inline constexpr int kEnumerationCap = 12;

// Exhaustive lhs = sum_i sum_A nu(A) (f(X^A) - f(X^{A u i})) against
// rhs = f(X) - f(X'). The telescoping makes these identical.
std::pair<double, double> telescoping_check(const Functional& f,
                                            std::span<const double> x,
                                            std::span<const double> x_prime);

struct TEstimate {
  MeanSE mean;              // estimate of E T
  double variance = 0.0;    // across-replica sample variance
  std::vector<double> per_replica;
};

// Per replica: draw (X, X'), then m_inner pairs (i uniform, A ~ nu); the
// inner average of n/2 * Delta_i f * Delta_i f^A is unbiased for the
// T-statistic's conditional mean given (X, X'). m_inner = 0 means n.
TEstimate estimate_T(const Functional& f, const IndependentEnvironment& env,
                     int replicas, int m_inner, std::uint64_t seed,
                     int jobs = 1);

// Unbiased estimate of sum_i E|Delta_i f|^3 (i uniform, n multiplier).
MeanSE third_moment_sum(const Functional& f, const IndependentEnvironment& env,
                        int replicas, int m_inner, std::uint64_t seed,
                        int jobs = 1);

// Which upper bound stands in for Var(E(T|W)). The variance of the
// per-replica T values is the conservative default; the nested estimator
// targets Var(E(T|X)) with the usual one-way ANOVA bias correction.
enum class VarianceProxy { VarT, NestedVarGivenX };

struct McConfig {
  int replicas = 2000;
  int m_inner = 0;  // 0 -> n
  std::uint64_t seed = 0;
  int jobs = 1;
  VarianceProxy proxy = VarianceProxy::VarT;
};

struct BoundReport {
  MeanSE t_mean;
  double t_variance = 0.0;  // value of the proxy actually used
  double t_variance_se = 0.0;
  bool variance_clamped = false;
  MeanSE third_moment;
  double bound = 0.0;
  double bound_se = 0.0;
  std::optional<double> corollary;
  VarianceProxy proxy = VarianceProxy::VarT;
  int replicas = 0;
  int m_inner = 0;
  std::uint64_t seed = 0;

  // 2 * (sqrt(variance proxy) + third moment sum / 4)^{1/2}
  static double combine(double variance_proxy, double third_moment);
};

const char* variance_proxy_name(VarianceProxy p);

BoundReport theorem_bound(const Functional& f,
                          const IndependentEnvironment& env,
                          const McConfig& cfg);

// sqrt(2) * (sum c_ij)^{1/4} + (third moment sum)^{1/2};
// covariance_caps is row-major n x n
double corollary_bound(std::span<const double> covariance_caps, int n,
                       double third_moment_sum);

}  // namespace steinmc
