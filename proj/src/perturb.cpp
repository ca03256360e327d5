#include "steinmc/perturb.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "steinmc/parallel.hpp"

namespace steinmc {

namespace {
const std::uint64_t kTagEngine = stream_tag("perturbative-engine");

void check_finite(double v, const char* what) {
  if (!std::isfinite(v))
    throw std::runtime_error(std::string("functional evaluation fault: ") +
                             what);
}
}  // namespace

void IndependentEnvironment::sample(std::vector<double>& out, Rng& rng) const {
  out.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] =
      sample_coordinate(i, rng);
}

IndependentEnvironment make_iid_environment(int n,
                                            std::function<double(Rng&)> law,
                                            std::string name) {
  if (n <= 0) throw std::invalid_argument("environment: n must be >= 1");
  IndependentEnvironment env;
  env.n = n;
  env.domain = std::move(name);
  env.sample_coordinate = [law = std::move(law)](int, Rng& rng) {
    return law(rng);
  };
  return env;
}

IndependentEnvironment make_uniform_unit_environment(int n) {
  const double s = std::sqrt(3.0);
  return make_iid_environment(
      n, [s](Rng& rng) { return rng.uniform(-s, s); }, "uniform(-sqrt3,sqrt3)");
}

Functional make_normalized_sum(int n) {
  if (n <= 0) throw std::invalid_argument("normalized sum: n must be >= 1");
  Functional f;
  f.n = n;
  const double inv = 1.0 / std::sqrt(static_cast<double>(n));
  f.evaluate = [inv](std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v;
    return s * inv;
  };
  return f;
}

double nu_mass(int n, int subset_size) {
  if (n <= 0) throw std::invalid_argument("nu_mass: n must be >= 1");
  if (subset_size < 0 || subset_size > n - 1)
    throw std::invalid_argument("nu_mass: size out of range");
  double binom = 1.0;  // C(n-1, k), exact in double for n <= ~30
  for (int j = 1; j <= subset_size; ++j)
    binom = binom * static_cast<double>(n - j) / static_cast<double>(j);
  return 1.0 / (static_cast<double>(n) * binom);
}

void sample_nu_subset(int n, int i, Rng& rng, std::vector<int>& subset,
                      std::vector<int>& pool) {
  if (n <= 0) throw std::invalid_argument("sample_nu_subset: n must be >= 1");
  if (i < 0 || i >= n)
    throw std::invalid_argument("sample_nu_subset: index out of range");
  subset.clear();
  const int k = rng.uniform_index(n);  // size uniform on {0, ..., n-1}
  if (k == 0) return;
  pool.clear();
  pool.reserve(static_cast<std::size_t>(n - 1));
  for (int j = 0; j < n; ++j)
    if (j != i) pool.push_back(j);
  // partial Fisher-Yates: first k entries form a uniform k-subset
  const int m = n - 1;
  for (int j = 0; j < k; ++j) {
    const int pick = j + rng.uniform_index(m - j);
    std::swap(pool[static_cast<std::size_t>(j)],
              pool[static_cast<std::size_t>(pick)]);
  }
  subset.assign(pool.begin(), pool.begin() + k);
}

std::vector<int> sample_nu_subset(int n, int i, Rng& rng) {
  std::vector<int> subset, pool;
  sample_nu_subset(n, i, rng, subset, pool);
  return subset;
}

void PerturbationPlan::validate() const {
  const int n = static_cast<int>(base.size());
  if (n == 0 || replacement.size() != base.size())
    throw std::invalid_argument("plan: configurations must match and be nonempty");
  if (index < 0 || index >= n)
    throw std::invalid_argument("plan: index out of range");
  for (int j : subset)
    if (j == index || j < 0 || j >= n)
      throw std::invalid_argument("plan: subset must lie in [n] minus the index");
}

DerivativeSample discrete_derivatives(const Functional& f,
                                      const PerturbationPlan& plan) {
  plan.validate();
  const double fx = f.standardized(plan.base);
  check_finite(fx, "f(X)");
  std::vector<double> work = plan.base;
  work[static_cast<std::size_t>(plan.index)] =
      plan.replacement[static_cast<std::size_t>(plan.index)];
  const double fxi = f.standardized(work);
  check_finite(fxi, "f(X^i)");
  DerivativeSample out;
  out.delta = fx - fxi;
  if (plan.subset.empty()) {
    out.delta_subset = out.delta;  // shared evaluation path
    return out;
  }
  work = plan.base;
  for (int j : plan.subset)
    work[static_cast<std::size_t>(j)] =
        plan.replacement[static_cast<std::size_t>(j)];
  const double fa = f.standardized(work);
  check_finite(fa, "f(X^A)");
  work[static_cast<std::size_t>(plan.index)] =
      plan.replacement[static_cast<std::size_t>(plan.index)];
  const double fai = f.standardized(work);
  check_finite(fai, "f(X^{A u i})");
  out.delta_subset = fa - fai;
  return out;
}

std::pair<double, double> telescoping_check(const Functional& f,
                                            std::span<const double> x,
                                            std::span<const double> x_prime) {
  const int n = static_cast<int>(x.size());
  if (n == 0 || x_prime.size() != x.size())
    throw std::invalid_argument("telescoping_check: configurations must match");
  if (n > kEnumerationCap)
    throw std::invalid_argument("telescoping_check: n exceeds enumeration cap");

  std::vector<int> others;
  std::vector<double> work(x.size());
  double lhs = 0.0;
  for (int i = 0; i < n; ++i) {
    others.clear();
    for (int j = 0; j < n; ++j)
      if (j != i) others.push_back(j);
    const std::uint32_t combos = 1u << (n - 1);
    for (std::uint32_t mask = 0; mask < combos; ++mask) {
      std::copy(x.begin(), x.end(), work.begin());
      int size = 0;
      for (int b = 0; b < n - 1; ++b) {
        if (mask & (1u << b)) {
          const int j = others[static_cast<std::size_t>(b)];
          work[static_cast<std::size_t>(j)] = x_prime[static_cast<std::size_t>(j)];
          ++size;
        }
      }
      const double fa = f.standardized(work);
      work[static_cast<std::size_t>(i)] = x_prime[static_cast<std::size_t>(i)];
      const double fai = f.standardized(work);
      lhs += nu_mass(n, size) * (fa - fai);
    }
  }
  const double rhs = f.standardized(x) - f.standardized(x_prime);
  return {lhs, rhs};
}

namespace {

struct ReplicaStats {
  double t = 0.0;            // inner mean of n/2 * Delta * Delta^A
  double third = 0.0;        // inner mean of n * |Delta|^3
  double within_var = 0.0;   // inner sample variance of the T terms
};

// One (X, X') replica with m_inner sampled (i, A) pairs. In nested mode a
// fresh X' is drawn per inner pair so the inner mean targets E(T|X).
ReplicaStats run_replica(const Functional& f, const IndependentEnvironment& env,
                         int m_inner, bool nested, Rng& rng) {
  const int n = env.n;
  std::vector<double> x, xp, work;
  std::vector<int> subset, pool;
  env.sample(x, rng);
  if (!nested) env.sample(xp, rng);
  const double fx = f.standardized(x);
  check_finite(fx, "f(X)");

  double sum_t = 0.0, sum_sq = 0.0, sum_third = 0.0;
  for (int k = 0; k < m_inner; ++k) {
    if (nested) env.sample(xp, rng);
    const int i = rng.uniform_index(n);
    sample_nu_subset(n, i, rng, subset, pool);

    work = x;
    work[static_cast<std::size_t>(i)] = xp[static_cast<std::size_t>(i)];
    const double fxi = f.standardized(work);
    check_finite(fxi, "f(X^i)");
    const double delta = fx - fxi;

    double delta_a;
    if (subset.empty()) {
      delta_a = delta;
    } else {
      work = x;
      for (int j : subset)
        work[static_cast<std::size_t>(j)] = xp[static_cast<std::size_t>(j)];
      const double fa = f.standardized(work);
      check_finite(fa, "f(X^A)");
      work[static_cast<std::size_t>(i)] = xp[static_cast<std::size_t>(i)];
      const double fai = f.standardized(work);
      check_finite(fai, "f(X^{A u i})");
      delta_a = fa - fai;
    }

    const double term = 0.5 * static_cast<double>(n) * delta * delta_a;
    sum_t += term;
    sum_sq += term * term;
    sum_third += static_cast<double>(n) * std::abs(delta) * delta * delta;
  }
  ReplicaStats out;
  const double m = static_cast<double>(m_inner);
  out.t = sum_t / m;
  out.third = sum_third / m;
  out.within_var = m > 1 ? (sum_sq - sum_t * sum_t / m) / (m - 1.0) : 0.0;
  return out;
}

std::vector<ReplicaStats> run_replicas(const Functional& f,
                                       const IndependentEnvironment& env,
                                       int replicas, int m_inner, bool nested,
                                       std::uint64_t seed, int jobs) {
  if (replicas < 2)
    throw std::invalid_argument("replicas must be >= 2");
  if (env.n <= 0) throw std::invalid_argument("environment: n must be >= 1");
  if (m_inner <= 0) m_inner = env.n;
  std::vector<ReplicaStats> slots(static_cast<std::size_t>(replicas));
  parallel_for_index(replicas, jobs, [&](std::int64_t r) {
    Rng rng(derive_seed(seed, kTagEngine, static_cast<std::uint64_t>(r)));
    slots[static_cast<std::size_t>(r)] =
        run_replica(f, env, m_inner, nested, rng);
  });
  return slots;
}

}  // namespace

TEstimate estimate_T(const Functional& f, const IndependentEnvironment& env,
                     int replicas, int m_inner, std::uint64_t seed, int jobs) {
  auto slots = run_replicas(f, env, replicas, m_inner, false, seed, jobs);
  TEstimate out;
  out.per_replica.reserve(slots.size());
  for (const auto& s : slots) out.per_replica.push_back(s.t);
  out.mean = mean_se(out.per_replica);
  out.variance = sample_variance(out.per_replica);
  return out;
}

MeanSE third_moment_sum(const Functional& f, const IndependentEnvironment& env,
                        int replicas, int m_inner, std::uint64_t seed,
                        int jobs) {
  auto slots = run_replicas(f, env, replicas, m_inner, false, seed, jobs);
  std::vector<double> thirds;
  thirds.reserve(slots.size());
  for (const auto& s : slots) thirds.push_back(s.third);
  return mean_se(thirds);
}

double BoundReport::combine(double variance_proxy, double third_moment) {
  const double v = std::max(variance_proxy, 0.0);
  const double u = std::max(third_moment, 0.0);
  return 2.0 * std::sqrt(std::sqrt(v) + 0.25 * u);
}

const char* variance_proxy_name(VarianceProxy p) {
  return p == VarianceProxy::VarT ? "var_T" : "nested_var_given_X";
}

BoundReport theorem_bound(const Functional& f,
                          const IndependentEnvironment& env,
                          const McConfig& cfg) {
  const bool nested = cfg.proxy == VarianceProxy::NestedVarGivenX;
  const int m_inner = cfg.m_inner > 0 ? cfg.m_inner : env.n;
  auto slots = run_replicas(f, env, cfg.replicas, m_inner, nested, cfg.seed,
                            cfg.jobs);
  const std::size_t r = slots.size();
  const double rd = static_cast<double>(r);

  std::vector<double> ts(r), thirds(r);
  double within_sum = 0.0;
  for (std::size_t j = 0; j < r; ++j) {
    ts[j] = slots[j].t;
    thirds[j] = slots[j].third;
    within_sum += slots[j].within_var;
  }

  BoundReport rep;
  rep.proxy = cfg.proxy;
  rep.replicas = cfg.replicas;
  rep.m_inner = m_inner;
  rep.seed = cfg.seed;
  rep.t_mean = mean_se(ts);
  rep.third_moment = mean_se(thirds);

  const double between = sample_variance(ts);
  double proxy_value = between;
  if (nested) {
    proxy_value = between - within_sum / rd / static_cast<double>(m_inner);
    if (proxy_value < 0.0) {
      proxy_value = 0.0;
      rep.variance_clamped = true;
    }
  }
  rep.t_variance = proxy_value;
  rep.bound = BoundReport::combine(proxy_value, rep.third_moment.estimate);

  // leave-one-out recomputation from sufficient statistics
  double s1 = 0.0, s2 = 0.0, u1 = 0.0;
  for (std::size_t j = 0; j < r; ++j) {
    s1 += ts[j];
    s2 += ts[j] * ts[j];
    u1 += thirds[j];
  }
  std::vector<double> loo_bound(r), loo_var(r);
  for (std::size_t j = 0; j < r; ++j) {
    const double rm1 = rd - 1.0;
    const double mean_j = (s1 - ts[j]) / rm1;
    double var_j = (s2 - ts[j] * ts[j] - rm1 * mean_j * mean_j) / (rm1 - 1.0);
    var_j = std::max(var_j, 0.0);
    double proxy_j = var_j;
    if (nested) {
      const double within_j = (within_sum - slots[j].within_var) / rm1;
      proxy_j = std::max(var_j - within_j / static_cast<double>(m_inner), 0.0);
    }
    loo_var[j] = proxy_j;
    loo_bound[j] = BoundReport::combine(proxy_j, (u1 - thirds[j]) / rm1);
  }
  rep.t_variance_se = jackknife_se(loo_var);
  rep.bound_se = jackknife_se(loo_bound);
  return rep;
}

double corollary_bound(std::span<const double> covariance_caps, int n,
                       double third_moment_sum) {
  if (n <= 0) throw std::invalid_argument("corollary_bound: n must be >= 1");
  if (covariance_caps.size() != static_cast<std::size_t>(n) * static_cast<std::size_t>(n))
    throw std::invalid_argument("corollary_bound: caps must be n x n");
  double total = 0.0;
  for (double c : covariance_caps) {
    if (!std::isfinite(c))
      throw std::invalid_argument("corollary_bound: non-finite cap");
    total += c;
  }
  if (total < 0.0)
    throw std::invalid_argument(
        "corollary_bound: cap sum must be nonnegative (caps dominate variances)");
  if (third_moment_sum < 0.0)
    throw std::invalid_argument("corollary_bound: third moment sum must be >= 0");
  return std::sqrt(2.0) * std::pow(total, 0.25) + std::sqrt(third_moment_sum);
}

}  // namespace steinmc
