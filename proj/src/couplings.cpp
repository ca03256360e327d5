#include "steinmc/couplings.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "steinmc/parallel.hpp"
#include "steinmc/sample_stats.hpp"

namespace steinmc {

namespace {
const std::uint64_t kTagPair = stream_tag("exchangeable-pair");
const std::uint64_t kTagGraph = stream_tag("dependency-graph");
const std::uint64_t kTagSizeBias = stream_tag("size-bias");
const std::uint64_t kTagLindeberg = stream_tag("lindeberg");
}  // namespace

ExchangeablePairSampler make_iid_sum_pair(int n) {
  if (n <= 0) throw std::invalid_argument("iid sum pair: n must be >= 1");
  const double s = std::sqrt(3.0);
  const double root_n = std::sqrt(static_cast<double>(n));
  ExchangeablePairSampler pair;
  pair.lambda = 1.0 / static_cast<double>(n);
  pair.draw = [n, s, root_n](Rng& rng) {
    double w = 0.0;
    std::vector<double> x(static_cast<std::size_t>(n));
    for (auto& v : x) {
      v = rng.uniform(-s, s);
      w += v;
    }
    w /= root_n;
    const int i = rng.uniform_index(n);
    const double xi_new = rng.uniform(-s, s);
    const double wp = w - x[static_cast<std::size_t>(i)] / root_n + xi_new / root_n;
    return std::make_pair(w, wp);
  };
  return pair;
}

PairDiagnostics exchangeable_pair_diagnostics(const ExchangeablePairSampler& pair,
                                              int replicas, int bins,
                                              std::uint64_t seed, int jobs) {
  if (replicas < 1000)
    throw std::invalid_argument("pair diagnostics: replicas must be >= 1000");
  if (bins < 5) throw std::invalid_argument("pair diagnostics: bins must be >= 5");
  if (!(pair.lambda > 0.0))
    throw std::invalid_argument("pair diagnostics: lambda must be > 0");

  std::vector<double> w(static_cast<std::size_t>(replicas));
  std::vector<double> wp(static_cast<std::size_t>(replicas));
  parallel_for_index(replicas, jobs, [&](std::int64_t r) {
    Rng rng(derive_seed(seed, kTagPair, static_cast<std::uint64_t>(r)));
    auto [a, b] = pair.draw(rng);
    w[static_cast<std::size_t>(r)] = a;
    wp[static_cast<std::size_t>(r)] = b;
  });

  const double lambda = pair.lambda;
  PairDiagnostics out;
  out.replicas = replicas;

  {
    std::vector<double> sq(w.size()), cube(w.size());
    for (std::size_t j = 0; j < w.size(); ++j) {
      const double d = wp[j] - w[j];
      sq[j] = d * d / (2.0 * lambda);
      cube[j] = std::abs(d) * d * d / lambda;
    }
    auto ms = mean_se(sq);
    out.quadratic_ratio = ms.estimate;
    out.quadratic_se = ms.se;
    auto mc = mean_se(cube);
    out.third_ratio = mc.estimate;
    out.third_se = mc.se;
  }

  if (sample_variance(w) == 0.0)
    throw std::invalid_argument("pair diagnostics: degenerate W (zero variance)");

  // equal-count bins on W
  std::vector<std::size_t> order(w.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return w[a] < w[b]; });
  const std::size_t b = static_cast<std::size_t>(bins);
  const std::size_t base = w.size() / b, rem = w.size() % b;
  std::size_t pos = 0;
  for (std::size_t k = 0; k < b; ++k) {
    const std::size_t len = base + (k < rem ? 1 : 0);
    PairBin bin;
    bin.count = static_cast<std::int64_t>(len);
    std::vector<double> drifts(len), sqs(len);
    double wsum = 0.0;
    for (std::size_t j = 0; j < len; ++j) {
      const std::size_t idx = order[pos + j];
      const double d = wp[idx] - w[idx];
      wsum += w[idx];
      drifts[j] = d;
      sqs[j] = d * d / (2.0 * lambda);
    }
    pos += len;
    bin.w_mean = wsum / static_cast<double>(len);
    auto md = mean_se(drifts);
    bin.drift_mean = md.estimate;
    bin.drift_se = md.se;
    auto msq = mean_se(sqs);
    bin.sq_mean = msq.estimate;
    bin.sq_se = msq.se;
    out.bins.push_back(bin);
  }

  // through-origin regression of binned drift on -lambda * W
  double sxy = 0.0, sxx = 0.0, var_num = 0.0;
  for (const auto& bin : out.bins) {
    const double p = -lambda * bin.w_mean;
    sxy += p * bin.drift_mean;
    sxx += p * p;
    var_num += p * p * bin.drift_se * bin.drift_se;
  }
  if (sxx == 0.0)
    throw std::invalid_argument("pair diagnostics: degenerate bin predictors");
  out.slope = sxy / sxx;
  out.slope_se = std::sqrt(var_num) / sxx;
  return out;
}

void DependencyGraphModel::validate() const {
  const int n = size();
  std::vector<std::vector<bool>> adj(static_cast<std::size_t>(n),
                                     std::vector<bool>(static_cast<std::size_t>(n), false));
  for (int i = 0; i < n; ++i) {
    bool self = false;
    for (int j : neighborhoods[static_cast<std::size_t>(i)]) {
      if (j < 0 || j >= n)
        throw std::invalid_argument("dependency graph: neighbor out of range");
      adj[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = true;
      if (j == i) self = true;
    }
    if (!self)
      throw std::invalid_argument("dependency graph: N_i must contain i");
  }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (adj[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] !=
          adj[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)])
        throw std::invalid_argument("dependency graph: asymmetric adjacency");
}

DependencyGraphModel make_rademacher_chain(int n) {
  if (n < 2) throw std::invalid_argument("rademacher chain: n must be >= 2");
  DependencyGraphModel model;
  const int m = n - 1;
  model.neighborhoods.resize(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) {
    auto& nb = model.neighborhoods[static_cast<std::size_t>(i)];
    if (i > 0) nb.push_back(i - 1);
    nb.push_back(i);
    if (i + 1 < m) nb.push_back(i + 1);
  }
  const double root_n = std::sqrt(static_cast<double>(n));
  model.sample = [n, m, root_n](std::vector<double>& x, Rng& rng) {
    std::vector<double> y(static_cast<std::size_t>(n));
    for (auto& v : y) v = rng.rademacher();
    x.resize(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i)
      x[static_cast<std::size_t>(i)] =
          y[static_cast<std::size_t>(i)] * y[static_cast<std::size_t>(i + 1)] / root_n;
  };
  return model;
}

DependencyGraphReport dependency_graph_bound(const DependencyGraphModel& model,
                                             int replicas, std::uint64_t seed,
                                             int jobs) {
  model.validate();
  if (replicas < 2)
    throw std::invalid_argument("dependency graph: replicas must be >= 2");
  const int n = model.size();
  std::vector<double> w(static_cast<std::size_t>(replicas));
  std::vector<double> t(static_cast<std::size_t>(replicas));
  parallel_for_index(replicas, jobs, [&](std::int64_t r) {
    Rng rng(derive_seed(seed, kTagGraph, static_cast<std::uint64_t>(r)));
    std::vector<double> x;
    model.sample(x, rng);
    double wsum = 0.0;
    for (double v : x) wsum += v;
    double tsum = 0.0;
    for (int i = 0; i < n; ++i) {
      double s = 0.0;  // W - W_i = sum over N_i
      for (int j : model.neighborhoods[static_cast<std::size_t>(i)])
        s += x[static_cast<std::size_t>(j)];
      tsum += x[static_cast<std::size_t>(i)] * s;
    }
    w[static_cast<std::size_t>(r)] = wsum;
    t[static_cast<std::size_t>(r)] = tsum;
  });

  DependencyGraphReport out;
  out.replicas = replicas;
  out.t_mean = mean_se(t);
  out.t_variance = sample_variance(t);
  {
    // leave-one-out variances for the jackknife
    double s1 = 0.0, s2 = 0.0;
    for (double v : t) {
      s1 += v;
      s2 += v * v;
    }
    const double rd = static_cast<double>(replicas);
    std::vector<double> loo(t.size());
    for (std::size_t j = 0; j < t.size(); ++j) {
      const double m = (s1 - t[j]) / (rd - 1.0);
      loo[j] = std::max((s2 - t[j] * t[j] - (rd - 1.0) * m * m) / (rd - 2.0), 0.0);
    }
    out.t_variance_se = jackknife_se(loo);
  }
  if (out.t_mean.estimate <= 0.0)
    throw std::runtime_error("dependency graph: nonpositive sigma^2 estimate");
  const double sigma = std::sqrt(out.t_mean.estimate);
  SampleSet standardized;
  standardized.seed = seed;
  standardized.values.reserve(w.size());
  for (double v : w) standardized.values.push_back(v / sigma);
  out.kolmogorov = kolmogorov_distance(standardized);
  return out;
}

SizeBiasPair make_bernoulli_size_bias(double p) {
  if (!(p > 0.0 && p <= 1.0))
    throw std::invalid_argument("bernoulli size bias: p must be in (0,1]");
  SizeBiasPair pair;
  pair.lambda = p;
  pair.draw_base = [p](Rng& rng) { return rng.uniform01() < p ? 1.0 : 0.0; };
  pair.draw_biased = [](Rng&) { return 1.0; };
  return pair;
}

SizeBiasPair make_exponential_size_bias() {
  SizeBiasPair pair;
  pair.lambda = 1.0;
  pair.draw_base = [](Rng& rng) { return rng.exponential(); };
  pair.draw_biased = [](Rng& rng) { return rng.exponential() + rng.exponential(); };
  return pair;
}

SizeBiasPair make_bernoulli_sum_size_bias(int n, double p) {
  if (n < 1) throw std::invalid_argument("bernoulli sum size bias: n must be >= 1");
  if (!(p > 0.0 && p <= 1.0))
    throw std::invalid_argument("bernoulli sum size bias: p must be in (0,1]");
  SizeBiasPair pair;
  pair.lambda = static_cast<double>(n) * p;
  pair.draw_base = [n, p](Rng& rng) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += rng.uniform01() < p ? 1.0 : 0.0;
    return s;
  };
  pair.draw_biased = [n, p](Rng& rng) {
    double s = 1.0;  // X_1 size-biased to its success value
    for (int i = 1; i < n; ++i) s += rng.uniform01() < p ? 1.0 : 0.0;
    return s;
  };
  return pair;
}

SizeBiasCheck size_bias_identity_check(
    const SizeBiasPair& pair,
    const std::vector<std::pair<std::string, std::function<double(double)>>>&
        test_functions,
    int replicas, std::uint64_t seed, int jobs) {
  if (test_functions.empty())
    throw std::invalid_argument("size bias check: no test functions");
  if (replicas < 2)
    throw std::invalid_argument("size bias check: replicas must be >= 2");
  if (!(pair.lambda > 0.0))
    throw std::invalid_argument("size bias check: lambda must be > 0");

  std::vector<double> w(static_cast<std::size_t>(replicas));
  std::vector<double> ws(static_cast<std::size_t>(replicas));
  parallel_for_index(replicas, jobs, [&](std::int64_t r) {
    Rng rng(derive_seed(seed, kTagSizeBias, static_cast<std::uint64_t>(r)));
    w[static_cast<std::size_t>(r)] = pair.draw_base(rng);
    ws[static_cast<std::size_t>(r)] = pair.draw_biased(rng);
  });
  for (double v : w)
    if (v < 0.0)
      throw std::runtime_error("size bias check: negative W sample (contract violation)");

  SizeBiasCheck out;
  out.replicas = replicas;
  std::vector<double> lhs(w.size()), rhs(w.size());
  for (const auto& [label, g] : test_functions) {
    for (std::size_t j = 0; j < w.size(); ++j) {
      lhs[j] = w[j] * g(w[j]);
      rhs[j] = pair.lambda * g(ws[j]);
    }
    auto ml = mean_se(lhs);
    auto mr = mean_se(rhs);
    SizeBiasRow row;
    row.label = label;
    row.lhs = ml.estimate;
    row.rhs = mr.estimate;
    row.residual = ml.estimate - mr.estimate;
    row.se = std::sqrt(ml.se * ml.se + mr.se * mr.se);
    row.z = row.se > 0.0 ? row.residual / row.se : 0.0;
    out.worst_abs_z = std::max(out.worst_abs_z, std::abs(row.z));
    out.rows.push_back(std::move(row));
  }
  return out;
}

LindebergResult lindeberg_telescope(
    const std::function<double(std::span<const double>)>& h,
    const std::function<double(Rng&)>& x_law,
    const std::function<double(Rng&)>& z_law, int n, int replicas,
    std::uint64_t seed, int jobs) {
  if (n < 1) throw std::invalid_argument("lindeberg: n must be >= 1");
  if (replicas < 2)
    throw std::invalid_argument("lindeberg: replicas must be >= 2");

  std::vector<std::vector<double>> steps(
      static_cast<std::size_t>(replicas),
      std::vector<double>(static_cast<std::size_t>(n)));
  std::vector<double> totals(static_cast<std::size_t>(replicas));
  std::vector<double> residuals(static_cast<std::size_t>(replicas));

  parallel_for_index(replicas, jobs, [&](std::int64_t r) {
    Rng rng(derive_seed(seed, kTagLindeberg, static_cast<std::uint64_t>(r)));
    std::vector<double> x(static_cast<std::size_t>(n)),
        u(static_cast<std::size_t>(n));
    for (auto& v : x) v = x_law(rng);
    for (auto& v : u) v = z_law(rng);  // U^0 is the Z configuration
    double prev = h(u);
    if (!std::isfinite(prev))
      throw std::runtime_error("lindeberg: non-finite h value");
    const double h_z = prev;
    double scale = std::abs(prev);
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      u[static_cast<std::size_t>(i)] = x[static_cast<std::size_t>(i)];
      const double cur = h(u);
      if (!std::isfinite(cur))
        throw std::runtime_error("lindeberg: non-finite h value");
      steps[static_cast<std::size_t>(r)][static_cast<std::size_t>(i)] = cur - prev;
      total += cur - prev;
      scale = std::max(scale, std::abs(cur));
      prev = cur;
    }
    totals[static_cast<std::size_t>(r)] = total;
    residuals[static_cast<std::size_t>(r)] =
        std::abs(total - (prev - h_z)) / (1.0 + scale);
  });

  LindebergResult out;
  out.replicas = replicas;
  out.total = mean_se(totals);
  out.step_means.reserve(static_cast<std::size_t>(n));
  std::vector<double> column(static_cast<std::size_t>(replicas));
  for (int i = 0; i < n; ++i) {
    for (std::size_t r = 0; r < column.size(); ++r)
      column[r] = steps[r][static_cast<std::size_t>(i)];
    out.step_means.push_back(mean_se(column));
  }
  out.max_relative_residual =
      *std::max_element(residuals.begin(), residuals.end());
  return out;
}

}  // namespace steinmc
