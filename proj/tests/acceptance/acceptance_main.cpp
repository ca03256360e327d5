// Acceptance suite: one criterion per line, pass/fail, nonzero exit on any
// failure. Each criterion pins its tolerance in code; seeds are fixed so
// every run is reproducible.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <string>
#include <vector>

#include "steinmc/couplings.hpp"
#include "steinmc/lattice_mst.hpp"
#include "steinmc/normal.hpp"
#include "steinmc/parallel.hpp"
#include "steinmc/perturb.hpp"
#include "steinmc/rng.hpp"
#include "steinmc/sample_stats.hpp"
#include "steinmc/stats.hpp"
#include "steinmc/stein_solver.hpp"

using namespace steinmc;
using namespace steinmc::mst;

namespace {

int g_jobs = 0;  // 0 = all hardware threads

struct Outcome {
  bool pass = false;
  std::string detail;
};

// 1. Perturbation formula vs full MST recomputation on random boxes.
Outcome lemma42_oracle() {
  const int envs_per_radius = 70, resamples = 10;
  double worst = 0.0;
  long checks = 0;
  for (int radius : {1, 2, 3}) {
    BoxGraph g(2, radius);
    for (int env = 0; env < envs_per_radius; ++env) {
      Rng rng(derive_seed(101, stream_tag("acc-lemma42"),
                          static_cast<std::uint64_t>(radius * 1000 + env)));
      std::vector<double> w(static_cast<std::size_t>(g.edge_count()));
      for (auto& v : w) v = rng.uniform01();
      const auto sorted = sort_edges(g, w);
      const double before = build_mst(g, w, &sorted).total_weight;
      for (int s = 0; s < resamples; ++s) {
        const int e = rng.uniform_index(g.edge_count());
        const double w_new = rng.uniform01();
        const double a = alpha(g, w, e, &sorted);
        auto modified = w;
        modified[static_cast<std::size_t>(e)] = w_new;
        const double after = build_mst(g, modified).total_weight;
        const double gap = std::abs(
            delta_m(a, w[static_cast<std::size_t>(e)], w_new) - (before - after));
        worst = std::max(worst, gap);
        ++checks;
      }
    }
  }
  char buf[128];
  std::snprintf(buf, sizeof(buf), "%ld checks, max |formula - recompute| = %.3g",
                checks, worst);
  return {worst <= 1e-9, buf};
}

// 2. Membership rule omega_e < alpha vs the built tree, every edge.
Outcome lemma43_membership() {
  BoxGraph g(2, 2);
  long mismatches = 0, edges = 0;
  for (int inst = 0; inst < 50; ++inst) {
    Rng rng(derive_seed(202, stream_tag("acc-lemma43"),
                        static_cast<std::uint64_t>(inst)));
    std::vector<double> w(static_cast<std::size_t>(g.edge_count()));
    for (auto& v : w) v = rng.uniform01();
    const auto sorted = sort_edges(g, w);
    auto tree = build_mst(g, w, &sorted);
    std::vector<char> in_tree(static_cast<std::size_t>(g.edge_count()), 0);
    for (int e : tree.tree_edges) in_tree[static_cast<std::size_t>(e)] = 1;
    for (int e = 0; e < g.edge_count(); ++e) {
      ++edges;
      if (mst_membership(g, w, e, &sorted) !=
          static_cast<bool>(in_tree[static_cast<std::size_t>(e)]))
        ++mismatches;
    }
  }
  char buf[128];
  std::snprintf(buf, sizeof(buf), "%ld edges checked, %ld mismatches", edges,
                mismatches);
  return {mismatches == 0, buf};
}

// 3. Exhaustive telescoping identity for three functionals.
Outcome telescoping() {
  Functional sum_f, max_f, prod_f;
  double worst = 0.0;
  long checks = 0;
  for (int n = 1; n <= 8; ++n) {
    sum_f.n = max_f.n = prod_f.n = n;
    sum_f.evaluate = [](std::span<const double> x) {
      double s = 0.0;
      for (double v : x) s += v;
      return s / std::sqrt(static_cast<double>(x.size()));
    };
    max_f.evaluate = [](std::span<const double> x) {
      double m = x[0];
      for (double v : x) m = std::max(m, v);
      return m;
    };
    prod_f.evaluate = [](std::span<const double> x) {
      double p = 1.0;
      for (double v : x) p *= v;
      return p;
    };
    Rng rng(derive_seed(303, stream_tag("acc-telescope"),
                        static_cast<std::uint64_t>(n)));
    for (const auto* f : {&sum_f, &max_f, &prod_f}) {
      for (int draw = 0; draw < 20; ++draw) {
        std::vector<double> x(static_cast<std::size_t>(n)),
            xp(static_cast<std::size_t>(n));
        for (auto& v : x) v = rng.uniform(0.5, 1.5);
        for (auto& v : xp) v = rng.uniform(0.5, 1.5);
        auto [lhs, rhs] = telescoping_check(*f, x, xp);
        worst = std::max(worst, std::abs(lhs - rhs) / (1.0 + std::abs(rhs)));
        ++checks;
      }
    }
  }
  char buf[128];
  std::snprintf(buf, sizeof(buf), "%ld identities, worst relative gap %.3g",
                checks, worst);
  return {worst <= 1e-9, buf};
}

// 4. E T = E W^2 = 1 for the standardized uniform sum.
Outcome t_mean_identity() {
  const int n = 20;
  auto env = make_uniform_unit_environment(n);
  auto f = make_normalized_sum(n);
  auto est = estimate_T(f, env, 100000, n, 404404, g_jobs);
  const double z = std::abs(est.mean.estimate - 1.0) / est.mean.se;
  char buf[128];
  std::snprintf(buf, sizeof(buf), "T-hat = %.5f (se %.5f), |z| = %.2f",
                est.mean.estimate, est.mean.se, z);
  return {z <= 4.0, buf};
}

// 5. n^{-1/4} rate for the iid uniform sum bound.
Outcome rate_slope() {
  std::vector<double> log_n, log_bound;
  std::string pieces;
  for (int n : {16, 64, 256, 1024}) {
    auto env = make_uniform_unit_environment(n);
    auto f = make_normalized_sum(n);
    McConfig cfg;
    cfg.replicas = 2000;
    cfg.seed = derive_seed(505, stream_tag("acc-rate"),
                           static_cast<std::uint64_t>(n));
    cfg.jobs = g_jobs;
    auto rep = theorem_bound(f, env, cfg);
    log_n.push_back(std::log(static_cast<double>(n)));
    log_bound.push_back(std::log(rep.bound));
    char piece[48];
    std::snprintf(piece, sizeof(piece), " b(%d)=%.4f", n, rep.bound);
    pieces += piece;
  }
  const double slope = fit_slope(log_n, log_bound);
  char buf[192];
  std::snprintf(buf, sizeof(buf), "slope = %.4f in [-0.35, -0.15]?%s", slope,
                pieces.c_str());
  return {slope >= -0.35 && slope <= -0.15, buf};
}

// 6. Subset-measure goodness of fit for every index at n = 6.
Outcome nu_goodness_of_fit() {
  const int n = 6, draws = 1000000;
  const double critical = chi_square_quantile(0.999, 31.0);
  double worst = 0.0;
  std::vector<double> chis(static_cast<std::size_t>(n), 0.0);
  parallel_for_index(n, g_jobs, [&](std::int64_t i) {
    Rng rng(derive_seed(606, stream_tag("acc-nu"),
                        static_cast<std::uint64_t>(i)));
    std::vector<std::int64_t> counts(32, 0);
    std::vector<int> subset, pool;
    for (int d = 0; d < draws; ++d) {
      sample_nu_subset(n, static_cast<int>(i), rng, subset, pool);
      std::size_t mask = 0;
      for (int j : subset)
        mask |= std::size_t(1) << (j < static_cast<int>(i) ? j : j - 1);
      ++counts[mask];
    }
    double chi = 0.0;
    for (std::size_t mask = 0; mask < 32; ++mask) {
      const double expect =
          draws * nu_mass(n, static_cast<int>(std::popcount(mask)));
      const double diff = static_cast<double>(counts[mask]) - expect;
      chi += diff * diff / expect;
    }
    chis[static_cast<std::size_t>(i)] = chi;
  });
  for (double chi : chis) worst = std::max(worst, chi);
  char buf[128];
  std::snprintf(buf, sizeof(buf),
                "max chi-square %.2f vs critical %.2f (df 31, p 1e-3)", worst,
                critical);
  return {worst <= critical, buf};
}

CltExperiment run_clt() {
  const std::vector<int> radii{4, 8, 16};
  return clt_experiment(2, radii, 1000, 1, g_jobs);
}

// 7. Kolmogorov distance decreasing in the radius, small at n = 16.
Outcome clt_trend(const CltExperiment& exp) {
  const double d4 = exp.rows[0].kolmogorov;
  const double d8 = exp.rows[1].kolmogorov;
  const double d16 = exp.rows[2].kolmogorov;
  char buf[160];
  std::snprintf(buf, sizeof(buf), "K(4)=%.4f > K(8)=%.4f > K(16)=%.4f <= 0.05?",
                d4, d8, d16);
  return {d4 > d8 && d8 > d16 && d16 <= 0.05, buf};
}

// 8. sigma^2 / (2n+1)^2 stable within a factor of 3.
Outcome variance_scaling(const CltExperiment& exp) {
  double lo = 1e300, hi = 0.0;
  std::string parts;
  for (const auto& row : exp.rows) {
    lo = std::min(lo, row.sigma_sq_over_volume);
    hi = std::max(hi, row.sigma_sq_over_volume);
    char piece[48];
    std::snprintf(piece, sizeof(piece), " r(%d)=%.4g", row.radius,
                  row.sigma_sq_over_volume);
    parts += piece;
  }
  char buf[192];
  std::snprintf(buf, sizeof(buf), "max/min = %.3f < 3?%s", hi / lo,
                parts.c_str());
  return {hi / lo < 3.0, buf};
}

// 9. Localization: E|Delta - gamma_k| strictly decreasing, beta >= alpha.
Outcome localization() {
  const std::vector<int> ks{2, 4, 8};
  auto stats = localization_experiment(2, 16, ks, 150, 4, 909909, g_jobs);
  bool ordered = true, decreasing = true;
  std::string parts;
  for (std::size_t i = 0; i < stats.size(); ++i) {
    ordered = ordered && stats[i].beta_ge_alpha_everywhere;
    if (i > 0)
      decreasing = decreasing && stats[i].gap.estimate < stats[i - 1].gap.estimate;
    char piece[64];
    std::snprintf(piece, sizeof(piece), " gap(k=%d)=%.5f", stats[i].k,
                  stats[i].gap.estimate);
    parts += piece;
  }
  char buf[224];
  std::snprintf(buf, sizeof(buf), "decreasing? %s; beta>=alpha pathwise? %s;%s",
                decreasing ? "yes" : "no", ordered ? "yes" : "no",
                parts.c_str());
  return {ordered && decreasing, buf};
}

// 10. Equation residual and the proof bounds on a 1001-point grid.
Outcome stein_residual_grid() {
  std::vector<double> grid(1001);
  for (int i = 0; i <= 1000; ++i)
    grid[static_cast<std::size_t>(i)] = -8.0 + 0.016 * i;
  double worst_res = 0.0;
  bool bounds_hold = true;
  for (double t : {-2.0, -0.5, 0.0, 1.0, 2.0}) {
    for (double eps : {0.1, 0.2}) {
      for (auto dir : {SmoothedIndicator::Direction::Upper,
                       SmoothedIndicator::Direction::Lower}) {
        SmoothedIndicator g{t, eps, dir};
        SteinSolution sol = SteinSolution::for_indicator(g);
        double max_f = 0.0, max_fp = 0.0;
        for (double x : grid) {
          const double f = sol.value(x);
          const double fp = sol.derivative(x);
          worst_res =
              std::max(std::abs(fp - x * f - (g(x) - sol.g_mean())), worst_res);
          max_f = std::max(max_f, std::abs(f));
          max_fp = std::max(max_fp, std::abs(fp));
        }
        bounds_hold = bounds_hold && max_f <= 2.0 / eps &&
                      max_fp <= std::sqrt(2.0 / 3.141592653589793) / eps;
      }
    }
  }
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "20 solutions x 1001 points: max residual %.3g <= 1e-6? "
                "bounds hold? %s",
                worst_res, bounds_hold ? "yes" : "no");
  return {worst_res <= 1e-6 && bounds_hold, buf};
}

// 11. Lindeberg swap: exact pathwise telescoping, null moment-matched totals.
Outcome lindeberg() {
  const int n = 32;
  const double s3 = std::sqrt(3.0);
  auto x_law = [s3](Rng& rng) { return rng.uniform(-s3, s3); };
  auto z_law = [](Rng& rng) { return rng.normal(); };
  auto quad = [n](std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return s / static_cast<double>(n);
  };
  const double cscale = std::pow(static_cast<double>(n), -1.5);
  auto cubic = [cscale](std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v * v * v;
    return s * cscale;
  };
  auto rq = lindeberg_telescope(quad, x_law, z_law, n, 1000, 111111, g_jobs);
  auto rc = lindeberg_telescope(cubic, x_law, z_law, n, 1000, 222222, g_jobs);
  const double zq = std::abs(rq.total.estimate) / rq.total.se;
  const double zc = std::abs(rc.total.estimate) / rc.total.se;
  const double resid =
      std::max(rq.max_relative_residual, rc.max_relative_residual);
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "pathwise residual %.2g <= 1e-12? |z_quad| %.2f, |z_cubic| "
                "%.2f <= 4?",
                resid, zq, zc);
  return {resid <= 1e-12 && zq <= 4.0 && zc <= 4.0, buf};
}

// 12. Classical couplings: pair slope, size-bias identities, chain E T.
Outcome classical_couplings() {
  auto diag = exchangeable_pair_diagnostics(make_iid_sum_pair(50), 100000, 20,
                                            121212, g_jobs);
  const bool slope_ok = std::abs(diag.slope - 1.0) <= 0.1;

  const std::vector<std::pair<std::string, std::function<double(double)>>> gs = {
      {"identity", [](double x) { return x; }},
      {"square", [](double x) { return x * x; }},
      {"exp_neg", [](double x) { return std::exp(-x); }},
  };
  auto exp_check = size_bias_identity_check(make_exponential_size_bias(), gs,
                                            100000, 343434, g_jobs);
  auto bern_check = size_bias_identity_check(make_bernoulli_size_bias(0.3), gs,
                                             100000, 565656, g_jobs);
  const bool bias_ok =
      exp_check.worst_abs_z <= 4.0 && bern_check.worst_abs_z <= 4.0;

  auto chain =
      dependency_graph_bound(make_rademacher_chain(100), 20000, 787878, g_jobs);
  const double expected = 99.0 / 100.0;
  const double z_chain =
      std::abs(chain.t_mean.estimate - expected) / chain.t_mean.se;
  char buf[224];
  std::snprintf(buf, sizeof(buf),
                "slope %.3f (+-0.1)? bias z: exp %.2f, bern %.2f (<=4)? "
                "chain z %.2f (<=4)?",
                diag.slope, exp_check.worst_abs_z, bern_check.worst_abs_z,
                z_chain);
  return {slope_ok && bias_ok && z_chain <= 4.0, buf};
}

}  // namespace

int main(int argc, char** argv) {
  if (argc > 1) g_jobs = std::atoi(argv[1]);

  const CltExperiment clt = run_clt();

  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "perturbation formula vs MST recomputation", lemma42_oracle},
      {2, "membership rule vs built tree", lemma43_membership},
      {3, "telescoping identity (exhaustive, n <= 8)", telescoping},
      {4, "E T = E W^2 identity (uniform sum, n = 20)", t_mean_identity},
      {5, "n^{-1/4} rate window for the sum bound", rate_slope},
      {6, "subset-measure goodness of fit (n = 6)", nu_goodness_of_fit},
      {7, "lattice MST normal-distance trend", [&] { return clt_trend(clt); }},
      {8, "variance growth proportional to volume",
       [&] { return variance_scaling(clt); }},
      {9, "localized thresholds approximate the derivative", localization},
      {10, "equation residual and proof bounds on the grid",
       stein_residual_grid},
      {11, "coordinate-swap telescoping (n = 32)", lindeberg},
      {12, "pair slope, size-bias identities, chain E T", classical_couplings},
  };

  int failures = 0;
  for (const auto& c : criteria) {
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out.pass = false;
      out.detail = std::string("exception: ") + e.what();
    }
    std::printf("[%s] %2d. %s - %s\n", out.pass ? "PASS" : "FAIL", c.id,
                c.name, out.detail.c_str());
    std::fflush(stdout);
    if (!out.pass) ++failures;
  }
  std::printf("%d/%zu criteria passed\n",
              static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
