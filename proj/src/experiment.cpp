#include "steinmc/experiment.hpp"

#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <sstream>

#include "steinmc/couplings.hpp"
#include "steinmc/parallel.hpp"
#include "steinmc/lattice_mst.hpp"
#include "steinmc/normal.hpp"
#include "steinmc/perturb.hpp"
#include "steinmc/sample_stats.hpp"
#include "steinmc/stein_solver.hpp"
#include "steinmc/version.hpp"

namespace steinmc {

namespace {

using nlohmann::json;

// ---------------------------------------------------------------------
// parameter schemas
// ---------------------------------------------------------------------

struct ParamSpec {
  const char* key;
  enum class Type { Int, Num, Str, IntArray, NumArray } type;
  bool required = false;
  json def;
  long long min_int = 0;
  bool has_min = false;
};

struct KindSpec {
  std::vector<ParamSpec> params;
  std::function<void(const json&, std::uint64_t, int, ExperimentRecord&)> run;
};

ParamSpec req_int(const char* key, long long min) {
  return {key, ParamSpec::Type::Int, true, json(), min, true};
}
ParamSpec opt_int(const char* key, long long def, long long min) {
  return {key, ParamSpec::Type::Int, false, json(def), min, true};
}
ParamSpec opt_str(const char* key, const char* def) {
  return {key, ParamSpec::Type::Str, false, json(def), 0, false};
}

void validate_params(const json& in, const std::vector<ParamSpec>& specs,
                     json& out) {
  for (auto it = in.begin(); it != in.end(); ++it) {
    if (it.key() == "kind") continue;
    bool known = false;
    for (const auto& s : specs) known = known || it.key() == s.key;
    if (!known) throw ConfigError("unknown config key '" + it.key() + "'");
  }
  for (const auto& s : specs) {
    if (!in.contains(s.key)) {
      if (s.required)
        throw ConfigError(std::string("missing required key '") + s.key + "'");
      out[s.key] = s.def;
      continue;
    }
    const json& v = in.at(s.key);
    switch (s.type) {
      case ParamSpec::Type::Int:
        if (!v.is_number_integer())
          throw ConfigError(std::string("key '") + s.key + "' must be an integer");
        if (s.has_min && v.get<long long>() < s.min_int)
          throw ConfigError(std::string("key '") + s.key + "' must be >= " +
                            std::to_string(s.min_int));
        break;
      case ParamSpec::Type::Num:
        if (!v.is_number())
          throw ConfigError(std::string("key '") + s.key + "' must be numeric");
        break;
      case ParamSpec::Type::Str:
        if (!v.is_string())
          throw ConfigError(std::string("key '") + s.key + "' must be a string");
        break;
      case ParamSpec::Type::IntArray:
        if (!v.is_array() || v.empty())
          throw ConfigError(std::string("key '") + s.key +
                            "' must be a nonempty array");
        for (const auto& x : v)
          if (!x.is_number_integer())
            throw ConfigError(std::string("key '") + s.key +
                              "' must hold integers");
        break;
      case ParamSpec::Type::NumArray:
        if (!v.is_array() || v.empty())
          throw ConfigError(std::string("key '") + s.key +
                            "' must be a nonempty array");
        for (const auto& x : v)
          if (!x.is_number())
            throw ConfigError(std::string("key '") + s.key +
                              "' must hold numbers");
        break;
    }
    out[s.key] = v;
  }
}

StatisticRow row(std::string name, double est, double se, std::int64_t count) {
  StatisticRow r;
  r.name = std::move(name);
  r.estimate = est;
  r.se = se;
  r.count = count;
  return r;
}

VarianceProxy parse_proxy(const std::string& s) {
  if (s == "var_t") return VarianceProxy::VarT;
  if (s == "nested") return VarianceProxy::NestedVarGivenX;
  throw ConfigError("key 'proxy' must be 'var_t' or 'nested'");
}

void append_bound_rows(const BoundReport& rep, std::optional<double> point,
                       ExperimentRecord& out) {
  auto t_mean = row("t_mean", rep.t_mean.estimate, rep.t_mean.se, rep.replicas);
  t_mean.point = point;
  out.rows.push_back(t_mean);

  auto t_var = row("t_variance", rep.t_variance, rep.t_variance_se, rep.replicas);
  t_var.point = point;
  t_var.components["proxy"] = variance_proxy_name(rep.proxy);
  t_var.components["clamped"] = rep.variance_clamped;
  out.rows.push_back(t_var);

  auto third = row("third_moment_sum", rep.third_moment.estimate,
                   rep.third_moment.se, rep.replicas);
  third.point = point;
  out.rows.push_back(third);

  auto bound = row("theorem_bound", rep.bound, rep.bound_se, rep.replicas);
  bound.point = point;
  bound.components["t_variance"] = rep.t_variance;
  bound.components["third_moment_sum"] = rep.third_moment.estimate;
  bound.components["proxy"] = variance_proxy_name(rep.proxy);
  out.rows.push_back(bound);
}

// ---------------------------------------------------------------------
// kind runners
// ---------------------------------------------------------------------

void run_iid_sum_bound(const json& p, std::uint64_t seed, int jobs,
                       ExperimentRecord& out) {
  const int n = p.at("n").get<int>();
  McConfig cfg;
  cfg.replicas = p.at("replicas").get<int>();
  cfg.m_inner = p.at("m_inner").get<int>();
  cfg.seed = seed;
  cfg.jobs = jobs;
  cfg.proxy = parse_proxy(p.at("proxy").get<std::string>());
  const auto env = make_uniform_unit_environment(n);
  const auto f = make_normalized_sum(n);
  append_bound_rows(theorem_bound(f, env, cfg), n, out);
}

void run_mst_clt(const json& p, std::uint64_t seed, int jobs,
                 ExperimentRecord& out) {
  const int d = p.at("d").get<int>();
  std::vector<int> radii = p.at("radii").get<std::vector<int>>();
  const int envs = p.at("environments").get<int>();
  auto exp = mst::clt_experiment(d, radii, envs, seed, jobs);
  for (const auto& r : exp.rows) {
    auto ks = row("kolmogorov", r.kolmogorov, r.kolmogorov_se, envs);
    ks.point = r.radius;
    ks.components["radius_seed"] = r.seed;
    out.rows.push_back(ks);
    auto mu = row("mu_hat", r.mu_hat,
                  r.sigma_hat / std::sqrt(static_cast<double>(envs)), envs);
    mu.point = r.radius;
    out.rows.push_back(mu);
    auto sig = row("sigma_hat", r.sigma_hat, 0.0, envs);
    sig.point = r.radius;
    out.rows.push_back(sig);
    auto ratio = row("sigma_sq_over_volume", r.sigma_sq_over_volume, 0.0, envs);
    ratio.point = r.radius;
    out.rows.push_back(ratio);
    auto zm = row("standardized_mean", r.standardized_mean, 0.0, envs);
    zm.point = r.radius;
    out.rows.push_back(zm);
    auto zv = row("standardized_variance", r.standardized_variance, 0.0, envs);
    zv.point = r.radius;
    out.rows.push_back(zv);
  }
}

void run_mst_bound(const json& p, std::uint64_t seed, int jobs,
                   ExperimentRecord& out) {
  const int d = p.at("d").get<int>();
  const int n = p.at("n").get<int>();
  McConfig cfg;
  cfg.replicas = p.at("replicas").get<int>();
  cfg.m_inner = p.at("m_inner").get<int>();
  cfg.seed = seed;
  cfg.jobs = jobs;
  cfg.proxy = parse_proxy(p.at("proxy").get<std::string>());
  auto rep = mst::mst_theorem_bound(d, n, cfg, p.at("pilot_replicas").get<int>());
  auto mu = row("mu_hat", rep.mu_hat, 0.0, rep.pilot_replicas);
  mu.point = n;
  out.rows.push_back(mu);
  auto sig = row("sigma_hat", rep.sigma_hat, 0.0, rep.pilot_replicas);
  sig.point = n;
  out.rows.push_back(sig);
  auto ks = row("kolmogorov", rep.kolmogorov, rep.kolmogorov_se,
                rep.pilot_replicas);
  ks.point = n;
  out.rows.push_back(ks);
  append_bound_rows(rep.engine, n, out);
}

void run_mst_localization(const json& p, std::uint64_t seed, int jobs,
                          ExperimentRecord& out) {
  const int d = p.at("d").get<int>();
  const int n = p.at("n").get<int>();
  std::vector<int> ks = p.at("ks").get<std::vector<int>>();
  const int envs = p.at("environments").get<int>();
  const int per_env = p.at("edges_per_environment").get<int>();
  auto stats = mst::localization_experiment(d, n, ks, envs, per_env, seed, jobs);
  for (const auto& s : stats) {
    auto gap = row("localization_gap", s.gap.estimate, s.gap.se, s.samples);
    gap.point = s.k;
    out.rows.push_back(gap);
    auto bg = row("beta_alpha_gap", s.beta_alpha_gap.estimate,
                  s.beta_alpha_gap.se, s.samples);
    bg.point = s.k;
    out.rows.push_back(bg);
    auto ordered = row("beta_ge_alpha", s.beta_ge_alpha_everywhere ? 1.0 : 0.0,
                       0.0, s.samples);
    ordered.point = s.k;
    out.rows.push_back(ordered);
  }
}

void run_exchangeable_pair(const json& p, std::uint64_t seed, int jobs,
                           ExperimentRecord& out) {
  const int n = p.at("n").get<int>();
  const int replicas = p.at("replicas").get<int>();
  const int bins = p.at("bins").get<int>();
  auto diag = exchangeable_pair_diagnostics(make_iid_sum_pair(n), replicas,
                                            bins, seed, jobs);
  out.rows.push_back(row("slope", diag.slope, diag.slope_se, replicas));
  out.rows.push_back(
      row("quadratic_ratio", diag.quadratic_ratio, diag.quadratic_se, replicas));
  out.rows.push_back(row("third_ratio", diag.third_ratio, diag.third_se, replicas));
}

void run_dependency_graph(const json& p, std::uint64_t seed, int jobs,
                          ExperimentRecord& out) {
  const int n = p.at("n").get<int>();
  const int replicas = p.at("replicas").get<int>();
  auto rep = dependency_graph_bound(make_rademacher_chain(n), replicas, seed, jobs);
  out.rows.push_back(row("t_mean", rep.t_mean.estimate, rep.t_mean.se, replicas));
  out.rows.push_back(
      row("t_variance", rep.t_variance, rep.t_variance_se, replicas));
  out.rows.push_back(row("kolmogorov", rep.kolmogorov, 0.0, replicas));
}

void run_size_bias(const json& p, std::uint64_t seed, int jobs,
                   ExperimentRecord& out) {
  const std::string which = p.at("case").get<std::string>();
  const int replicas = p.at("replicas").get<int>();
  SizeBiasPair pair;
  if (which == "bernoulli")
    pair = make_bernoulli_size_bias(p.at("p").get<double>());
  else if (which == "exponential")
    pair = make_exponential_size_bias();
  else if (which == "iid_sum")
    pair = make_bernoulli_sum_size_bias(p.at("n").get<int>(),
                                        p.at("p").get<double>());
  else
    throw ConfigError("key 'case' must be bernoulli, exponential or iid_sum");
  const std::vector<std::pair<std::string, std::function<double(double)>>> gs = {
      {"identity", [](double x) { return x; }},
      {"square", [](double x) { return x * x; }},
      {"exp_neg", [](double x) { return std::exp(-x); }},
  };
  auto check = size_bias_identity_check(pair, gs, replicas, seed, jobs);
  for (const auto& r : check.rows)
    out.rows.push_back(row("residual_" + r.label, r.residual, r.se, replicas));
  out.rows.push_back(row("worst_abs_z", check.worst_abs_z, 0.0, replicas));
}

void run_lindeberg(const json& p, std::uint64_t seed, int jobs,
                   ExperimentRecord& out) {
  const int n = p.at("n").get<int>();
  const int replicas = p.at("replicas").get<int>();
  const std::string which = p.at("h").get<std::string>();
  std::function<double(std::span<const double>)> h;
  if (which == "quadratic") {
    h = [n](std::span<const double> x) {
      double s = 0.0;
      for (double v : x) s += v * v;
      return s / static_cast<double>(n);
    };
  } else if (which == "cubic") {
    const double scale = std::pow(static_cast<double>(n), -1.5);
    h = [scale](std::span<const double> x) {
      double s = 0.0;
      for (double v : x) s += v * v * v;
      return s * scale;
    };
  } else {
    throw ConfigError("key 'h' must be 'quadratic' or 'cubic'");
  }
  const double s3 = std::sqrt(3.0);
  auto res = lindeberg_telescope(
      h, [s3](Rng& rng) { return rng.uniform(-s3, s3); },
      [](Rng& rng) { return rng.normal(); }, n, replicas, seed, jobs);
  out.rows.push_back(row("total", res.total.estimate, res.total.se, replicas));
  out.rows.push_back(
      row("max_relative_residual", res.max_relative_residual, 0.0, replicas));
}

void run_stein_residual(const json& p, std::uint64_t, int,
                        ExperimentRecord& out) {
  const int points = p.at("grid_points").get<int>();
  const double lo = p.at("grid_min").get<double>();
  const double hi = p.at("grid_max").get<double>();
  if (!(hi > lo)) throw ConfigError("key 'grid_max' must exceed grid_min");
  std::vector<double> grid(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i)
    grid[static_cast<std::size_t>(i)] =
        lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
  for (const auto& tj : p.at("thresholds")) {
    for (const auto& wj : p.at("widths")) {
      for (auto dir : {SmoothedIndicator::Direction::Upper,
                       SmoothedIndicator::Direction::Lower}) {
        SmoothedIndicator g{tj.get<double>(), wj.get<double>(), dir};
        auto sol = solve_stein_equation(
            [g](double x) { return g(x); }, [g](double x) { return g.slope(x); },
            {g.kinks()[0], g.kinks()[1]}, grid);
        double max_res = 0.0, max_f = 0.0, max_fp = 0.0;
        for (double x : grid) {
          max_res = std::max(max_res, std::abs(sol.residual(x)));
          max_f = std::max(max_f, std::abs(sol.value(x)));
          max_fp = std::max(max_fp, std::abs(sol.derivative(x)));
        }
        auto r = row("residual_max", max_res, 0.0, points);
        r.point = g.threshold;
        r.components["width"] = g.width;
        r.components["direction"] =
            dir == SmoothedIndicator::Direction::Upper ? "upper" : "lower";
        r.components["f_max"] = max_f;
        r.components["f_prime_max"] = max_fp;
        r.components["f_bound"] = 2.0 / g.width;
        r.components["f_prime_bound"] = std::sqrt(2.0 / 3.141592653589793) / g.width;
        r.components["bounds_hold"] =
            max_f <= 2.0 / g.width &&
            max_fp <= std::sqrt(2.0 / 3.141592653589793) / g.width;
        out.rows.push_back(r);
      }
    }
  }
}

void run_discrepancy(const json& p, std::uint64_t seed, int jobs,
                     ExperimentRecord& out) {
  const int n = p.at("n").get<int>();
  const int samples = p.at("samples").get<int>();
  const double s3 = std::sqrt(3.0);
  const double root_n = std::sqrt(static_cast<double>(n));
  std::vector<double> w(static_cast<std::size_t>(samples));
  parallel_for_index(samples, jobs, [&](std::int64_t i) {
    Rng rng(derive_seed(seed, stream_tag("discrepancy"),
                        static_cast<std::uint64_t>(i)));
    double acc = 0.0;
    for (int j = 0; j < n; ++j) acc += rng.uniform(-s3, s3);
    w[static_cast<std::size_t>(i)] = acc / root_n;
  });
  auto [ks, ks_se] = kolmogorov_fixed_standardization(w, 0.0, 1.0);
  auto ks_row = row("kolmogorov", ks, ks_se, samples);
  ks_row.point = n;
  out.rows.push_back(ks_row);

  SampleSet set;
  set.values = std::move(w);
  set.seed = seed;
  const auto dict = default_stein_dictionary(jobs);
  auto disc = row("stein_discrepancy", stein_discrepancy(set, dict, jobs), 0.0,
                  samples);
  disc.point = n;
  disc.components["dictionary_size"] = dict.size();
  out.rows.push_back(disc);
}

void run_nu_law(const json& p, std::uint64_t seed, int jobs,
                ExperimentRecord& out) {
  const int n = p.at("n").get<int>();
  const int draws = p.at("draws").get<int>();
  if (n > 12) throw ConfigError("key 'n' must be <= 12 (subset enumeration)");
  const std::size_t combos = std::size_t(1) << (n - 1);
  const double dof = static_cast<double>(combos) - 1.0;
  const double critical = chi_square_quantile(0.999, dof);
  std::vector<std::vector<std::int64_t>> counts(
      static_cast<std::size_t>(n), std::vector<std::int64_t>(combos, 0));
  parallel_for_index(n, jobs, [&](std::int64_t i) {
    Rng rng(derive_seed(seed, stream_tag("nu-law"), static_cast<std::uint64_t>(i)));
    std::vector<int> subset, pool;
    auto& c = counts[static_cast<std::size_t>(i)];
    for (int d = 0; d < draws; ++d) {
      sample_nu_subset(n, static_cast<int>(i), rng, subset, pool);
      std::size_t mask = 0;
      for (int j : subset) {
        const int bit = j < static_cast<int>(i) ? j : j - 1;
        mask |= std::size_t(1) << bit;
      }
      ++c[mask];
    }
  });
  for (int i = 0; i < n; ++i) {
    double chi = 0.0;
    for (std::size_t mask = 0; mask < combos; ++mask) {
      const int size = static_cast<int>(std::popcount(mask));
      const double expect = static_cast<double>(draws) * nu_mass(n, size);
      const double obs =
          static_cast<double>(counts[static_cast<std::size_t>(i)][mask]);
      chi += (obs - expect) * (obs - expect) / expect;
    }
    auto r = row("chi_square", chi, 0.0, draws);
    r.point = i;
    r.components["dof"] = dof;
    r.components["critical_999"] = critical;
    r.components["pass"] = chi <= critical;
    out.rows.push_back(r);
  }
}

const std::map<std::string, KindSpec>& kind_registry() {
  static const std::map<std::string, KindSpec> reg = [] {
    std::map<std::string, KindSpec> m;
    m["iid_sum_bound"] = {{req_int("n", 1), opt_int("replicas", 2000, 2),
                           opt_int("m_inner", 0, 0), opt_str("proxy", "var_t")},
                          run_iid_sum_bound};
    m["mst_clt"] = {{opt_int("d", 2, 2),
                     {"radii", ParamSpec::Type::IntArray, true, json(), 0, false},
                     req_int("environments", 2)},
                    run_mst_clt};
    m["mst_bound"] = {{opt_int("d", 2, 2), req_int("n", 1),
                       opt_int("replicas", 2000, 2), opt_int("m_inner", 0, 0),
                       opt_int("pilot_replicas", 2000, 2),
                       opt_str("proxy", "var_t")},
                      run_mst_bound};
    m["mst_localization"] = {
        {opt_int("d", 2, 2), req_int("n", 2),
         {"ks", ParamSpec::Type::IntArray, true, json(), 0, false},
         opt_int("environments", 200, 1), opt_int("edges_per_environment", 4, 1)},
        run_mst_localization};
    m["exchangeable_pair"] = {{req_int("n", 1), opt_int("replicas", 100000, 1000),
                               opt_int("bins", 20, 5)},
                              run_exchangeable_pair};
    m["dependency_graph"] = {{req_int("n", 2), opt_int("replicas", 20000, 2)},
                             run_dependency_graph};
    m["size_bias"] = {{{"case", ParamSpec::Type::Str, true, json(), 0, false},
                       opt_int("replicas", 100000, 2),
                       {"p", ParamSpec::Type::Num, false, json(0.3), 0, false},
                       opt_int("n", 20, 1)},
                      run_size_bias};
    m["lindeberg"] = {{req_int("n", 1), opt_int("replicas", 1000, 2),
                       {"h", ParamSpec::Type::Str, true, json(), 0, false}},
                      run_lindeberg};
    m["stein_residual"] = {
        {opt_int("grid_points", 1001, 2),
         {"grid_min", ParamSpec::Type::Num, false, json(-8.0), 0, false},
         {"grid_max", ParamSpec::Type::Num, false, json(8.0), 0, false},
         {"thresholds", ParamSpec::Type::NumArray, false,
          json::array({-2.0, 0.0, 2.0}), 0, false},
         {"widths", ParamSpec::Type::NumArray, false, json::array({0.1, 0.2}),
          0, false}},
        run_stein_residual};
    m["nu_law"] = {{req_int("n", 2), opt_int("draws", 1000000, 1000)},
                   run_nu_law};
    m["discrepancy"] = {{req_int("n", 1), opt_int("samples", 20000, 100)},
                        run_discrepancy};
    return m;
  }();
  return reg;
}

json row_to_json(const StatisticRow& r) {
  json j;
  j["statistic"] = r.name;
  j["estimate"] = r.estimate;
  j["se"] = r.se;
  j["count"] = r.count;
  if (r.point) j["point"] = *r.point;
  if (!r.components.empty()) j["components"] = r.components;
  return j;
}

StatisticRow row_from_json(const json& j) {
  StatisticRow r;
  r.name = j.at("statistic").get<std::string>();
  r.estimate = j.at("estimate").get<double>();
  r.se = j.at("se").get<double>();
  r.count = j.at("count").get<std::int64_t>();
  if (j.contains("point")) r.point = j.at("point").get<double>();
  if (j.contains("components")) r.components = j.at("components");
  return r;
}

}  // namespace

std::string ExperimentRecord::to_jsonl() const {
  json header;
  header["schema"] = schema;
  header["kind"] = kind;
  header["config"] = config;
  header["seed"] = seed;
  header["library_version"] = library_version;
  header["wall_clock_ms"] = wall_clock_ms;
  header["failed"] = failed;
  header["fault"] = fault;
  std::string out = header.dump();
  out.push_back('\n');
  for (const auto& r : rows) {
    out += row_to_json(r).dump();
    out.push_back('\n');
  }
  return out;
}

ExperimentRecord ExperimentRecord::from_jsonl(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line))
    throw ConfigError("record: empty input");
  json header;
  try {
    header = json::parse(line);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("record: bad header json: ") + e.what());
  }
  ExperimentRecord rec;
  if (!header.contains("schema") || !header.at("schema").is_string())
    throw ConfigError("record: missing schema field");
  rec.schema = header.at("schema").get<std::string>();
  if (rec.schema != kRecordSchema)
    throw ConfigError("record: schema mismatch: found '" + rec.schema +
                      "', expected '" + kRecordSchema + "'");
  rec.kind = header.at("kind").get<std::string>();
  rec.config = header.at("config");
  rec.seed = header.at("seed").get<std::uint64_t>();
  rec.library_version = header.at("library_version").get<std::string>();
  rec.wall_clock_ms = header.at("wall_clock_ms").get<double>();
  rec.failed = header.at("failed").get<bool>();
  rec.fault = header.at("fault").get<std::string>();
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    try {
      rec.rows.push_back(row_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw ConfigError(std::string("record: bad row json: ") + e.what());
    }
  }
  return rec;
}

ExperimentConfig ExperimentConfig::parse(const json& file_json,
                                         std::uint64_t seed, int jobs) {
  if (!file_json.is_object())
    throw ConfigError("config: top level must be an object");
  if (!file_json.contains("kind") || !file_json.at("kind").is_string())
    throw ConfigError("config: missing string key 'kind'");
  ExperimentConfig cfg;
  cfg.kind = file_json.at("kind").get<std::string>();
  const auto& reg = kind_registry();
  auto it = reg.find(cfg.kind);
  if (it == reg.end())
    throw ConfigError("config: unknown experiment kind '" + cfg.kind + "'");
  cfg.params = json::object();
  validate_params(file_json, it->second.params, cfg.params);
  cfg.seed = seed;
  if (jobs < 1) throw ConfigError("key 'jobs' must be >= 1");
  cfg.jobs = jobs;
  return cfg;
}

std::vector<std::string> known_experiment_kinds() {
  std::vector<std::string> out;
  for (const auto& [name, spec] : kind_registry()) out.push_back(name);
  return out;
}

ExperimentRecord run_experiment(const ExperimentConfig& cfg) {
  const auto& reg = kind_registry();
  auto it = reg.find(cfg.kind);
  if (it == reg.end())
    throw ConfigError("config: unknown experiment kind '" + cfg.kind + "'");
  ExperimentRecord rec;
  rec.schema = kRecordSchema;
  rec.kind = cfg.kind;
  rec.config = cfg.params;
  rec.config["kind"] = cfg.kind;
  rec.seed = cfg.seed;
  rec.library_version = kLibraryVersion;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    it->second.run(cfg.params, cfg.seed, cfg.jobs, rec);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    // semantically invalid parameter combination, not a runtime fault
    throw ConfigError(e.what());
  } catch (const std::exception& e) {
    rec.failed = true;
    rec.fault = e.what();
  }
  const auto t1 = std::chrono::steady_clock::now();
  rec.wall_clock_ms =
      std::chrono::duration<double, std::milli>(t1 - t0).count();
  return rec;
}

namespace {

std::string format_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

std::string pad(const std::string& s, std::size_t width) {
  std::string out = s;
  while (out.size() < width) out.push_back(' ');
  return out;
}

void append_slope_fits(const std::vector<const ExperimentRecord*>& group,
                       std::ostringstream& os) {
  // pool (point, estimate) by statistic name across the group
  std::map<std::string, std::vector<std::pair<double, double>>> series;
  for (const auto* rec : group)
    for (const auto& r : rec->rows)
      if (r.point && *r.point > 0.0 && r.estimate > 0.0)
        series[r.name].emplace_back(*r.point, r.estimate);
  for (const auto& [name, pts] : series) {
    std::vector<double> xs, ys;
    double first = pts.front().first;
    bool distinct = false;
    for (const auto& [x, y] : pts) {
      distinct = distinct || x != first;
      xs.push_back(std::log(x));
      ys.push_back(std::log(y));
    }
    if (!distinct || pts.size() < 2) continue;
    os << "  slope[" << name << "] = " << format_num(fit_slope(xs, ys))
       << "  (log-log, " << pts.size() << " points)\n";
  }
}

}  // namespace

std::string render_report(const std::vector<ExperimentRecord>& records,
                          const std::string& format) {
  if (records.empty()) throw ConfigError("report: no records given");
  if (format != "table" && format != "rows")
    throw ConfigError("report: format must be 'table' or 'rows'");

  std::ostringstream os;
  if (format == "rows") {
    os << "kind\trecord\tstatistic\tpoint\testimate\tse\tcount\n";
    char buf[64];
    for (std::size_t i = 0; i < records.size(); ++i) {
      for (const auto& r : records[i].rows) {
        os << records[i].kind << '\t' << i << '\t' << r.name << '\t';
        if (r.point) {
          std::snprintf(buf, sizeof(buf), "%.17g", *r.point);
          os << buf;
        } else {
          os << "-";
        }
        std::snprintf(buf, sizeof(buf), "%.17g", r.estimate);
        os << '\t' << buf;
        std::snprintf(buf, sizeof(buf), "%.17g", r.se);
        os << '\t' << buf << '\t' << r.count << '\n';
      }
    }
    return os.str();
  }

  // group records by kind, preserving first-seen order
  std::vector<std::string> order;
  std::map<std::string, std::vector<const ExperimentRecord*>> groups;
  for (const auto& rec : records) {
    if (!groups.count(rec.kind)) order.push_back(rec.kind);
    groups[rec.kind].push_back(&rec);
  }
  for (const auto& kind : order) {
    const auto& group = groups[kind];
    os << "== " << kind << " (" << group.size() << " record"
       << (group.size() == 1 ? "" : "s") << ")\n";
    for (std::size_t i = 0; i < group.size(); ++i) {
      const auto& rec = *group[i];
      os << "-- record " << i << "  seed=" << rec.seed
         << (rec.failed ? "  FAILED: " + rec.fault : "") << "\n";
      os << "  " << pad("statistic", 24) << pad("point", 10) << pad("estimate", 14)
         << pad("se", 12) << "count\n";
      for (const auto& r : rec.rows) {
        os << "  " << pad(r.name, 24)
           << pad(r.point ? format_num(*r.point) : "-", 10)
           << pad(format_num(r.estimate), 14) << pad(format_num(r.se), 12)
           << r.count << "\n";
      }
    }
    append_slope_fits(group, os);
  }
  return os.str();
}

VerifyResult verify_record(const std::string& jsonl_text) {
  VerifyResult out;
  ExperimentRecord rec = ExperimentRecord::from_jsonl(jsonl_text);
  if (rec.to_jsonl() != jsonl_text) {
    out.ok = false;
    out.issues.push_back("serialization round-trip is not byte-identical");
  }
  for (const auto& r : rec.rows) {
    if (r.name == "theorem_bound") {
      if (!r.components.contains("t_variance") ||
          !r.components.contains("third_moment_sum")) {
        out.ok = false;
        out.issues.push_back("theorem_bound row lacks components");
        continue;
      }
      const double v = r.components.at("t_variance").get<double>();
      const double u = r.components.at("third_moment_sum").get<double>();
      const double recomputed = BoundReport::combine(v, u);
      if (std::abs(recomputed - r.estimate) >
          1e-12 * std::max(1.0, std::abs(r.estimate))) {
        out.ok = false;
        out.issues.push_back(
            "theorem_bound does not recompute from its components");
      }
    }
    if (r.name == "corollary_bound") {
      if (!r.components.contains("cap_sum") ||
          !r.components.contains("third_moment_sum")) {
        out.ok = false;
        out.issues.push_back("corollary_bound row lacks components");
        continue;
      }
      const double c = r.components.at("cap_sum").get<double>();
      const double u = r.components.at("third_moment_sum").get<double>();
      const double recomputed =
          std::sqrt(2.0) * std::pow(c, 0.25) + std::sqrt(u);
      if (std::abs(recomputed - r.estimate) >
          1e-12 * std::max(1.0, std::abs(r.estimate))) {
        out.ok = false;
        out.issues.push_back(
            "corollary_bound does not recompute from its components");
      }
    }
  }
  return out;
}

}  // namespace steinmc
