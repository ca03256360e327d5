#include "steinmc/lattice_mst.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <memory>
#include <numeric>
#include <ostream>
#include <sstream>

#include "steinmc/parallel.hpp"
#include "steinmc/sample_stats.hpp"

namespace steinmc::mst {

namespace {
const std::uint64_t kTagClt = stream_tag("mst-clt");
const std::uint64_t kTagCltEnv = stream_tag("mst-clt-env");
const std::uint64_t kTagLocalization = stream_tag("mst-localization");
const std::uint64_t kTagLocalizationRng = stream_tag("mst-localization-resample");
const std::uint64_t kTagPilot = stream_tag("mst-bound-pilot");
const std::uint64_t kTagKs = stream_tag("mst-bound-ks");
}  // namespace

std::uint64_t edge_key(const GlobalEdge& e) {
  std::uint64_t h = mix64(kGolden ^ static_cast<std::uint64_t>(e.base.size()));
  for (int c : e.base)
    h = mix64(h ^ (static_cast<std::uint64_t>(static_cast<std::int64_t>(c)) + kGolden));
  h = mix64(h ^ (static_cast<std::uint64_t>(e.axis) + kGolden));
  return h;
}

std::string edge_id(const GlobalEdge& e) {
  std::ostringstream os;
  for (std::size_t j = 0; j < e.base.size(); ++j) {
    if (j) os << ',';
    os << e.base[j];
  }
  os << ';' << e.axis;
  return os.str();
}

GlobalEdge parse_edge_id(const std::string& text) {
  GlobalEdge e;
  const auto semi = text.find(';');
  if (semi == std::string::npos)
    throw std::invalid_argument("edge id: missing ';' separator");
  std::stringstream coords(text.substr(0, semi));
  std::string tok;
  while (std::getline(coords, tok, ',')) e.base.push_back(std::stoi(tok));
  if (e.base.empty()) throw std::invalid_argument("edge id: no coordinates");
  e.axis = std::stoi(text.substr(semi + 1));
  if (e.axis < 0 || e.axis >= static_cast<int>(e.base.size()))
    throw std::invalid_argument("edge id: axis out of range");
  return e;
}

BoxGraph::BoxGraph(int dim, int radius, std::vector<int> center)
    : dim_(dim), radius_(radius), center_(std::move(center)) {
  if (dim_ < 2)
    throw std::invalid_argument(
        "BoxGraph: dimension must be >= 2 (an edge removal disconnects d = 1)");
  if (radius_ < 1) throw std::invalid_argument("BoxGraph: radius must be >= 1");
  if (center_.empty()) center_.assign(static_cast<std::size_t>(dim_), 0);
  if (center_.size() != static_cast<std::size_t>(dim_))
    throw std::invalid_argument("BoxGraph: center dimension mismatch");

  const std::int64_t side = 2 * static_cast<std::int64_t>(radius_) + 1;
  strides_.resize(static_cast<std::size_t>(dim_));
  std::int64_t v = 1;
  for (int j = 0; j < dim_; ++j) {
    strides_[static_cast<std::size_t>(j)] = v;
    if (v > (std::int64_t(1) << 31) / side)
      throw std::invalid_argument("BoxGraph: box too large");
    v *= side;
  }
  vertex_count_ = v;

  edges_.reserve(static_cast<std::size_t>(dim_) * static_cast<std::size_t>(v));
  std::vector<int> local(static_cast<std::size_t>(dim_), 0);
  for (std::int64_t idx = 0; idx < v; ++idx) {
    for (int axis = 0; axis < dim_; ++axis) {
      if (local[static_cast<std::size_t>(axis)] < 2 * radius_) {
        EdgeRec rec;
        rec.u = static_cast<std::int32_t>(idx);
        rec.v = static_cast<std::int32_t>(idx + strides_[static_cast<std::size_t>(axis)]);
        rec.axis = static_cast<std::int16_t>(axis);
        edges_.push_back(rec);
      }
    }
    // odometer increment
    for (int j = 0; j < dim_; ++j) {
      if (++local[static_cast<std::size_t>(j)] <= 2 * radius_) break;
      local[static_cast<std::size_t>(j)] = 0;
    }
  }

  keys_.resize(edges_.size());
  key_to_index_.reserve(edges_.size() * 2);
  for (std::size_t i = 0; i < edges_.size(); ++i) {
    keys_[i] = mst::edge_key(global_edge(static_cast<int>(i)));
    key_to_index_.emplace(keys_[i], static_cast<int>(i));
  }
}

std::vector<int> BoxGraph::vertex_coords(std::int32_t v) const {
  std::vector<int> out(static_cast<std::size_t>(dim_));
  const int side = 2 * radius_ + 1;
  std::int64_t rest = v;
  for (int j = 0; j < dim_; ++j) {
    out[static_cast<std::size_t>(j)] =
        static_cast<int>(rest % side) - radius_ + center_[static_cast<std::size_t>(j)];
    rest /= side;
  }
  return out;
}

GlobalEdge BoxGraph::global_edge(int idx) const {
  const EdgeRec& rec = edges_[check_index(idx)];
  GlobalEdge e;
  e.base = vertex_coords(rec.u);
  e.axis = rec.axis;
  return e;
}

int BoxGraph::find_edge(const GlobalEdge& e) const {
  auto it = key_to_index_.find(mst::edge_key(e));
  if (it == key_to_index_.end()) return -1;
  // keys are 64-bit hashes; confirm the match exactly
  GlobalEdge found = global_edge(it->second);
  if (found.axis != e.axis || found.base != e.base) return -1;
  return it->second;
}

bool BoxGraph::within_margin(int idx, int margin) const {
  if (margin < 0 || margin >= radius_) return false;
  const EdgeRec& rec = edges_[check_index(idx)];
  const int limit = radius_ - margin;
  for (std::int32_t vert : {rec.u, rec.v}) {
    auto coords = vertex_coords(vert);
    for (int j = 0; j < dim_; ++j)
      if (std::abs(coords[static_cast<std::size_t>(j)] -
                   center_[static_cast<std::size_t>(j)]) > limit)
        return false;
  }
  return true;
}

WeightEnvironment::WeightEnvironment(std::uint64_t seed, WeightLaw law)
    : seed_(seed), mixed_(mix64(seed + kGolden)), law_(std::move(law)) {
  if (!(law_.max_weight > 0.0))
    throw std::invalid_argument("WeightEnvironment: max_weight must be > 0");
}

double WeightEnvironment::weight_by_key(std::uint64_t key) const {
  const std::uint64_t h = mix64(mixed_ ^ key);
  const double u = (static_cast<double>(h >> 11) + 0.5) * 0x1.0p-53;
  const double w = law_.inverse_cdf ? law_.inverse_cdf(u) : u;
  if (!(w > 0.0 && w <= law_.max_weight))
    throw std::invalid_argument("WeightEnvironment: law produced weight outside (0, max]");
  return w;
}

void WeightEnvironment::fill(const BoxGraph& g, std::vector<double>& out) const {
  out.resize(static_cast<std::size_t>(g.edge_count()));
  for (int i = 0; i < g.edge_count(); ++i)
    out[static_cast<std::size_t>(i)] = weight_by_key(g.key(i));
}

void DisjointSets::reset(std::size_t n) {
  parent.resize(n);
  std::iota(parent.begin(), parent.end(), 0);
  rank_of.assign(n, 0);
}

std::int32_t DisjointSets::find(std::int32_t v) {
  while (parent[static_cast<std::size_t>(v)] != v) {
    parent[static_cast<std::size_t>(v)] =
        parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(v)])];
    v = parent[static_cast<std::size_t>(v)];
  }
  return v;
}

bool DisjointSets::unite(std::int32_t a, std::int32_t b) {
  a = find(a);
  b = find(b);
  if (a == b) return false;
  if (rank_of[static_cast<std::size_t>(a)] < rank_of[static_cast<std::size_t>(b)])
    std::swap(a, b);
  parent[static_cast<std::size_t>(b)] = a;
  if (rank_of[static_cast<std::size_t>(a)] == rank_of[static_cast<std::size_t>(b)])
    ++rank_of[static_cast<std::size_t>(a)];
  return true;
}

std::vector<std::int32_t> sort_edges(const BoxGraph& g,
                                     std::span<const double> weights) {
  if (weights.size() != static_cast<std::size_t>(g.edge_count()))
    throw std::invalid_argument("sort_edges: weight vector size mismatch");
  for (double w : weights)
    if (!std::isfinite(w) || w <= 0.0)
      throw std::invalid_argument("sort_edges: weights must be finite and > 0");
  std::vector<std::int32_t> order(weights.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::int32_t a, std::int32_t b) {
    return weights[static_cast<std::size_t>(a)] < weights[static_cast<std::size_t>(b)];
  });
  for (std::size_t i = 1; i < order.size(); ++i)
    if (weights[static_cast<std::size_t>(order[i - 1])] ==
        weights[static_cast<std::size_t>(order[i])])
      throw WeightTieFault("exact weight tie violates the continuous-law assumption");
  return order;
}

MstResult build_mst(const BoxGraph& g, std::span<const double> weights,
                    const std::vector<std::int32_t>* sorted) {
  std::vector<std::int32_t> local;
  if (!sorted) {
    local = sort_edges(g, weights);
    sorted = &local;
  }
  MstResult out;
  out.forest.reset(static_cast<std::size_t>(g.vertex_count()));
  const std::size_t target = static_cast<std::size_t>(g.vertex_count()) - 1;
  out.tree_edges.reserve(target);
  for (std::int32_t idx : *sorted) {
    const auto& rec = g.edge(idx);
    if (out.forest.unite(rec.u, rec.v)) {
      out.tree_edges.push_back(idx);
      out.total_weight += weights[static_cast<std::size_t>(idx)];
      if (out.tree_edges.size() == target) break;
    }
  }
  if (out.tree_edges.size() != target)
    throw std::runtime_error("build_mst: box graph not connected");
  std::sort(out.tree_edges.begin(), out.tree_edges.end());
  return out;
}

BottleneckQuery alpha_query(const BoxGraph& g, std::span<const double> weights,
                            int edge, const std::vector<std::int32_t>* sorted) {
  const auto& target = g.edge(edge);
  std::vector<std::int32_t> local;
  if (!sorted) {
    local = sort_edges(g, weights);
    sorted = &local;
  }
  DisjointSets dsu;
  dsu.reset(static_cast<std::size_t>(g.vertex_count()));
  for (std::int32_t idx : *sorted) {
    if (idx == edge) continue;
    const auto& rec = g.edge(idx);
    dsu.unite(rec.u, rec.v);
    if (dsu.find(target.u) == dsu.find(target.v))
      return {weights[static_cast<std::size_t>(idx)], idx};
  }
  return {kNoPath, -1};
}

double alpha(const BoxGraph& g, std::span<const double> weights, int edge,
             const std::vector<std::int32_t>* sorted) {
  return alpha_query(g, weights, edge, sorted).threshold;
}

bool mst_membership(const BoxGraph& g, std::span<const double> weights,
                    int edge, const std::vector<std::int32_t>* sorted) {
  return weights[static_cast<std::size_t>(edge)] <
         alpha(g, weights, edge, sorted);
}

double delta_m(double alpha_value, double w_old, double w_new) {
  if (std::isinf(alpha_value)) return w_old - w_new;  // formula limit
  const auto pos = [](double x) { return x > 0.0 ? x : 0.0; };
  return pos(alpha_value - w_new) - pos(alpha_value - w_old);
}

double gamma_local(double beta_value, double w_old, double w_new) {
  return delta_m(beta_value, w_old, w_new);
}

double bottleneck_in_box(const WeightEnvironment& env, const GlobalEdge& e,
                         int k) {
  if (k < 1) throw std::invalid_argument("bottleneck_in_box: k must be >= 1");
  BoxGraph sub(static_cast<int>(e.base.size()), k, e.base);
  const int idx = sub.find_edge(e);
  if (idx < 0)
    throw std::invalid_argument("bottleneck_in_box: edge not in its own box");
  std::vector<double> weights;
  env.fill(sub, weights);
  return alpha(sub, weights, idx);
}

double beta(const BoxGraph& box, const WeightEnvironment& env, int edge, int k) {
  if (!box.within_margin(edge, k))
    throw std::invalid_argument(
        "beta: containment violated (edge must lie in E_{n-k})");
  return bottleneck_in_box(env, box.global_edge(edge), k);
}

std::vector<double> alpha_monotonicity_probe(const WeightEnvironment& env,
                                             const GlobalEdge& e,
                                             std::span<const int> radii) {
  if (radii.empty())
    throw std::invalid_argument("alpha_monotonicity_probe: no radii");
  for (std::size_t i = 1; i < radii.size(); ++i)
    if (radii[i] <= radii[i - 1])
      throw std::invalid_argument("alpha_monotonicity_probe: radii must increase");
  std::vector<double> out;
  out.reserve(radii.size());
  std::vector<double> weights;
  for (int r : radii) {
    BoxGraph g(static_cast<int>(e.base.size()), r);
    const int idx = g.find_edge(e);
    if (idx < 0)
      throw std::invalid_argument(
          "alpha_monotonicity_probe: edge outside the smallest box");
    env.fill(g, weights);
    out.push_back(alpha(g, weights, idx));
  }
  return out;
}

CltExperiment clt_experiment(int dim, std::span<const int> radii,
                             int environments, std::uint64_t seed, int jobs,
                             WeightLaw law) {
  if (environments < 2)
    throw std::invalid_argument("clt_experiment: need >= 2 environments");
  if (radii.empty()) throw std::invalid_argument("clt_experiment: no radii");
  CltExperiment out;
  out.dim = dim;
  // Environment seeds are shared across radii: the keyed weights then
  // nest, and each radius sees the same environments restricted to its
  // box. Distance comparisons across radii run on common random numbers.
  const std::uint64_t stream_seed = derive_seed(seed, kTagClt, 0);
  for (int radius : radii) {
    const BoxGraph g(dim, radius);
    std::vector<double> totals(static_cast<std::size_t>(environments));
    parallel_for_index(environments, jobs, [&](std::int64_t i) {
      WeightEnvironment env(
          derive_seed(stream_seed, kTagCltEnv, static_cast<std::uint64_t>(i)),
          law);
      std::vector<double> weights;
      env.fill(g, weights);
      totals[static_cast<std::size_t>(i)] = build_mst(g, weights).total_weight;
    });
    auto ks = standardized_kolmogorov(totals);
    CltRadiusStats row;
    row.radius = radius;
    row.environments = environments;
    row.seed = stream_seed;
    row.mu_hat = ks.mu;
    row.sigma_hat = ks.sigma;
    row.kolmogorov = ks.kolmogorov;
    row.kolmogorov_se = ks.kolmogorov_se;
    const double volume =
        std::pow(2.0 * static_cast<double>(radius) + 1.0, dim);
    row.sigma_sq_over_volume = ks.sigma * ks.sigma / volume;
    row.standardized_mean = ks.standardized_mean;
    row.standardized_variance = ks.standardized_variance;
    out.rows.push_back(row);
  }
  return out;
}

std::vector<LocalizationStats> localization_experiment(
    int dim, int radius, std::span<const int> ks, int environments,
    int edges_per_environment, std::uint64_t seed, int jobs) {
  if (ks.empty()) throw std::invalid_argument("localization: no k values");
  for (std::size_t i = 0; i < ks.size(); ++i) {
    if (ks[i] < 1 || ks[i] >= radius)
      throw std::invalid_argument("localization: need 1 <= k < radius");
    if (i > 0 && ks[i] <= ks[i - 1])
      throw std::invalid_argument("localization: k values must increase");
  }
  if (environments < 1 || edges_per_environment < 1)
    throw std::invalid_argument("localization: counts must be >= 1");

  const BoxGraph g(dim, radius);
  const int margin = ks.back();
  std::vector<int> eligible;
  for (int e = 0; e < g.edge_count(); ++e)
    if (g.within_margin(e, margin)) eligible.push_back(e);
  if (eligible.empty())
    throw std::invalid_argument("localization: no edges satisfy the margin");

  const std::size_t per_env = static_cast<std::size_t>(edges_per_environment);
  const std::size_t kcount = ks.size();
  // slot layout: [env][sample][k]
  std::vector<double> gaps(static_cast<std::size_t>(environments) * per_env * kcount);
  std::vector<double> beta_gaps(gaps.size());
  std::vector<std::uint8_t> ordered(gaps.size(), 1);

  parallel_for_index(environments, jobs, [&](std::int64_t env_idx) {
    WeightEnvironment env(
        derive_seed(seed, kTagLocalization, static_cast<std::uint64_t>(env_idx)));
    Rng rng(derive_seed(seed, kTagLocalizationRng,
                        static_cast<std::uint64_t>(env_idx)));
    std::vector<double> weights;
    env.fill(g, weights);
    const auto sorted = sort_edges(g, weights);
    for (std::size_t s = 0; s < per_env; ++s) {
      const int e = eligible[static_cast<std::size_t>(
          rng.uniform_index(static_cast<int>(eligible.size())))];
      const double w_old = weights[static_cast<std::size_t>(e)];
      const double u = rng.uniform01();
      const double w_new =
          env.law().inverse_cdf ? env.law().inverse_cdf(u) : u;
      const double a = alpha(g, weights, e, &sorted);
      const double d = delta_m(a, w_old, w_new);
      const GlobalEdge ge = g.global_edge(e);
      for (std::size_t kk = 0; kk < kcount; ++kk) {
        const double b = bottleneck_in_box(env, ge, ks[kk]);
        const double gamma = gamma_local(b, w_old, w_new);
        const std::size_t slot =
            (static_cast<std::size_t>(env_idx) * per_env + s) * kcount + kk;
        gaps[slot] = std::abs(d - gamma);
        beta_gaps[slot] = b - a;
        ordered[slot] = b >= a ? 1 : 0;
      }
    }
  });

  std::vector<LocalizationStats> out(kcount);
  std::vector<double> gap_col, beta_col;
  for (std::size_t kk = 0; kk < kcount; ++kk) {
    gap_col.clear();
    beta_col.clear();
    bool all_ordered = true;
    for (std::size_t i = kk; i < gaps.size(); i += kcount) {
      gap_col.push_back(gaps[i]);
      beta_col.push_back(beta_gaps[i]);
      all_ordered = all_ordered && ordered[i];
    }
    out[kk].k = ks[kk];
    out[kk].gap = mean_se(gap_col);
    out[kk].beta_alpha_gap = mean_se(beta_col);
    out[kk].beta_ge_alpha_everywhere = all_ordered;
    out[kk].samples = static_cast<std::int64_t>(gap_col.size());
  }
  return out;
}

MstBoundReport mst_theorem_bound(int dim, int radius, const McConfig& cfg,
                                 int pilot_replicas) {
  if (dim == 2 && radius > 4)
    throw std::invalid_argument(
        "mst_theorem_bound: radius <= 4 at d = 2 (per-draw cost grows as the edge count)");
  const auto graph = std::make_shared<const BoxGraph>(dim, radius);
  if (graph->edge_count() > 300)
    throw std::invalid_argument("mst_theorem_bound: box too large for the engine");
  if (pilot_replicas < 2)
    throw std::invalid_argument("mst_theorem_bound: pilot_replicas must be >= 2");
  const int m = graph->edge_count();

  auto evaluate = [graph](std::span<const double> w) {
    return build_mst(*graph, w).total_weight;
  };

  // pilot run on an independent stream gives the plug-in standardization
  std::vector<double> pilot(static_cast<std::size_t>(pilot_replicas));
  parallel_for_index(pilot_replicas, cfg.jobs, [&](std::int64_t r) {
    Rng rng(derive_seed(cfg.seed, kTagPilot, static_cast<std::uint64_t>(r)));
    std::vector<double> w(static_cast<std::size_t>(m));
    for (auto& v : w) v = rng.uniform01();
    pilot[static_cast<std::size_t>(r)] = evaluate(w);
  });
  MstBoundReport out;
  out.pilot_replicas = pilot_replicas;
  out.mu_hat = sample_mean(pilot);
  out.sigma_hat = std::sqrt(sample_variance(pilot));
  if (!(out.sigma_hat > 0.0))
    throw std::runtime_error("mst_theorem_bound: degenerate pilot variance");

  // fresh sample for the empirical distance, standardized by the pilot
  std::vector<double> fresh(static_cast<std::size_t>(pilot_replicas));
  parallel_for_index(pilot_replicas, cfg.jobs, [&](std::int64_t r) {
    Rng rng(derive_seed(cfg.seed, kTagKs, static_cast<std::uint64_t>(r)));
    std::vector<double> w(static_cast<std::size_t>(m));
    for (auto& v : w) v = rng.uniform01();
    fresh[static_cast<std::size_t>(r)] = evaluate(w);
  });
  auto [ks, ks_se] =
      kolmogorov_fixed_standardization(fresh, out.mu_hat, out.sigma_hat);
  out.kolmogorov = ks;
  out.kolmogorov_se = ks_se;

  Functional f;
  f.n = m;
  f.evaluate = evaluate;
  f.mu = out.mu_hat;
  f.sigma = out.sigma_hat;

  IndependentEnvironment env;
  env.n = m;
  env.domain = "uniform01 edge weights";
  env.sample_coordinate = [](int, Rng& rng) { return rng.uniform01(); };

  out.engine = theorem_bound(f, env, cfg);
  return out;
}

void write_instance(std::ostream& os, const BoxGraph& g,
                    const WeightEnvironment& env) {
  os << "steinmc.instance.v1 d=" << g.dim() << " n=" << g.radius()
     << " seed=" << env.seed() << " law=" << env.law().name << "\n";
  char buf[64];
  for (int e = 0; e < g.edge_count(); ++e) {
    const GlobalEdge ge = g.global_edge(e);
    std::snprintf(buf, sizeof(buf), "%.17g", env.weight_by_key(g.key(e)));
    os << "e " << edge_id(ge) << ' ' << buf << "\n";
  }
}

InstanceDump read_instance(std::istream& is) {
  InstanceDump out;
  std::string line;
  if (!std::getline(is, line))
    throw std::invalid_argument("instance: empty input");
  std::istringstream header(line);
  std::string magic;
  header >> magic;
  if (magic != "steinmc.instance.v1")
    throw std::invalid_argument("instance: unknown format marker");
  std::string field;
  while (header >> field) {
    const auto eq = field.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("instance: malformed header field");
    const std::string key = field.substr(0, eq), value = field.substr(eq + 1);
    if (key == "d")
      out.dim = std::stoi(value);
    else if (key == "n")
      out.radius = std::stoi(value);
    else if (key == "seed")
      out.seed = std::stoull(value);
    else if (key == "law")
      out.law = value;
    else
      throw std::invalid_argument("instance: unknown header key " + key);
  }
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string tag, id;
    double w = 0.0;
    row >> tag >> id >> w;
    if (tag != "e" || !row)
      throw std::invalid_argument("instance: malformed edge record");
    out.edges.emplace_back(parse_edge_id(id), w);
  }
  return out;
}

}  // namespace steinmc::mst
