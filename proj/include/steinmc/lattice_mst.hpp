#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "steinmc/perturb.hpp"
#include "steinmc/rng.hpp"
#include "steinmc/stats.hpp"

namespace steinmc::mst {

// exact tie between edge weights; violates the continuous-law assumption
class WeightTieFault : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Canonical edge id: global coordinates of the lexicographically smaller
// endpoint plus the step axis.
struct GlobalEdge {
  std::vector<int> base;
  int axis = 0;
};

std::uint64_t edge_key(const GlobalEdge& e);
std::string edge_id(const GlobalEdge& e);          // "x0,x1,...;axis"
GlobalEdge parse_edge_id(const std::string& text);

// Nearest-neighbour graph on center + [-radius, radius]^dim. Dimension 1
// is excluded: removing an edge disconnects a path, so the bottleneck
// machinery needs d >= 2.
class BoxGraph {
 public:
  BoxGraph(int dim, int radius, std::vector<int> center = {});

  int dim() const { return dim_; }
  int radius() const { return radius_; }
  const std::vector<int>& center() const { return center_; }
  std::int64_t vertex_count() const { return vertex_count_; }
  int edge_count() const { return static_cast<int>(edges_.size()); }

  struct EdgeRec {
    std::int32_t u = 0, v = 0;
    std::int16_t axis = 0;
  };
  const EdgeRec& edge(int idx) const { return edges_[check_index(idx)]; }
  std::uint64_t key(int idx) const { return keys_[check_index(idx)]; }
  GlobalEdge global_edge(int idx) const;
  int find_edge(const GlobalEdge& e) const;  // -1 when absent

  // both endpoints within the concentric sub-box of radius radius-margin
  bool within_margin(int idx, int margin) const;

 private:
  std::size_t check_index(int idx) const {
    if (idx < 0 || idx >= edge_count())
      throw std::invalid_argument("edge index outside the box edge set");
    return static_cast<std::size_t>(idx);
  }
  std::vector<int> vertex_coords(std::int32_t v) const;  // global

  int dim_, radius_;
  std::vector<int> center_;
  std::int64_t vertex_count_ = 0;
  std::vector<std::int64_t> strides_;
  std::vector<EdgeRec> edges_;
  std::vector<std::uint64_t> keys_;
  std::unordered_map<std::uint64_t, int> key_to_index_;
};

struct WeightLaw {
  std::string name = "uniform01";
  std::function<double(double)> inverse_cdf;  // null -> identity on (0,1)
  double max_weight = 1.0;
};

// Weights keyed by the canonical global edge id hashed with the seed.
// Boxes of different radii therefore agree on shared edges, which is what
// makes the monotonicity and localization statements pathwise.
class WeightEnvironment {
 public:
  explicit WeightEnvironment(std::uint64_t seed, WeightLaw law = {});

  double weight_by_key(std::uint64_t key) const;
  double weight(const GlobalEdge& e) const { return weight_by_key(edge_key(e)); }
  void fill(const BoxGraph& g, std::vector<double>& out) const;

  std::uint64_t seed() const { return seed_; }
  const WeightLaw& law() const { return law_; }

 private:
  std::uint64_t seed_;
  std::uint64_t mixed_;
  WeightLaw law_;
};

struct DisjointSets {
  std::vector<std::int32_t> parent;
  std::vector<std::int8_t> rank_of;

  void reset(std::size_t n);
  std::int32_t find(std::int32_t v);
  bool unite(std::int32_t a, std::int32_t b);
};

// edge indices in strictly increasing weight order; equal weights abort
std::vector<std::int32_t> sort_edges(const BoxGraph& g,
                                     std::span<const double> weights);

struct MstResult {
  std::vector<int> tree_edges;  // ascending edge indices
  double total_weight = 0.0;
  DisjointSets forest;
};

MstResult build_mst(const BoxGraph& g, std::span<const double> weights,
                    const std::vector<std::int32_t>* sorted = nullptr);

inline constexpr double kNoPath = std::numeric_limits<double>::infinity();

struct BottleneckQuery {
  double threshold = kNoPath;  // alpha_{e,n}; +inf iff never connected
  int achieving_edge = -1;     // the edge whose insertion connected e
};

// Smallest alpha such that e's endpoints connect in the box without e
// using only edges of weight <= alpha.
BottleneckQuery alpha_query(const BoxGraph& g, std::span<const double> weights,
                            int edge, const std::vector<std::int32_t>* sorted = nullptr);
double alpha(const BoxGraph& g, std::span<const double> weights, int edge,
             const std::vector<std::int32_t>* sorted = nullptr);

// omega_e < alpha_{e,n}; coincides with build_mst membership edge by edge
bool mst_membership(const BoxGraph& g, std::span<const double> weights,
                    int edge, const std::vector<std::int32_t>* sorted = nullptr);

// (alpha - w_new)^+ - (alpha - w_old)^+; with alpha = +inf the formula's
// limit w_old - w_new applies (disconnection guard only)
double delta_m(double alpha_value, double w_old, double w_new);

// same formula on the localized threshold beta_{e,k}
double gamma_local(double beta_value, double w_old, double w_new);

// beta_{e,k}: bottleneck threshold on the radius-k box translated to e's
// base vertex, same keyed weights
double bottleneck_in_box(const WeightEnvironment& env, const GlobalEdge& e,
                         int k);

// validated form tied to a full box of radius n: requires e in E_{n-k}
double beta(const BoxGraph& box, const WeightEnvironment& env, int edge, int k);

// alpha_{e,n} on origin-centered boxes of the given radii; nonincreasing
// because the keyed weights nest
std::vector<double> alpha_monotonicity_probe(const WeightEnvironment& env,
                                             const GlobalEdge& e,
                                             std::span<const int> radii);

struct CltRadiusStats {
  int radius = 0;
  int environments = 0;
  std::uint64_t seed = 0;
  double mu_hat = 0.0;
  double sigma_hat = 0.0;
  double kolmogorov = 0.0;
  double kolmogorov_se = 0.0;
  double sigma_sq_over_volume = 0.0;  // sigma^2 / (2n+1)^d
  double standardized_mean = 0.0;
  double standardized_variance = 0.0;
};

struct CltExperiment {
  int dim = 2;
  std::vector<CltRadiusStats> rows;
};

CltExperiment clt_experiment(int dim, std::span<const int> radii,
                             int environments, std::uint64_t seed,
                             int jobs = 1, WeightLaw law = {});

struct LocalizationStats {
  int k = 0;
  MeanSE gap;              // E|Delta_e M_n - gamma_{e,k}|
  MeanSE beta_alpha_gap;   // E(beta_{e,k} - alpha_{e,n})
  bool beta_ge_alpha_everywhere = true;
  std::int64_t samples = 0;
};

std::vector<LocalizationStats> localization_experiment(
    int dim, int radius, std::span<const int> ks, int environments,
    int edges_per_environment, std::uint64_t seed, int jobs = 1);

struct MstBoundReport {
  BoundReport engine;
  double kolmogorov = 0.0;
  double kolmogorov_se = 0.0;
  double mu_hat = 0.0;
  double sigma_hat = 0.0;
  int pilot_replicas = 0;
};

// Wires the total tree weight into the generic perturbative bound with
// coordinates = box edges; mu and sigma are plug-ins from a pilot run on
// an independent seed stream.
MstBoundReport mst_theorem_bound(int dim, int radius, const McConfig& cfg,
                                 int pilot_replicas = 2000);

// Instance dump: header (d, n, seed, law) then one line per edge
// (canonical id, weight); precise enough for cross-implementation replay.
void write_instance(std::ostream& os, const BoxGraph& g,
                    const WeightEnvironment& env);

struct InstanceDump {
  int dim = 0;
  int radius = 0;
  std::uint64_t seed = 0;
  std::string law;
  std::vector<std::pair<GlobalEdge, double>> edges;
};

InstanceDump read_instance(std::istream& is);

}  // namespace steinmc::mst
