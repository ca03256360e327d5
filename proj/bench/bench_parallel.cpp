// Compares the serial reference path (jobs = 1) against the OpenMP path on
// the replica-level kernels, and checks that both produce identical
// results (slot-per-replica writes plus ordered reduction make the
// parallel path bit-equal to the serial one).

#include <chrono>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "steinmc/couplings.hpp"
#include "steinmc/lattice_mst.hpp"
#include "steinmc/parallel.hpp"
#include "steinmc/perturb.hpp"
#include "steinmc/sample_stats.hpp"

using namespace steinmc;

namespace {

double time_ms(const std::function<void()>& fn) {
  const auto t0 = std::chrono::steady_clock::now();
  fn();
  const auto t1 = std::chrono::steady_clock::now();
  return std::chrono::duration<double, std::milli>(t1 - t0).count();
}

struct Row {
  std::string name;
  double serial_ms = 0.0;
  double parallel_ms = 0.0;
  bool equal = false;
};

}  // namespace

int main() {
  const int jobs = hardware_jobs();
  std::printf("hardware threads: %d\n\n", jobs);
  std::vector<Row> rows;

  {
    Row r;
    r.name = "theorem_bound (sum, n=256, 600 replicas)";
    auto env = make_uniform_unit_environment(256);
    auto f = make_normalized_sum(256);
    McConfig serial_cfg;
    serial_cfg.replicas = 600;
    serial_cfg.seed = 1;
    serial_cfg.jobs = 1;
    McConfig parallel_cfg = serial_cfg;
    parallel_cfg.jobs = jobs;
    BoundReport a, b;
    r.serial_ms = time_ms([&] { a = theorem_bound(f, env, serial_cfg); });
    r.parallel_ms = time_ms([&] { b = theorem_bound(f, env, parallel_cfg); });
    r.equal = a.bound == b.bound && a.t_mean.estimate == b.t_mean.estimate;
    rows.push_back(r);
  }

  {
    Row r;
    r.name = "mst clt (d=2, radius 16, 500 environments)";
    const std::vector<int> radii{16};
    mst::CltExperiment a, b;
    r.serial_ms = time_ms([&] { a = mst::clt_experiment(2, radii, 500, 2, 1); });
    r.parallel_ms =
        time_ms([&] { b = mst::clt_experiment(2, radii, 500, 2, jobs); });
    r.equal = a.rows[0].kolmogorov == b.rows[0].kolmogorov &&
              a.rows[0].mu_hat == b.rows[0].mu_hat;
    rows.push_back(r);
  }

  {
    Row r;
    r.name = "pair diagnostics (n=50, 2e5 replicas)";
    auto pair = make_iid_sum_pair(50);
    PairDiagnostics a, b;
    r.serial_ms =
        time_ms([&] { a = exchangeable_pair_diagnostics(pair, 200000, 20, 3, 1); });
    r.parallel_ms = time_ms(
        [&] { b = exchangeable_pair_diagnostics(pair, 200000, 20, 3, jobs); });
    r.equal = a.slope == b.slope && a.third_ratio == b.third_ratio;
    rows.push_back(r);
  }

  {
    Row r;
    r.name = "stein dictionary tabulation (41 solutions)";
    std::vector<DictionaryEntry> a, b;
    r.serial_ms = time_ms([&] { a = default_stein_dictionary(1); });
    r.parallel_ms = time_ms([&] { b = default_stein_dictionary(jobs); });
    r.equal = a.size() == b.size() && a[7].f(0.3) == b[7].f(0.3) &&
              a[20].f_prime(-1.1) == b[20].f_prime(-1.1);
    rows.push_back(r);
  }

  std::printf("%-46s %10s %10s %8s %6s\n", "kernel", "serial", "openmp",
              "speedup", "equal");
  for (const auto& r : rows)
    std::printf("%-46s %8.1fms %8.1fms %7.2fx %6s\n", r.name.c_str(),
                r.serial_ms, r.parallel_ms, r.serial_ms / r.parallel_ms,
                r.equal ? "yes" : "NO");
  return 0;
}
