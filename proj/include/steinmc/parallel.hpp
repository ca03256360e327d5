#pragma once

#include <cstdint>

#if defined(_OPENMP)
#include <omp.h>
#endif

namespace steinmc {

inline int hardware_jobs() {
#if defined(_OPENMP)
  return omp_get_max_threads();
#else
  return 1;
#endif
}

// jobs <= 0 means "use all hardware threads"
inline int effective_jobs(int requested) {
  if (requested <= 0) return hardware_jobs();
  return requested;
}

// Replica-level kernel driver. body(i) must write only to slots owned by
// iteration i; aggregation happens afterwards in index order, so results
// are bit-identical for any jobs value. jobs == 1 is the serial reference
// path used by the equivalence tests and the benchmark baseline.
template <typename Body>
void parallel_for_index(std::int64_t count, int jobs, Body&& body) {
#if defined(_OPENMP)
  if (effective_jobs(jobs) > 1) {
#pragma omp parallel for schedule(dynamic, 1) num_threads(effective_jobs(jobs))
    for (std::int64_t i = 0; i < count; ++i) {
      body(i);
    }
    return;
  }
#endif
  for (std::int64_t i = 0; i < count; ++i) {
    body(i);
  }
}

}  // namespace steinmc
