#include "smr/parallel.hpp"

#include <omp.h>

#include <cstdlib>
#include <string>

#include "smr/image.hpp"

namespace smr {

int configure_threads_from_env() {
  if (const char* env = std::getenv("SMR_THREADS"); env != nullptr && *env != '\0') {
    try {
      const int n = std::stoi(env);
      if (n >= 1) omp_set_num_threads(n);
    } catch (const std::exception&) {
      // ignore malformed values and keep the runtime default
    }
  }
  return omp_get_max_threads();
}

void set_thread_count(int threads) { omp_set_num_threads(threads < 1 ? 1 : threads); }

int thread_count() { return omp_get_max_threads(); }

void clamp_nonnegative(MaterialMaps& maps) {
  for (auto& plane : maps.planes) {
    for (double& v : plane.data) {
      if (!(v > 0.0)) v = 0.0;
    }
  }
}

}  // namespace smr
