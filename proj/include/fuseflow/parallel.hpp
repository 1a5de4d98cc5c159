#pragma once

// Thin OpenMP wrapper. Every kernel in the library is written so that its
// output is independent of the number of workers; this header only controls
// how many are used.

#ifdef _OPENMP
#include <omp.h>
#endif

namespace fuseflow {

inline int max_workers() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

inline int worker_index() {
#ifdef _OPENMP
  return omp_get_thread_num();
#else
  return 0;
#endif
}

// Pins the OpenMP worker count for the lifetime of the object.
class ScopedWorkers {
 public:
  explicit ScopedWorkers(int workers) : previous_(max_workers()) {
#ifdef _OPENMP
    if (workers > 0) omp_set_num_threads(workers);
#else
    (void)workers;
#endif
  }
  ~ScopedWorkers() {
#ifdef _OPENMP
    omp_set_num_threads(previous_);
#endif
  }
  ScopedWorkers(const ScopedWorkers&) = delete;
  ScopedWorkers& operator=(const ScopedWorkers&) = delete;

 private:
  int previous_;
};

}  // namespace fuseflow
