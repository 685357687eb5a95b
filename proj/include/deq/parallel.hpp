#pragma once

#ifdef _OPENMP
#include <omp.h>
#endif

namespace deq {

inline int hardware_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

// Runs f(i) for i in [0, n). threads <= 1 gives the serial reference path;
// otherwise the iterations run under OpenMP. Bodies must be independent per
// index so both paths produce identical results.
template <class F>
void parallel_for(int n, int threads, F&& f) {
#ifdef _OPENMP
  if (threads > 1) {
#pragma omp parallel for schedule(static) num_threads(threads)
    for (int i = 0; i < n; ++i) {
      f(i);
    }
    return;
  }
#endif
  (void)threads;
  for (int i = 0; i < n; ++i) {
    f(i);
  }
}

}  // namespace deq
