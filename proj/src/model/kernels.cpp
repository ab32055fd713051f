#include "unifront/model/kernels.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace unifront::kernels {

int set_num_threads(int n) {
#ifdef _OPENMP
  const int prev = omp_get_max_threads();
  if (n > 0) omp_set_num_threads(n);
  return prev;
#else
  (void)n;
  return 1;
#endif
}

int num_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace unifront::kernels
