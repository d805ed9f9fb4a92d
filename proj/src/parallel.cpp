#include "dmk/parallel.hpp"

#ifdef DMK_HAVE_OPENMP
#include <omp.h>
#endif

namespace dmk::parallel {

namespace {
Backend g_backend = Backend::openmp;
int g_threads = 1;
}  // namespace

void set_backend(Backend b) { g_backend = b; }
Backend backend() { return g_backend; }

void set_threads(int n) {
  g_threads = n < 1 ? 1 : n;
#ifdef DMK_HAVE_OPENMP
  omp_set_num_threads(g_threads);
#endif
}

int threads() { return g_threads; }

bool use_openmp() {
#ifdef DMK_HAVE_OPENMP
  return g_backend == Backend::openmp && g_threads > 1;
#else
  return false;
#endif
}

}  // namespace dmk::parallel
