#include "fbmlab/parallel.hpp"

#include <mutex>

#ifdef FBMLAB_HAVE_OPENMP
#include <omp.h>
#endif

namespace fbmlab {

namespace {
int g_threads = 0;
}

void set_thread_count(int threads) { g_threads = threads > 0 ? threads : 0; }

int thread_count() {
#ifdef FBMLAB_HAVE_OPENMP
  return g_threads > 0 ? g_threads : omp_get_max_threads();
#else
  return 1;
#endif
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
  std::exception_ptr first;
  std::mutex guard;
  const long long count = static_cast<long long>(n);
#ifdef FBMLAB_HAVE_OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(thread_count())
#endif
  for (long long i = 0; i < count; ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
      std::lock_guard lock(guard);
      if (!first) first = std::current_exception();
    }
  }
  if (first) std::rethrow_exception(first);
}

}  // namespace fbmlab
