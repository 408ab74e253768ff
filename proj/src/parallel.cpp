#include "robustify/parallel.hpp"

#include <atomic>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace robustify {

namespace {
std::atomic<int> g_max_workers{0};
}

void set_max_workers(int workers) { g_max_workers.store(workers < 0 ? 0 : workers); }

int max_workers() {
    int w = g_max_workers.load();
#ifdef _OPENMP
    if (w == 0) w = omp_get_max_threads();
#else
    if (w == 0) w = 1;
#endif
    return w;
}

namespace detail {

void parallel_for_impl(std::int64_t count, void (*body)(std::int64_t, void*), void* ctx,
                       Exec exec) {
#ifdef _OPENMP
    const int workers = max_workers();
    if (exec == Exec::kParallel && workers > 1 && count > 1) {
#pragma omp parallel for schedule(static) num_threads(workers)
        for (std::int64_t i = 0; i < count; ++i) body(i, ctx);
        return;
    }
#else
    (void)exec;
#endif
    for (std::int64_t i = 0; i < count; ++i) body(i, ctx);
}

} // namespace detail
} // namespace robustify
