#ifndef ROBUSTIFY_PARALLEL_HPP
#define ROBUSTIFY_PARALLEL_HPP

#include <cstdint>

namespace robustify {

// Execution policy for the batch kernels. Every parallel kernel has a
// matching serial path that executes the identical per-sample work in
// index order; results are bit-identical across policies and worker
// counts because samples never share mutable state.
enum class Exec { kSerial, kParallel };

// Worker count used by Exec::kParallel. 0 means "hardware default".
void set_max_workers(int workers);
int max_workers();

namespace detail {
void parallel_for_impl(std::int64_t count, void (*body)(std::int64_t, void*), void* ctx,
                       Exec exec);
}

template <typename Fn>
void parallel_for(std::int64_t count, Exec exec, Fn&& fn) {
    auto trampoline = [](std::int64_t i, void* ctx) { (*static_cast<Fn*>(ctx))(i); };
    detail::parallel_for_impl(count, trampoline, &fn, exec);
}

} // namespace robustify

#endif
