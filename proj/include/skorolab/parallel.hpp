#pragma once

#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace skorolab {

/// Process-wide default worker count (CLI --threads / SKOROLAB_THREADS).
int default_thread_count();
void set_default_thread_count(int n);

/// Static-partition parallel loop over [0, n). Each index is processed exactly
/// once; writers must target index-owned slots so results are independent of
/// the worker count. Exceptions are rethrown on the calling thread.
template <typename Fn>
void parallel_for(std::size_t n, int n_threads, Fn&& fn) {
    if (n == 0) return;
    if (n_threads <= 0) n_threads = default_thread_count();
    const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(n_threads), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    const std::size_t chunk = (n + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t lo = w * chunk;
        const std::size_t hi = std::min(n, lo + chunk);
        pool.emplace_back([&, lo, hi, w] {
            try {
                for (std::size_t i = lo; i < hi; ++i) fn(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace skorolab
