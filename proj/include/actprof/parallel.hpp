#pragma once

// Ordered fan-out over an index range. Each item is computed independently
// and written to its own output slot, so results are identical for any
// worker count; only wall time changes.

#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace actprof::util {

inline int resolve_threads(int requested) {
    if (requested > 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

/// The first exception thrown by any worker is rethrown on the caller after
/// all workers have joined.
template <typename Fn>
void parallel_for(std::size_t count, int threads, Fn&& fn) {
    const int n_workers = resolve_threads(threads);
    if (n_workers <= 1 || count < 2) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(n_workers));
    std::exception_ptr first_error;
    std::mutex error_mutex;
    const std::size_t chunk = (count + n_workers - 1) / n_workers;
    for (int w = 0; w < n_workers; ++w) {
        const std::size_t begin = static_cast<std::size_t>(w) * chunk;
        const std::size_t end = std::min(count, begin + chunk);
        if (begin >= end) break;
        pool.emplace_back([begin, end, &fn, &first_error, &error_mutex] {
            try {
                for (std::size_t i = begin; i < end; ++i) fn(i);
            } catch (...) {
                const std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

} // namespace actprof::util
