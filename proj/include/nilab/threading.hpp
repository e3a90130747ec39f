/// @file threading.hpp
/// @brief Deterministic parallel map over an index range.

#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <utility>
#include <vector>

namespace nilab {

/// Evaluate fn(i) for every i in [0, n) on up to `threads` workers and return
/// the results indexed by i. Each slot is written exactly once, so the output
/// (and any ordered reduction of it) is identical for every thread count,
/// including the serial fallback. Workers pull indices from a shared counter;
/// the first exception thrown by fn is rethrown on the calling thread after
/// all workers have joined.
template <class Fn>
auto parallel_map_indexed(std::size_t n, int threads, Fn&& fn)
    -> std::vector<decltype(fn(std::size_t(0)))> {
    using Result = decltype(fn(std::size_t(0)));
    std::vector<Result> out(n);
    if (n == 0) return out;

    const std::size_t hw = std::thread::hardware_concurrency();
    std::size_t workers = threads > 0 ? static_cast<std::size_t>(threads) : (hw ? hw : 1);
    workers = std::min(workers, n);

    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) out[i] = fn(i);
        return out;
    }

    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;

    auto body = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
            if (i >= n) return;
            try {
                out[i] = fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                next.store(n, std::memory_order_relaxed);
                return;
            }
        }
    };

    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(body);
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
    return out;
}

}  // namespace nilab
