#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

#include "voxkit/errors.hpp"

namespace voxkit {

/// Run fn(i) for every i in [0, count) on up to `workers` threads.
///
/// Work items are claimed through a shared atomic counter, so the
/// assignment of items to threads is nondeterministic; callers must make
/// each item independent and write results to disjoint, preallocated
/// slots. Under that contract the combined output is identical for any
/// worker count. The first exception thrown by any item is rethrown on
/// the calling thread after all workers have joined.
template <typename Fn>
void parallel_for_index(std::size_t count, unsigned workers, Fn&& fn) {
    if (count == 0) {
        return;
    }
    if (workers == 0) {
        throw InvalidInputError("worker count must be >= 1");
    }
    const std::size_t nthreads = std::min<std::size_t>(workers, count);
    if (nthreads == 1) {
        for (std::size_t i = 0; i < count; ++i) {
            fn(i);
        }
        return;
    }

    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;

    auto drain = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
            if (i >= count) {
                return;
            }
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) {
                    first_error = std::current_exception();
                }
            }
        }
    };

    std::vector<std::thread> pool;
    pool.reserve(nthreads - 1);
    for (std::size_t t = 1; t < nthreads; ++t) {
        pool.emplace_back(drain);
    }
    drain();
    for (auto& th : pool) {
        th.join();
    }
    if (first_error) {
        std::rethrow_exception(first_error);
    }
}

} // namespace voxkit
