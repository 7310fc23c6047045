#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace cirl {

/// Worker count used by parallel loops; 0 selects hardware concurrency.
inline std::size_t& worker_override() {
    static std::size_t n = 0;
    return n;
}

inline std::size_t worker_count() {
    if (worker_override() != 0) return worker_override();
    return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

/**
 * Runs body(chunk) for chunk = 0 .. n_chunks-1 across worker threads.
 * Work assignment is dynamic, so bodies must write only chunk-indexed
 * output; results are then independent of the number of workers.
 */
template <class Body>
void parallel_chunks(std::size_t n_chunks, Body&& body) {
    const std::size_t workers = std::min(worker_count(), n_chunks);
    if (workers <= 1) {
        for (std::size_t c = 0; c < n_chunks; ++c) body(c);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto run = [&] {
        for (;;) {
            const std::size_t c = next.fetch_add(1);
            if (c >= n_chunks) return;
            try {
                body(c);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
                next.store(n_chunks);
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers - 1);
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(run);
    run();
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace cirl
