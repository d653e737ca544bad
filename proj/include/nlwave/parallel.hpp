#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace nlwave {

inline unsigned worker_count(std::size_t jobs) {
    unsigned hw = std::thread::hardware_concurrency();
    if (hw == 0) hw = 1;
    if (const char* env = std::getenv("NLWAVE_THREADS")) {
        const long n = std::strtol(env, nullptr, 10);
        if (n > 0) hw = static_cast<unsigned>(n);
    }
    return static_cast<unsigned>(std::min<std::size_t>(hw, jobs));
}

/// Runs fn(0..n-1) across threads. Results must be written to caller-indexed
/// slots so reductions stay in a fixed order regardless of scheduling.
inline void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
    if (n == 0) return;
    const unsigned workers = worker_count(n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    std::exception_ptr first_error;
    std::mutex err_mutex;
    std::atomic<std::size_t> next{0};
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= n) break;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(err_mutex);
                    if (!first_error) first_error = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace nlwave
