#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace lisrate {

inline int default_workers() {
    unsigned n = std::thread::hardware_concurrency();
    return n == 0 ? 1 : static_cast<int>(n);
}

// Runs fn(task) for task in [0, n_tasks) on up to `workers` threads. Tasks
// are claimed dynamically, so callers must make each task self-contained
// and write results to a slot owned by that task.
template <class Fn>
void parallel_for(std::size_t n_tasks, int workers, Fn&& fn) {
    if (n_tasks == 0) return;
    std::size_t nthreads = static_cast<std::size_t>(std::max(1, workers));
    nthreads = std::min(nthreads, n_tasks);
    if (nthreads == 1) {
        for (std::size_t t = 0; t < n_tasks; ++t) fn(t);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto body = [&] {
        for (;;) {
            std::size_t t = next.fetch_add(1);
            if (t >= n_tasks) return;
            try {
                fn(t);
            } catch (...) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next.store(n_tasks);
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(nthreads - 1);
    for (std::size_t i = 0; i + 1 < nthreads; ++i) pool.emplace_back(body);
    body();
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
}

}  // namespace lisrate
