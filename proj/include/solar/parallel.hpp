#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace solar::parallel {

namespace detail {
inline std::atomic<int>& thread_override() {
    static std::atomic<int> value{0};
    return value;
}
}  // namespace detail

/// Forces the worker count (0 restores the environment/hardware default).
inline void set_thread_count(int n) { detail::thread_override().store(std::max(0, n)); }

/// Worker count: explicit override, else SOLAR_PLANNER_THREADS, else the
/// hardware concurrency.
[[nodiscard]] inline int thread_count() {
    if (int n = detail::thread_override().load(); n > 0) return n;
    if (const char* env = std::getenv("SOLAR_PLANNER_THREADS")) {
        try {
            const int n = std::stoi(env);
            if (n > 0) return n;
        } catch (const std::exception&) {
        }
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

/// Calls fn(i) for every i in [0, n). Work is handed out dynamically, so
/// callers must write results into per-index slots and reduce afterwards.
/// The first exception thrown by any task is rethrown on the caller.
template <class Fn>
void for_each_index(std::size_t n, Fn&& fn) {
    const auto workers = std::min<std::size_t>(static_cast<std::size_t>(thread_count()), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto work = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < n;) {
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
                next.store(n);
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers - 1);
    for (std::size_t t = 1; t < workers; ++t) pool.emplace_back(work);
    work();
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace solar::parallel
