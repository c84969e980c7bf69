#pragma once

// Minimal worker pool for embarrassingly parallel trial grids.  Tasks are
// indexed 0..count-1 and each task writes only its own preallocated result
// slot, so the merged output never depends on scheduling order.  The worker
// count comes from the SPECBOOL_THREADS environment variable (or a CLI
// override), clamped to [1, count].

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace specbool {

inline int default_thread_count() {
    if (const char* env = std::getenv("SPECBOOL_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v >= 1)
            return int(std::min(v, long(256)));
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? int(hw) : 1;
}

// Run fn(i) for every i in [0, count).  fn must only touch state owned by
// task i.  The first exception thrown by any task is rethrown here after all
// workers finish.
inline void parallel_for(size_t count, int threads, const std::function<void(size_t)>& fn) {
    if (count == 0)
        return;
    const int t = std::max(1, std::min(threads, int(std::min(count, size_t(256)))));
    if (t == 1) {
        for (size_t i = 0; i < count; ++i)
            fn(i);
        return;
    }
    std::atomic<size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto worker = [&]() {
        for (;;) {
            const size_t i = next.fetch_add(1);
            if (i >= count)
                return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error)
                    first_error = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(size_t(t));
    for (int w = 0; w < t; ++w)
        pool.emplace_back(worker);
    for (auto& th : pool)
        th.join();
    if (first_error)
        std::rethrow_exception(first_error);
}

} // namespace specbool
