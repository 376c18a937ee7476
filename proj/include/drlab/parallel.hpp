#pragma once

#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace drlab {

inline int max_threads() {
    if (const char* env = std::getenv("DR_LAB_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v >= 1) return static_cast<int>(v);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

// Runs fn(i) for i in [0, count). Work items must be independent; callers
// that need determinism write into pre-sized slots indexed by i and reduce
// sequentially afterwards.
inline void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn,
                         int threads = -1) {
    if (threads < 0) threads = max_threads();
    if (threads <= 1 || count < 2) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> cursor{0};
    const std::size_t chunk = 64;
    auto worker = [&] {
        for (;;) {
            const std::size_t begin = cursor.fetch_add(chunk);
            if (begin >= count) return;
            const std::size_t end = begin + chunk < count ? begin + chunk : count;
            for (std::size_t i = begin; i < end; ++i) fn(i);
        }
    };
    std::vector<std::thread> pool;
    const int n = threads < static_cast<int>(count) ? threads : static_cast<int>(count);
    pool.reserve(static_cast<std::size_t>(n));
    for (int t = 0; t < n; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
}

}  // namespace drlab
