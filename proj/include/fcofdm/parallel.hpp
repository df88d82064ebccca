#pragma once

#include <cstdlib>
#include <thread>
#include <vector>

namespace fcofdm {

inline unsigned default_threads() {
    if (const char* env = std::getenv("FCOFDM_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v > 0) return static_cast<unsigned>(v);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw ? hw : 1;
}

// Runs fn(0..n-1) across up to `threads` workers. Each index owns its output
// slot, so results are deterministic regardless of scheduling.
template <typename Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
    if (threads == 0) threads = default_threads();
    if (threads <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned w = 0; w < threads; ++w) {
        pool.emplace_back([&, w] {
            for (std::size_t i = w; i < n; i += threads) fn(i);
        });
    }
    for (std::thread& t : pool) t.join();
}

}  // namespace fcofdm
