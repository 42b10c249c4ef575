#pragma once

#include <atomic>
#include <cstdlib>
#include <thread>
#include <vector>

namespace skyfleet {

// Worker cap: SKYFLEET_THREADS when set (minimum 1), else hardware threads.
inline unsigned thread_cap() {
    unsigned n = std::thread::hardware_concurrency();
    if (n == 0) n = 1;
    if (const char* env = std::getenv("SKYFLEET_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v >= 1 && static_cast<unsigned>(v) < n) n = static_cast<unsigned>(v);
    }
    return n;
}

// Runs fn(i) for i in [0, count) across worker threads. Each index is
// independent; callers own any ordering of results (index-addressed output
// buffers keep things deterministic).
template <typename Fn>
void parallel_for(size_t count, Fn&& fn) {
    const unsigned workers = std::min<size_t>(thread_cap(), count);
    if (workers <= 1) {
        for (size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace skyfleet
