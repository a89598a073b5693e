#pragma once

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace sumproj {

// Worker count: SUMPROJ_THREADS env var, overridable at runtime (--threads).
// A value of 0 means "use hardware concurrency".
inline int& worker_count_slot() {
    static int count = [] {
        if (const char* env = std::getenv("SUMPROJ_THREADS")) {
            int v = std::atoi(env);
            if (v > 0) return v;
        }
        return 0;
    }();
    return count;
}

inline void set_worker_count(int n) { worker_count_slot() = n; }

inline int effective_workers() {
    int n = worker_count_slot();
    if (n <= 0) n = static_cast<int>(std::thread::hardware_concurrency());
    return std::max(1, n);
}

// Runs body(begin, end) over fixed-size chunks of [0, n).
// Chunk boundaries depend only on n, never on the worker count, and each
// chunk writes to its own output slots, so results are identical for any
// number of workers. Reductions over chunk outputs must be done by the
// caller in index order.
inline void parallel_chunks(std::size_t n, std::size_t chunk_size,
                            const std::function<void(std::size_t, std::size_t)>& body) {
    if (n == 0) return;
    chunk_size = std::max<std::size_t>(1, chunk_size);
    const std::size_t n_chunks = (n + chunk_size - 1) / chunk_size;
    const int workers = std::min<int>(effective_workers(), static_cast<int>(n_chunks));
    if (workers <= 1) {
        for (std::size_t c = 0; c < n_chunks; ++c)
            body(c * chunk_size, std::min(n, (c + 1) * chunk_size));
        return;
    }
    std::atomic<std::size_t> next{0};
    auto run = [&] {
        for (;;) {
            std::size_t c = next.fetch_add(1);
            if (c >= n_chunks) break;
            body(c * chunk_size, std::min(n, (c + 1) * chunk_size));
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers) - 1);
    for (int w = 1; w < workers; ++w) pool.emplace_back(run);
    run();
    for (auto& t : pool) t.join();
}

}  // namespace sumproj
