#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace asymexp {

// Thread count resolution: explicit request > ASYMPEXP_THREADS > hardware.
// Clamped to [1, 64]. All parallel reductions in this library merge
// per-chunk results in chunk order, so results never depend on the count.
inline int effective_threads(int requested = 0) {
    int t = requested;
    if (t <= 0) {
        if (const char* env = std::getenv("ASYMPEXP_THREADS")) {
            t = std::atoi(env);
        }
    }
    if (t <= 0) t = static_cast<int>(std::thread::hardware_concurrency());
    if (t <= 0) t = 1;
    return std::clamp(t, 1, 64);
}

// Runs fn(chunkIndex, begin, end) over [begin0, end0) split into contiguous
// chunks, one per thread. fn must write only into its own chunk slot.
template <class Fn>
void parallel_chunks(std::uint64_t begin0, std::uint64_t end0, int threads, Fn fn) {
    if (end0 <= begin0) return;
    const std::uint64_t total = end0 - begin0;
    const int nChunks = static_cast<int>(std::min<std::uint64_t>(static_cast<std::uint64_t>(std::max(threads, 1)), total));
    if (nChunks <= 1) {
        fn(0, begin0, end0);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(nChunks));
    const std::uint64_t step = total / nChunks;
    const std::uint64_t rem = total % nChunks;
    std::uint64_t cursor = begin0;
    for (int c = 0; c < nChunks; ++c) {
        const std::uint64_t len = step + (static_cast<std::uint64_t>(c) < rem ? 1 : 0);
        const std::uint64_t b = cursor;
        const std::uint64_t e = cursor + len;
        cursor = e;
        pool.emplace_back([c, b, e, &fn] { fn(c, b, e); });
    }
    for (auto& th : pool) th.join();
}

}  // namespace asymexp
