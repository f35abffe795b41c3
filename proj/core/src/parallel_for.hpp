#pragma once

#include <algorithm>
#include <thread>
#include <vector>

namespace domlab::detail {

inline int resolve_threads(int requested, int n_items) {
    int t = requested;
    if (t <= 0) {
        const unsigned hw = std::thread::hardware_concurrency();
        t = hw == 0 ? 1 : static_cast<int>(std::min(hw, 4u));
    }
    // below ~64 items per worker the spawn cost dominates
    return std::max(1, std::min(t, n_items / 64 + 1));
}

/// Runs fn(i) for every i in [0, n) over `threads` workers on disjoint
/// contiguous blocks. fn must only touch item-i slots; results are then
/// identical for any worker count.
template <typename Fn>
void parallel_for(int n, int threads, Fn&& fn) {
    if (threads <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(threads);
    const int chunk = (n + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
        const int begin = t * chunk;
        const int end = std::min(n, begin + chunk);
        if (begin >= end) break;
        pool.emplace_back([&fn, begin, end] {
            for (int i = begin; i < end; ++i) fn(i);
        });
    }
    for (auto& th : pool) th.join();
}

} // namespace domlab::detail
