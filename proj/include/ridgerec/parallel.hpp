#pragma once

#include <algorithm>
#include <functional>
#include <thread>
#include <vector>

namespace ridgerec {

// Static-chunk parallel loop. Every index writes only its own slice of the
// output, so results are bitwise independent of the thread count; reductions
// are always done sequentially by the caller afterwards.
inline void parallel_for(int begin, int end, int threads,
                         const std::function<void(int)>& fn) {
    const int n = end - begin;
    if (n <= 0) return;
    if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
    threads = std::max(1, std::min(threads, n));
    if (threads == 1) {
        for (int i = begin; i < end; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(threads);
    const int chunk = (n + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
        const int lo = begin + t * chunk;
        const int hi = std::min(end, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &fn] {
            for (int i = lo; i < hi; ++i) fn(i);
        });
    }
    for (auto& th : pool) th.join();
}

}  // namespace ridgerec
