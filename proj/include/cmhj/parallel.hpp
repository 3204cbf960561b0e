#pragma once

#include <algorithm>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace cmhj {

/// Runs f(i) for i in [0, n) on `threads` workers with a static contiguous
/// split, so results written to slot i never depend on scheduling. The first
/// exception (lowest chunk) is rethrown after all workers join.
template <class F>
void parallel_for(int n, int threads, F&& f) {
    threads = std::max(1, std::min(threads, n));
    if (threads == 1) {
        for (int i = 0; i < n; ++i) f(i);
        return;
    }
    std::vector<std::exception_ptr> errs(threads);
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int w = 0; w < threads; ++w) {
        const int a = static_cast<int>(static_cast<long long>(n) * w / threads);
        const int b = static_cast<int>(static_cast<long long>(n) * (w + 1) / threads);
        pool.emplace_back([&, a, b, w] {
            try {
                for (int i = a; i < b; ++i) f(i);
            } catch (...) {
                errs[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errs)
        if (e) std::rethrow_exception(e);
}

}  // namespace cmhj
