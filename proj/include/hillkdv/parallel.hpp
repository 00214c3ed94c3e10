#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <thread>
#include <vector>

namespace hillkdv {

/// Runs fn(i) for i in [0, count) on up to `threads` workers. Results must
/// be written to per-index slots, which keeps output independent of the
/// schedule. The exception of the smallest failing index is rethrown.
template <class Fn>
void parallel_for(int count, int threads, Fn&& fn) {
    if (count <= 0) return;
    threads = std::clamp(threads, 1, count);
    if (threads == 1) {
        for (int i = 0; i < count; ++i) fn(i);
        return;
    }
    std::vector<std::exception_ptr> errors(count);
    std::atomic<int> next{0};
    auto worker = [&] {
        for (int i = next++; i < count; i = next++) {
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

} // namespace hillkdv
