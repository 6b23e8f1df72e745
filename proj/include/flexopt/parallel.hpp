#ifndef FLEXOPT_PARALLEL_HPP
#define FLEXOPT_PARALLEL_HPP

#include <atomic>
#include <exception>
#include <thread>
#include <vector>

namespace flexopt {

/// Runs fn(i) for i in [0, n) on a transient worker pool. Work items write
/// results by index, so the outcome is independent of scheduling; the
/// lowest-index exception is rethrown after all workers join.
template <typename F>
void parallel_for_indexed(int n, int threads, F&& fn) {
    if (n <= 0) return;
    threads = std::max(1, std::min(threads, n));
    if (threads == 1) {
        std::vector<std::exception_ptr> errs(static_cast<size_t>(n));
        for (int i = 0; i < n; ++i) {
            try {
                fn(i);
            } catch (...) {
                errs[static_cast<size_t>(i)] = std::current_exception();
            }
        }
        for (auto& e : errs)
            if (e) std::rethrow_exception(e);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::exception_ptr> errs(static_cast<size_t>(n));
    auto worker = [&] {
        for (;;) {
            int i = next.fetch_add(1);
            if (i >= n) return;
            try {
                fn(i);
            } catch (...) {
                errs[static_cast<size_t>(i)] = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(threads));
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    for (auto& e : errs)
        if (e) std::rethrow_exception(e);
}

}  // namespace flexopt

#endif
