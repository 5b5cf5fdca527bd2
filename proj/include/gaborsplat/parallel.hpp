#ifndef GABORSPLAT_PARALLEL_HPP
#define GABORSPLAT_PARALLEL_HPP

#include <atomic>
#include <exception>
#include <thread>
#include <vector>

namespace gsp {

inline int resolve_threads(int requested) {
    if (requested > 0) return requested;
    unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? int(hw) : 1;
}

// Runs f(i) for i in [0, n). Work items must write to disjoint state;
// scheduling order is unspecified, so determinism has to come from the
// items themselves (it does: tiles own their pixels, reductions are
// performed by the caller in fixed order afterwards).
template <class F>
inline void parallel_for(int n, int threads, F&& f) {
    threads = std::min(resolve_threads(threads), n);
    if (threads <= 1) {
        for (int i = 0; i < n; ++i) f(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr error;
    std::atomic<bool> failed{false};
    auto worker = [&] {
        while (true) {
            int i = next.fetch_add(1);
            if (i >= n || failed.load()) return;
            try {
                f(i);
            } catch (...) {
                if (!failed.exchange(true)) error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (failed.load() && error) std::rethrow_exception(error);
}

}  // namespace gsp

#endif
