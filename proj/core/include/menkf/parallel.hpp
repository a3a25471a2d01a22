#pragma once

#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace menkf {

/// Run fn(0..n-1) over `threads` worker threads (serial when threads <= 1).
/// Iterations must touch disjoint data; results are identical for any thread
/// count. If several iterations throw, the lowest index wins.
inline void parallel_for(int n, int threads, const std::function<void(int)>& fn)
{
    if (n <= 0)
        return;
    if (threads <= 1 || n == 1) {
        for (int i = 0; i < n; ++i)
            fn(i);
        return;
    }

    const int workers = std::min(threads, n);
    std::vector<std::exception_ptr> errors(n);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&, w]() {
            for (int i = w; i < n; i += workers) {
                try {
                    fn(i);
                } catch (...) {
                    errors[i] = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool)
        t.join();
    for (int i = 0; i < n; ++i)
        if (errors[i])
            std::rethrow_exception(errors[i]);
}

} // namespace menkf
