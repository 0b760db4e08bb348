#ifndef SBR_PARALLEL_HPP
#define SBR_PARALLEL_HPP

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace sbr {

/// Upper bound on worker threads used by library routines. Defaults to the
/// hardware concurrency, overridden by the SBR_THREADS environment variable.
std::size_t thread_limit();
void set_thread_limit(std::size_t n);

namespace detail {
bool &in_parallel_region();
}

/// Runs fn(i) for i in [0, count). Nested calls run inline on the calling
/// worker. The first exception thrown by any task is rethrown.
template <class Fn> void parallel_for(std::size_t count, Fn &&fn) {
    const std::size_t workers = std::min(thread_limit(), count);
    if (workers <= 1 || detail::in_parallel_region()) {
        for (std::size_t i = 0; i < count; ++i)
            fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto body = [&] {
        detail::in_parallel_region() = true;
        for (std::size_t i = next++; i < count; i = next++) {
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure)
                    failure = std::current_exception();
                next = count;
            }
        }
        detail::in_parallel_region() = false;
    };
    {
        std::vector<std::jthread> pool;
        pool.reserve(workers - 1);
        for (std::size_t w = 1; w < workers; ++w)
            pool.emplace_back(body);
        body();
    }
    if (failure)
        std::rethrow_exception(failure);
}

} // namespace sbr

#endif
