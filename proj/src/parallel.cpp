#include "sbr/parallel.hpp"

#include <algorithm>
#include <cstdlib>

namespace sbr {

namespace {

std::size_t &thread_limit_storage() {
    static std::size_t limit = [] {
        std::size_t n = std::max(1u, std::thread::hardware_concurrency());
        if (const char *env = std::getenv("SBR_THREADS")) {
            char *end = nullptr;
            const long v = std::strtol(env, &end, 10);
            if (end != env && v > 0)
                n = static_cast<std::size_t>(v);
        }
        return n;
    }();
    return limit;
}

} // namespace

std::size_t thread_limit() { return thread_limit_storage(); }

void set_thread_limit(std::size_t n) {
    thread_limit_storage() = std::max<std::size_t>(1, n);
}

bool &detail::in_parallel_region() {
    thread_local bool flag = false;
    return flag;
}

} // namespace sbr
