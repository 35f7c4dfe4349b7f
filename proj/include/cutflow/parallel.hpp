#pragma once

#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace cutflow {

inline unsigned default_threads() {
    unsigned n = std::thread::hardware_concurrency();
    return n == 0 ? 1u : n;
}

namespace detail {
inline unsigned& thread_count_ref() {
    static unsigned n = default_threads();
    return n;
}
}  // namespace detail

inline void set_thread_count(unsigned n) { detail::thread_count_ref() = n == 0 ? 1u : n; }
inline unsigned thread_count() { return detail::thread_count_ref(); }

// Static block partition of [0, n). The body receives (index, worker_id);
// determinism must come from per-index seeding, never from worker identity.
inline void parallel_for(std::size_t n, const std::function<void(std::size_t, unsigned)>& body) {
    const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(thread_count(), n));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i, 0);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([=, &body] {
            for (std::size_t i = w; i < n; i += workers) body(i, w);
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace cutflow
