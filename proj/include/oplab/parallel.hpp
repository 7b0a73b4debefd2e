#ifndef OPLAB_PARALLEL_HPP
#define OPLAB_PARALLEL_HPP

#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

// Replicate fan-out. Each task writes only its own slot, so the gathered
// vector is identical for any worker count; the first exception wins and is
// rethrown on the calling thread.

namespace oplab {

inline unsigned default_workers() {
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

template <class T, class Fn>
std::vector<T> parallel_map(size_t n, unsigned workers, Fn&& fn) {
    std::vector<T> out(n);
    if (n == 0) return out;
    if (workers <= 1) {
        for (size_t i = 0; i < n; ++i) out[i] = fn(i);
        return out;
    }
    std::atomic<size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (;;) {
            const size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                out[i] = fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
                next.store(n);
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    const unsigned count = std::min<size_t>(workers, n);
    pool.reserve(count);
    for (unsigned w = 0; w < count; ++w) pool.emplace_back(worker);
    for (std::thread& th : pool) th.join();
    if (error) std::rethrow_exception(error);
    return out;
}

}  // namespace oplab

#endif  // OPLAB_PARALLEL_HPP
