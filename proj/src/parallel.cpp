#include "sturmian/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace sturmian {

std::size_t worker_count(std::size_t requested) {
    std::size_t cap = 0;
    if (const char* env = std::getenv("STURMIAN_THREADS")) {
        try {
            const long v = std::stol(env);
            if (v > 0) cap = static_cast<std::size_t>(v);
        } catch (const std::exception&) {
        }
    }
    std::size_t n = requested;
    if (n == 0) n = cap != 0 ? cap : std::max(1u, std::thread::hardware_concurrency());
    if (cap != 0) n = std::min(n, cap);
    return std::max<std::size_t>(n, 1);
}

void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& body) {
    threads = std::min(std::max<std::size_t>(threads, 1), n);
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::mutex mu;
    std::size_t failed_index = n;
    std::exception_ptr failure;
    auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                body(i);
            } catch (...) {
                std::lock_guard lock(mu);
                if (i < failed_index) {
                    failed_index = i;
                    failure = std::current_exception();
                }
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(threads - 1);
    for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
}

}  // namespace sturmian
