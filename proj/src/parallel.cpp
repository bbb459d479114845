#include "codetopics/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace codetopics {

void parallel_for(std::size_t n, std::size_t max_workers, const std::function<void(std::size_t)>& fn) {
    if (n == 0) return;
    const std::size_t workers = std::max<std::size_t>(1, std::min(n, max_workers));
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto work = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        }
    };
    if (workers == 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    }
    if (first_error) std::rethrow_exception(first_error);
}

std::size_t default_workers() {
    return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace codetopics
