#include "cqrf/parallel.hpp"

#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace cqrf {

int resolve_threads(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("CQRF_THREADS")) {
        const int v = std::atoi(env);
        if (v > 0) return v;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

void parallel_for(std::size_t count, int n_threads,
                  const std::function<void(std::size_t)>& body) {
    n_threads = resolve_threads(n_threads);
    if (n_threads <= 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }

    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;

    auto worker = [&]() {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count) return;
            try {
                body(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
                next.store(count);  // drain remaining work
                return;
            }
        }
    };

    std::vector<std::thread> pool;
    const std::size_t spawn =
        std::min<std::size_t>(static_cast<std::size_t>(n_threads), count);
    pool.reserve(spawn);
    for (std::size_t t = 0; t < spawn; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace cqrf
