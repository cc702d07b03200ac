#include "kronest/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "kronest/error.hpp"

namespace kronest {

int resolve_threads(std::optional<int> requested) {
    if (requested) {
        if (*requested < 1) throw ConfigError("thread count must be >= 1");
        return *requested;
    }
    if (const char* env = std::getenv("KRONEST_THREADS"); env != nullptr && *env != '\0') {
        try {
            std::size_t pos = 0;
            const int n = std::stoi(env, &pos);
            if (pos == std::string(env).size() && n >= 1) return n;
        } catch (const std::exception&) {
        }
        throw ConfigError(std::string("KRONEST_THREADS is not a positive integer: ") + env);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn, int threads) {
    if (n == 0) return;
    const auto workers =
        static_cast<std::size_t>(std::clamp<std::size_t>(static_cast<std::size_t>(threads), 1, n));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }

    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mutex;

    auto worker = [&] {
        while (!failed.load(std::memory_order_relaxed)) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                fn(i);
            } catch (...) {
                const std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
                failed = true;
            }
        }
    };

    std::vector<std::jthread> pool;
    pool.reserve(workers - 1);
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(worker);
    worker();
    pool.clear();
    if (error) std::rethrow_exception(error);
}

}  // namespace kronest
