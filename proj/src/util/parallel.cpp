#include "srckt/util/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace srckt {
namespace {

std::atomic<int> g_workers{0};
// Set on pool threads so nested loops run inline instead of oversubscribing.
thread_local bool t_in_pool = false;

} // namespace

void set_workers(int n) { g_workers.store(std::max(1, n)); }

int workers() {
    int n = g_workers.load();
    if (n <= 0) {
        n = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    }
    return n;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
    const auto w = static_cast<std::size_t>(workers());
    if (w <= 1 || n <= 1 || t_in_pool) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        const bool outer = t_in_pool;
        t_in_pool = true;
        struct Restore {
            bool v;
            ~Restore() { t_in_pool = v; }
        } restore{outer};
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                body(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
                next.store(n);
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    const std::size_t count = std::min(w, n);
    pool.reserve(count - 1);
    for (std::size_t t = 1; t < count; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

} // namespace srckt
