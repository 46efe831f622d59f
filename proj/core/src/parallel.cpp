#include "neyman/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <thread>
#include <vector>

namespace neyman {

namespace {
std::atomic<int> g_threads{1};
}

void set_thread_count(int n) { g_threads = n < 1 ? 1 : n; }
int thread_count() { return g_threads; }

void parallel_for(std::size_t n_tasks, const std::function<void(std::size_t)>& body) {
    auto workers = static_cast<std::size_t>(thread_count());
    if (workers <= 1 || n_tasks <= 1) {
        for (std::size_t k = 0; k < n_tasks; ++k) body(k);
        return;
    }
    workers = std::min(workers, n_tasks);
    std::vector<std::exception_ptr> errors(n_tasks);
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t t = 0; t < workers; ++t)
        pool.emplace_back([&] {
            for (std::size_t k = next++; k < n_tasks; k = next++) {
                try {
                    body(k);
                } catch (...) {
                    errors[k] = std::current_exception();
                }
            }
        });
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace neyman
