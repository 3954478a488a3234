#include "mortboost/parallel.hpp"

#include "mortboost/text.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <thread>
#include <vector>

namespace mortboost {

namespace {

std::size_t initial_thread_count() noexcept {
    if (const char *env = std::getenv("MORTBOOST_THREADS")) {
        if (const auto n = text::parse_int(env); n && *n > 0) {
            return static_cast<std::size_t>(*n);
        }
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

std::atomic<std::size_t> &thread_setting() noexcept {
    static std::atomic<std::size_t> threads{initial_thread_count()};
    return threads;
}

} // namespace

std::size_t thread_count() noexcept { return thread_setting().load(); }

void set_thread_count(std::size_t threads) noexcept {
    thread_setting().store(std::max<std::size_t>(1, threads));
}

ScopedThreadCount::ScopedThreadCount(std::size_t threads) noexcept : previous_{thread_count()} {
    set_thread_count(threads);
}

ScopedThreadCount::~ScopedThreadCount() { set_thread_count(previous_); }

void parallel_for(std::size_t n, const std::function<void(std::size_t)> &body,
                  std::size_t min_chunk) {
    const auto workers = std::min(thread_count(), std::max<std::size_t>(1, n / std::max<std::size_t>(1, min_chunk)));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) {
            body(i);
        }
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    const auto chunk = (n + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                const auto end = std::min(n, (w + 1) * chunk);
                for (std::size_t i = w * chunk; i < end; ++i) {
                    body(i);
                }
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto &t : pool) {
        t.join();
    }
    for (const auto &e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
}

} // namespace mortboost
