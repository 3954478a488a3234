#pragma once

#include <cstddef>
#include <functional>

namespace mortboost {

/// Worker threads used by parallel loops. Initialized from the
/// MORTBOOST_THREADS environment variable, falling back to the hardware
/// concurrency. Results never depend on this value.
std::size_t thread_count() noexcept;
void set_thread_count(std::size_t threads) noexcept;

/// Overrides the thread count for the lifetime of the guard.
class ScopedThreadCount {
  public:
    explicit ScopedThreadCount(std::size_t threads) noexcept;
    ~ScopedThreadCount();
    ScopedThreadCount(const ScopedThreadCount &) = delete;
    ScopedThreadCount &operator=(const ScopedThreadCount &) = delete;

  private:
    std::size_t previous_;
};

/// Runs body(i) for i in [0, n) over contiguous chunks. Each index is visited
/// exactly once; body must only write state owned by index i.
void parallel_for(std::size_t n, const std::function<void(std::size_t)> &body,
                  std::size_t min_chunk = 1024);

} // namespace mortboost
