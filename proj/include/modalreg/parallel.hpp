#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace modalreg {

namespace detail {
inline std::atomic<std::size_t>&
thread_setting()
{
  static std::atomic<std::size_t> n{ 1 };
  return n;
}
} // namespace detail

//! Caps the number of worker threads used by the library (0 means 1).
inline void
set_num_threads(std::size_t n)
{
  detail::thread_setting().store(std::max<std::size_t>(n, 1));
}

namespace detail {
inline bool&
in_parallel_region()
{
  thread_local bool flag = false;
  return flag;
}
} // namespace detail

inline std::size_t
num_threads()
{
  return detail::thread_setting().load();
}

//! Runs `fn(i)` for i in [0, count). Each index must write only its own
//! output slot; results are then independent of the thread count. If any
//! call throws, the exception from the lowest failing index is rethrown.
//! Calls nested inside a parallel region run serially.
template<class Fn>
void
parallel_for(std::size_t count, Fn&& fn)
{
  const std::size_t workers = detail::in_parallel_region() ? 1 : std::min(num_threads(), count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i)
      fn(i);
    return;
  }

  std::atomic<std::size_t> next{ 0 };
  std::mutex error_mutex;
  std::exception_ptr error;
  std::size_t error_index = count;

  auto work = [&] {
    bool& region = detail::in_parallel_region();
    const bool outer = region;
    region = true;
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) {
        region = outer;
        return;
      }
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (i < error_index) {
          error_index = i;
          error = std::current_exception();
        }
      }
    }
  };

  std::vector<std::jthread> pool;
  pool.reserve(workers - 1);
  for (std::size_t t = 1; t < workers; ++t)
    pool.emplace_back(work);
  work();
  pool.clear();

  if (error)
    std::rethrow_exception(error);
}

} // namespace modalreg
