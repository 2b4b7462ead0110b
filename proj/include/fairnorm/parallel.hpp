#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <optional>
#include <thread>
#include <vector>

namespace fairnorm {

/// Worker cap: FAIRNORM_THREADS when set to a positive integer, else the hardware count.
inline std::size_t worker_count() {
  if (const char* env = std::getenv("FAIRNORM_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
  }
  return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

/// Runs fn(i) for i in [0, n) on up to `threads` workers and returns the results in index
/// order. The first exception (lowest index) is rethrown after all workers stop.
template <class Fn>
auto parallel_map(std::size_t n, Fn&& fn, std::size_t threads = worker_count())
    -> std::vector<decltype(fn(std::size_t{}))> {
  using R = decltype(fn(std::size_t{}));
  std::vector<std::optional<R>> slots(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  auto work = [&] {
    for (std::size_t i; !failed && (i = next++) < n;) {
      try {
        slots[i].emplace(fn(i));
      } catch (...) {
        errors[i] = std::current_exception();
        failed = true;
      }
    }
  };
  const std::size_t k = std::min(std::max<std::size_t>(threads, 1), n);
  if (k <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(k);
    for (std::size_t t = 0; t < k; ++t) pool.emplace_back(work);
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  std::vector<R> out;
  out.reserve(n);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

}  // namespace fairnorm
