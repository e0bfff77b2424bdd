#include "codedp/parallel.hpp"

#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace codedp {

namespace {
thread_local int nesting_depth = 0;
}

int worker_count() {
  static int cached = [] {
    if (const char* env = std::getenv("CODEDP_THREADS")) {
      const int n = std::atoi(env);
      if (n >= 1) return n;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
  }();
  return cached;
}

void parallel_for(int begin, int end, const std::function<void(int)>& body) {
  if (end <= begin) return;
  const int count = end - begin;
  const int workers = std::min(worker_count(), count);
  if (workers <= 1 || nesting_depth > 0) {
    ++nesting_depth;
    try {
      for (int i = begin; i < end; ++i) body(i);
    } catch (...) {
      --nesting_depth;
      throw;
    }
    --nesting_depth;
    return;
  }

  std::atomic<int> next(begin);
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto run = [&] {
    ++nesting_depth;
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= end) break;
      try {
        body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        break;
      }
    }
    --nesting_depth;
  };

  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (int w = 1; w < workers; ++w) pool.emplace_back(run);
  run();
  for (std::thread& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace codedp
