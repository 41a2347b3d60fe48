#include "ktube/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace ktube::parallel {

namespace {
std::atomic<unsigned> g_threads{1};
constexpr std::size_t kMinChunk = 64;
}  // namespace

void set_threads(unsigned n) { g_threads.store(std::max(1u, n)); }
unsigned threads() { return g_threads.load(); }

std::size_t chunk_count(std::size_t n) {
  if (n == 0) return 0;
  const std::size_t by_size = (n + kMinChunk - 1) / kMinChunk;
  return std::max<std::size_t>(1, std::min<std::size_t>(threads(), by_size));
}

void for_each_chunk(std::size_t begin, std::size_t end,
                    const std::function<void(std::size_t, std::size_t, std::size_t)>& body) {
  if (end <= begin) return;
  const std::size_t n = end - begin;
  const std::size_t chunks = chunk_count(n);
  if (chunks == 1) {
    body(0, begin, end);
    return;
  }
  const std::size_t per = (n + chunks - 1) / chunks;
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::jthread> workers;
  workers.reserve(chunks);
  for (std::size_t c = 0; c < chunks; ++c) {
    const std::size_t lo = begin + c * per;
    const std::size_t hi = std::min(end, lo + per);
    if (lo >= hi) break;
    workers.emplace_back([&, c, lo, hi] {
      try {
        body(c, lo, hi);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    });
  }
  workers.clear();
  if (error) std::rethrow_exception(error);
}

void for_each_index(std::size_t begin, std::size_t end, const std::function<void(std::size_t)>& body) {
  for_each_chunk(begin, end, [&](std::size_t, std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) body(i);
  });
}

}  // namespace ktube::parallel
