#pragma once

// Deterministic chunked parallel execution.
//
// The replication range [0, total) is split into fixed-size chunks. Workers
// grab whole chunks, accumulate into a per-chunk slot, and the slots are
// reduced in chunk order afterwards. The result is bit-identical for any
// worker count, because the floating-point reduction order is fixed and every
// replication owns its own RNG stream.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <mutex>
#include <stdexcept>
#include <thread>
#include <vector>

namespace brw {

struct ParallelConfig {
  unsigned workers = 0;      // 0 = hardware concurrency (or BRWLAB_WORKERS)
  uint64_t chunk_size = 4096;

  unsigned resolved_workers() const {
    if (workers > 0) return workers;
    if (const char* env = std::getenv("BRWLAB_WORKERS")) {
      const long v = std::strtol(env, nullptr, 10);
      if (v > 0) return static_cast<unsigned>(v);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? hw : 1;
  }
};

// Acc must provide merge(const Acc&). body(rep, acc) runs once per
// replication; reps within a chunk run in index order.
template <typename Acc, typename Body>
Acc run_replications(uint64_t total, const ParallelConfig& cfg, Body&& body) {
  if (total == 0) return Acc{};
  const uint64_t chunk = cfg.chunk_size > 0 ? cfg.chunk_size : 4096;
  const uint64_t n_chunks = (total + chunk - 1) / chunk;
  std::vector<Acc> slots(n_chunks);

  const unsigned workers =
      static_cast<unsigned>(std::min<uint64_t>(cfg.resolved_workers(), n_chunks));
  std::atomic<uint64_t> next_chunk{0};
  std::atomic<bool> failed{false};
  std::vector<std::thread> pool;
  std::exception_ptr first_error;
  std::mutex error_mutex;

  auto work = [&]() {
    for (;;) {
      const uint64_t c = next_chunk.fetch_add(1);
      if (c >= n_chunks || failed.load(std::memory_order_relaxed)) return;
      const uint64_t begin = c * chunk;
      const uint64_t end = std::min(total, begin + chunk);
      try {
        Acc& acc = slots[c];
        for (uint64_t rep = begin; rep < end; ++rep) body(rep, acc);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        failed.store(true, std::memory_order_relaxed);
        return;
      }
    }
  };

  if (workers <= 1) {
    work();
  } else {
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (first_error) std::rethrow_exception(first_error);

  Acc out = std::move(slots[0]);
  for (uint64_t c = 1; c < n_chunks; ++c) out.merge(slots[c]);
  return out;
}

}  // namespace brw
