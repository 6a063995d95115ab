#include "hyper/tensor/memory.hpp"

#include <atomic>

namespace hyper::tensor::memory {

namespace {

std::atomic<std::size_t> g_largest{0};
std::atomic<std::size_t> g_live{0};
std::atomic<std::size_t> g_peak_live{0};
std::atomic<std::size_t> g_allocations{0};

void raise_to(std::atomic<std::size_t>& target, std::size_t value) {
  std::size_t cur = target.load(std::memory_order_relaxed);
  while (value > cur && !target.compare_exchange_weak(cur, value, std::memory_order_relaxed)) {
  }
}

}  // namespace

void record_allocation(std::size_t elements) {
  g_allocations.fetch_add(1, std::memory_order_relaxed);
  raise_to(g_largest, elements);
  const auto live = g_live.fetch_add(elements, std::memory_order_relaxed) + elements;
  raise_to(g_peak_live, live);
}

void record_release(std::size_t elements) { g_live.fetch_sub(elements, std::memory_order_relaxed); }

Stats stats() {
  return Stats{g_largest.load(), g_live.load(), g_peak_live.load(), g_allocations.load()};
}

void reset_peaks() {
  g_largest.store(0);
  g_peak_live.store(g_live.load());
  g_allocations.store(0);
}

}  // namespace hyper::tensor::memory
