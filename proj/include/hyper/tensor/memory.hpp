#pragma once

#include <cstddef>
#include <memory>
#include <vector>

namespace hyper::tensor::memory {

/// Allocation accounting for numeric buffers, in elements (not bytes).
struct Stats {
  std::size_t largest_buffer = 0;  ///< biggest single allocation since reset
  std::size_t live = 0;            ///< elements currently allocated
  std::size_t peak_live = 0;       ///< high-water mark of `live` since reset
  std::size_t allocations = 0;
};

void record_allocation(std::size_t elements);
void record_release(std::size_t elements);
Stats stats();
/// Clears the peaks and counters; `live` is kept.
void reset_peaks();

}  // namespace hyper::tensor::memory

namespace hyper::tensor {

/// std::allocator that reports every allocation to `memory`.
template <typename T>
struct TrackingAllocator {
  using value_type = T;

  TrackingAllocator() noexcept = default;
  template <typename U>
  TrackingAllocator(const TrackingAllocator<U>&) noexcept {}

  T* allocate(std::size_t n) {
    memory::record_allocation(n);
    return std::allocator<T>{}.allocate(n);
  }
  void deallocate(T* p, std::size_t n) noexcept {
    memory::record_release(n);
    std::allocator<T>{}.deallocate(p, n);
  }

  template <typename U>
  bool operator==(const TrackingAllocator<U>&) const noexcept {
    return true;
  }
};

template <typename T>
using Buffer = std::vector<T, TrackingAllocator<T>>;

}  // namespace hyper::tensor
