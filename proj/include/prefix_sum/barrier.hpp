#pragma once

#include <atomic>
#include <cassert>
#include <cstddef>
#include <cstdint>
#include <thread>

#if defined(__x86_64__) || defined(__i386__)
#include <immintrin.h>
#endif

namespace psum {

inline void cpu_relax() noexcept {
#if defined(__x86_64__) || defined(__i386__)
  _mm_pause();
#endif
}

// Reusable counting barrier. Waiters spin on the generation counter for up to
// `spin_limit` polls, then yield between polls so oversubscribed runs still
// make progress.
class SpinBarrier {
 public:
  static constexpr std::size_t kDefaultSpin = 1 << 14;

  explicit SpinBarrier(std::size_t participants, std::size_t spin_limit = kDefaultSpin) noexcept
      : participants_(participants), spin_limit_(spin_limit) {
    assert(participants > 0);
  }

  SpinBarrier(const SpinBarrier&) = delete;
  SpinBarrier& operator=(const SpinBarrier&) = delete;

  void arrive_and_wait() noexcept {
    const std::uint64_t gen = generation_.load(std::memory_order_acquire);
    const std::size_t arrived = arrived_.fetch_add(1, std::memory_order_acq_rel) + 1;
    assert(arrived <= participants_ && "more arrivals than participants in one generation");
    if (arrived == participants_) {
      arrived_.store(0, std::memory_order_relaxed);
      generation_.store(gen + 1, std::memory_order_release);
      return;
    }
    for (std::size_t spins = 0; generation_.load(std::memory_order_acquire) == gen; ++spins) {
      if (spins < spin_limit_) {
        cpu_relax();
      } else {
        std::this_thread::yield();
      }
    }
  }

  // Completed phases since construction.
  std::uint64_t generation() const noexcept { return generation_.load(std::memory_order_acquire); }
  std::size_t participants() const noexcept { return participants_; }

 private:
  alignas(64) std::atomic<std::size_t> arrived_{0};
  alignas(64) std::atomic<std::uint64_t> generation_{0};
  std::size_t participants_;
  std::size_t spin_limit_;
};

}  // namespace psum
