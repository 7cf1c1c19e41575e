#include <gtest/gtest.h>

#include <atomic>
#include <thread>
#include <vector>

#include "prefix_sum/barrier.hpp"
#include "prefix_sum/platform.hpp"

using psum::SpinBarrier;

namespace {

std::size_t spin_for(std::size_t threads) {
  return threads > psum::platform::hardware_threads() ? 0 : SpinBarrier::kDefaultSpin;
}

}  // namespace

TEST(SpinBarrier, SingleParticipantReturnsImmediately) {
  SpinBarrier b(1);
  for (int i = 0; i < 1000; ++i) b.arrive_and_wait();
  EXPECT_EQ(b.generation(), 1000u);
  EXPECT_EQ(b.participants(), 1u);
}

// Every thread stamps its slot with the generation it is in, waits, and then
// checks that all slots carry that generation; a second wait keeps the next
// round's stamps from racing with the checks.
TEST(SpinBarrier, EveryThreadSeesEveryGeneration) {
  constexpr std::size_t kThreads = 4;
  constexpr std::size_t kRounds = 100000;
  SpinBarrier b(kThreads, spin_for(kThreads));
  std::vector<std::atomic<std::size_t>> stamp(kThreads);
  std::atomic<std::size_t> errors{0};

  auto body = [&](std::size_t t) {
    for (std::size_t r = 0; r < kRounds; ++r) {
      stamp[t].store(r, std::memory_order_relaxed);
      b.arrive_and_wait();
      for (std::size_t u = 0; u < kThreads; ++u) {
        if (stamp[u].load(std::memory_order_relaxed) != r) errors.fetch_add(1);
      }
      b.arrive_and_wait();
    }
  };
  {
    std::vector<std::jthread> workers;
    for (std::size_t t = 1; t < kThreads; ++t) workers.emplace_back(body, t);
    body(0);
  }
  EXPECT_EQ(errors.load(), 0u);
  EXPECT_EQ(b.generation(), 2 * kRounds);
}

// Plain (non-atomic) writes before the barrier are visible after it.
TEST(SpinBarrier, PublishesPlainWrites) {
  constexpr std::size_t kRounds = 20000;
  SpinBarrier b(2, spin_for(2));
  std::vector<std::size_t> payload(64);
  std::size_t bad = 0;

  std::jthread writer([&] {
    for (std::size_t r = 1; r <= kRounds; ++r) {
      for (auto& x : payload) x = r;
      b.arrive_and_wait();  // publish
      b.arrive_and_wait();  // reader done
    }
  });
  for (std::size_t r = 1; r <= kRounds; ++r) {
    b.arrive_and_wait();
    for (const auto x : payload) bad += x != r;
    b.arrive_and_wait();
  }
  writer.join();
  EXPECT_EQ(bad, 0u);
}

TEST(SpinBarrier, ImmediateReuseAcrossManyParticipants) {
  constexpr std::size_t kThreads = 8;
  SpinBarrier b(kThreads, spin_for(kThreads));
  std::atomic<std::size_t> arrivals{0};
  std::atomic<std::size_t> bad{0};
  auto body = [&] {
    for (std::size_t r = 0; r < 2000; ++r) {
      arrivals.fetch_add(1);
      b.arrive_and_wait();
      if (arrivals.load() < (r + 1) * kThreads) bad.fetch_add(1);
      b.arrive_and_wait();
    }
  };
  {
    std::vector<std::jthread> workers;
    for (std::size_t t = 0; t < kThreads; ++t) workers.emplace_back(body);
  }
  EXPECT_EQ(bad.load(), 0u);
}
