#pragma once

// Multithreaded two-pass scan. One code path serves both the plain two-pass
// schemes (a single iteration over the whole input) and the cache-partitioned
// pipeline (many iterations, one barrier each).
//
// Per iteration k every worker runs its pass-1 task, waits on the barrier,
// then runs its pass-2 task and moves straight on to iteration k + 1. Pass-1
// results land in sums[k % 2]; pass 2 of iteration k may still be reading
// sums[k % 2] while pass 1 of iteration k + 1 fills sums[(k + 1) % 2], and
// nobody can reach pass 1 of k + 2 before everyone has passed barrier k + 1.
//
// The carry into iteration k + 1 is either derived from the ledger (every
// worker computes the same value) or, when the last span is only scanned in
// pass 2, published by that span's owner before it arrives at barrier k + 1.

#include <algorithm>
#include <array>
#include <atomic>
#include <cassert>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <iostream>
#include <optional>
#include <span>
#include <stdexcept>
#include <thread>
#include <vector>

#include "prefix_sum/barrier.hpp"
#include "prefix_sum/plan.hpp"
#include "prefix_sum/platform.hpp"
#include "prefix_sum/scan_core.hpp"
#include "prefix_sum/simd.hpp"
#include "prefix_sum/simd_kernels.hpp"

namespace psum {

enum class Kernel { Scalar, Simd };
enum class Affinity { None, Compact };

// Lane width used for layout alignment by both kernels.
inline constexpr std::size_t kEngineLaneWidth = simd::kReferenceWidth;

struct PhaseEvent {
  std::size_t thread;
  std::size_t iteration;
  int pass;
};

template <Element T>
struct ScanRequest {
  std::span<const T> input;
  std::span<T> output;  // same storage as input for in-place scans
  Kernel kernel = Kernel::Simd;
  SchemeId scheme = kScanIncrementPlusOne;
  Dilation dilation{};
  std::size_t block_len = 0;  // per-thread elements per iteration; 0 = unpartitioned
  std::size_t threads = 1;
  Affinity affinity = Affinity::None;
  // Called by every worker right before each of its passes. Test hook.
  std::function<void(const PhaseEvent&)> phase_hook;

  static ScanRequest in_place(std::span<T> data) {
    ScanRequest r;
    r.input = data;
    r.output = data;
    return r;
  }
  static ScanRequest out_of_place(std::span<const T> in, std::span<T> out) {
    ScanRequest r;
    r.input = in;
    r.output = out;
    return r;
  }

  bool is_in_place() const noexcept { return input.data() == output.data(); }
};

// Double-buffered per-partition totals.
template <Element T>
class SumsLedger {
 public:
  explicit SumsLedger(std::size_t partitions)
      : sums_{std::vector<T>(partitions), std::vector<T>(partitions)} {}

  std::span<T> sums(std::size_t iteration) noexcept { return sums_[iteration % 2]; }
  std::span<const T> sums(std::size_t iteration) const noexcept { return sums_[iteration % 2]; }

  // start + totals of spans [0, j) that did pass-1 work. Left-to-right, so
  // every thread gets bit-identical results.
  T offset(const PartitionLayout& layout, std::size_t iteration, std::size_t j, T start) const noexcept {
    const auto& s = sums_[iteration % 2];
    T acc = start;
    for (std::size_t i = 0; i < j; ++i) {
      if (layout.spans[i].pass1.busy()) acc += s[i];
    }
    return acc;
  }
  T total(const PartitionLayout& layout, std::size_t iteration, T start) const noexcept {
    return offset(layout, iteration, layout.spans.size(), start);
  }

  // Carry into `iteration`, for layouts whose total is only known after pass 2.
  void publish_carry(std::size_t iteration, T value) noexcept { carry_[iteration % 2] = value; }
  T published_carry(std::size_t iteration) const noexcept { return carry_[iteration % 2]; }

 private:
  std::array<std::vector<T>, 2> sums_;
  std::array<T, 2> carry_{};
};

struct ThreadStats {
  // [pass - 1][role]
  std::array<std::array<std::size_t, 4>, 2> role_count{};

  std::size_t tasks(int pass) const noexcept {
    const auto& c = role_count[static_cast<std::size_t>(pass - 1)];
    return c[1] + c[2] + c[3];
  }
  std::size_t count(int pass, Role role) const noexcept {
    return role_count[static_cast<std::size_t>(pass - 1)][static_cast<std::size_t>(role)];
  }
};

struct RunStats {
  std::size_t iterations = 0;
  std::uint64_t barrier_waits = 0;  // completed barrier phases
  std::vector<ThreadStats> threads;

  std::size_t idle_thread_passes() const noexcept {
    std::size_t idle = 0;
    for (const auto& t : threads) idle += (t.tasks(1) == 0) + (t.tasks(2) == 0);
    return idle;
  }
};

namespace detail {

template <Element T>
struct ScalarOps {
  static T scan(const T* in, T* out, std::size_t n, T offset) noexcept {
    return scalar::inclusive_scan<T>(in, out, n, offset);
  }
  static T accumulate(const T* in, std::size_t n) noexcept { return scalar::accumulate<T>(in, n); }
  static void increment(T* data, std::size_t n, T offset) noexcept {
    scalar::increment<T>(data, n, offset);
  }
};

template <Element T>
struct SimdOps {
  using Vec = simd::NativeVec<T, simd::kReferenceWidth>;
  static T scan(const T* in, T* out, std::size_t n, T offset) noexcept {
    return simd::horizontal_scan<Vec>(in, out, n, offset);
  }
  static T accumulate(const T* in, std::size_t n) noexcept {
    return simd::vector_accumulate<Vec>(in, n);
  }
  static void increment(T* data, std::size_t n, T offset) noexcept {
    simd::vector_increment<Vec>(data, n, offset);
  }
};

// The owner of a pass-2-only last span other than thread 0 accumulates it in
// pass 1 as well, so the next iteration's carry comes from the ledger.
inline void precompute_last_total(PartitionLayout& layout) {
  if (!layout.carry_from_pass2()) return;
  auto& last = layout.spans.back();
  if (last.pass2.owner == 0) return;
  if (layout.assignment[last.pass2.owner][0] != kNoSpan) return;
  last.pass1 = {Role::Accumulate, last.pass2.owner};
  layout.assignment[last.pass2.owner][0] = layout.spans.size() - 1;
}

inline void warn_oversubscribed(std::size_t threads) {
  static std::atomic<bool> warned{false};
  if (!warned.exchange(true)) {
    std::clog << "prefix_sum: " << threads << " workers exceed " << platform::hardware_threads()
              << " hardware threads; running oversubscribed\n";
  }
}

}  // namespace detail

// Runs scan requests on freshly spawned workers (thread 0 is the caller).
// One run at a time per instance.
class ScanEngine {
 public:
  template <Element T>
  T run(const ScanRequest<T>& req) {
    validate(req);
    const std::size_t n = req.input.size();
    IterationGrid grid = compute_grid(n, req.threads, req.scheme, req.dilation, req.block_len,
                                      kEngineLaneWidth);
    if (req.block_len != 0) {
      for (auto& it : grid.iterations) detail::precompute_last_total(it.layout);
    }
    stats_ = {};
    stats_.iterations = grid.iterations.size();
    stats_.threads.assign(req.threads, {});
    if (grid.iterations.empty()) return T{};
    if (req.threads > platform::hardware_threads()) detail::warn_oversubscribed(req.threads);
    return req.kernel == Kernel::Simd ? execute<detail::SimdOps<T>>(req, grid)
                                      : execute<detail::ScalarOps<T>>(req, grid);
  }

  template <Element T>
  T run_two_pass(const ScanRequest<T>& req) {
    if (req.block_len != 0) throw std::invalid_argument("run_two_pass: block_len must be 0");
    return run(req);
  }

  template <Element T>
  T run_partitioned(const ScanRequest<T>& req) {
    if (req.block_len == 0) throw std::invalid_argument("run_partitioned: block_len must be positive");
    return run(req);
  }

  const RunStats& last_stats() const noexcept { return stats_; }

 private:
  template <Element T>
  static void validate(const ScanRequest<T>& req) {
    if (req.threads == 0) throw std::invalid_argument("scan: thread count must be at least 1");
    if (req.output.size() != req.input.size()) {
      throw std::invalid_argument("scan: input and output lengths differ");
    }
    if (!req.is_in_place() && !req.input.empty()) {
      const auto* in_begin = reinterpret_cast<const std::byte*>(req.input.data());
      const auto* out_begin = reinterpret_cast<const std::byte*>(req.output.data());
      const std::size_t bytes = req.input.size_bytes();
      if (std::less<>{}(in_begin, out_begin + bytes) && std::less<>{}(out_begin, in_begin + bytes)) {
        throw std::invalid_argument("scan: out-of-place buffers overlap");
      }
    }
    if (req.block_len != 0 && req.block_len < kEngineLaneWidth) {
      throw std::invalid_argument("scan: block length must be 0 or at least the lane width");
    }
  }

  template <class Ops, Element T>
  T execute(const ScanRequest<T>& req, const IterationGrid& grid) {
    const std::size_t m = req.threads;
    SpinBarrier barrier(m, m <= platform::hardware_threads() ? SpinBarrier::kDefaultSpin : 0);
    std::size_t max_spans = 1;
    for (const auto& it : grid.iterations) max_spans = std::max(max_spans, it.layout.spans.size());
    SumsLedger<T> ledger(max_spans);

    const std::uint64_t gen0 = barrier.generation();
    T thread0_carry{};
    auto body = [&](std::size_t t) {
      std::optional<platform::ScopedPin> pin;
      if (req.affinity == Affinity::Compact) pin.emplace(static_cast<unsigned>(t));
      ThreadStats local;
      const T carry = work<Ops>(t, req, grid, barrier, ledger, local);
      stats_.threads[t] = local;
      if (t == 0) thread0_carry = carry;
    };
    {
      std::vector<std::jthread> workers;
      workers.reserve(m - 1);
      for (std::size_t t = 1; t < m; ++t) workers.emplace_back(body, t);
      body(0);
    }
    stats_.barrier_waits = barrier.generation() - gen0;
    return grid.iterations.back().layout.carry_from_pass2()
               ? ledger.published_carry(grid.iterations.size())
               : thread0_carry;
  }

  template <class Ops, Element T>
  static T work(std::size_t t, const ScanRequest<T>& req, const IterationGrid& grid,
                SpinBarrier& barrier, SumsLedger<T>& ledger, ThreadStats& stats) {
    const T* in = req.input.data();
    T* out = req.output.data();
    T carry{};  // carry into the current iteration, as far as this thread knows

    for (std::size_t k = 0; k < grid.iterations.size(); ++k) {
      const PartitionLayout& layout = grid.iterations[k].layout;

      if (req.phase_hook) req.phase_hook({t, k, 1});
      if (const std::size_t j = layout.span_of(t, 1); j != kNoSpan) {
        const SpanPlan& sp = layout.spans[j];
        const Span s = sp.span;
        if (sp.pass1.role == Role::Scan) {
          // Only span 0 is scanned with the incoming carry.
          assert(j != 0 || k == 0 || !grid.iterations[k - 1].layout.carry_from_pass2() ||
                 grid.iterations[k - 1].layout.spans.back().pass2.owner == t);
          ledger.sums(k)[j] = Ops::scan(in + s.start, out + s.start, s.len, j == 0 ? carry : T{});
        } else {
          ledger.sums(k)[j] = Ops::accumulate(in + s.start, s.len);
        }
        ++stats.role_count[0][static_cast<std::size_t>(sp.pass1.role)];
      }

      barrier.arrive_and_wait();

      if (k > 0) {
        const PartitionLayout& prev = grid.iterations[k - 1].layout;
        if (prev.carry_from_pass2() && prev.spans.back().pass2.owner != t) {
          carry = ledger.published_carry(k);
        }
      }

      if (req.phase_hook) req.phase_hook({t, k, 2});
      const T start = layout.seeded_first() ? T{} : carry;
      if (const std::size_t j = layout.span_of(t, 2); j != kNoSpan) {
        const SpanPlan& sp = layout.spans[j];
        const Span s = sp.span;
        const T offset = ledger.offset(layout, k, j, start);
        if (sp.pass2.role == Role::Increment) {
          Ops::increment(out + s.start, s.len, offset);
        } else {
          const T end = Ops::scan(in + s.start, out + s.start, s.len, offset);
          if (j + 1 == layout.spans.size() && layout.carry_from_pass2()) {
            ledger.publish_carry(k + 1, end);
            carry = end;
          }
        }
        ++stats.role_count[1][static_cast<std::size_t>(sp.pass2.role)];
      }
      if (!layout.carry_from_pass2()) carry = ledger.total(layout, k, start);
    }
    return carry;
  }

  RunStats stats_;
};

}  // namespace psum
