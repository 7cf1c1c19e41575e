#pragma once

// Layout arithmetic for the multithreaded two-pass schemes: which thread runs
// which sub-procedure on which span, in each pass, for each cache-sized
// iteration. Pure functions, no threads.

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "prefix_sum/scan_core.hpp"

namespace psum {

enum class PassOrder {
  ScanIncrement,   // pass 1 local scans, pass 2 increments
  AccumulateScan,  // pass 1 totals, pass 2 seeded scans
};

enum class Partitioning {
  Equal,    // m partitions for m threads
  PlusOne,  // m + 1 partitions, thread 0 takes the extra one
};

struct SchemeId {
  PassOrder order = PassOrder::ScanIncrement;
  Partitioning partitioning = Partitioning::Equal;

  friend constexpr bool operator==(const SchemeId&, const SchemeId&) = default;
};

inline constexpr SchemeId kScanIncrementEqual{PassOrder::ScanIncrement, Partitioning::Equal};
inline constexpr SchemeId kAccumulateScanEqual{PassOrder::AccumulateScan, Partitioning::Equal};
inline constexpr SchemeId kScanIncrementPlusOne{PassOrder::ScanIncrement, Partitioning::PlusOne};
inline constexpr SchemeId kAccumulateScanPlusOne{PassOrder::AccumulateScan, Partitioning::PlusOne};
inline constexpr std::array<SchemeId, 4> kAllSchemes{kScanIncrementEqual, kAccumulateScanEqual,
                                                     kScanIncrementPlusOne, kAccumulateScanPlusOne};

inline std::string_view to_string(SchemeId s) noexcept {
  if (s == kScanIncrementEqual) return "scan+increment/equal";
  if (s == kAccumulateScanEqual) return "accumulate+scan/equal";
  if (s == kScanIncrementPlusOne) return "scan+increment/plus-one";
  return "accumulate+scan/plus-one";
}

// Size ratios of thread 0's partition (d0) and of the extra last partition
// (d_last) relative to a regular partition. Only PlusOne layouts use them:
//   ScanIncrement+PlusOne:  d0 scales the last span (thread 0's pass-2 scan)
//   AccumulateScan+PlusOne: d0 scales the first span (thread 0's pass-1 scan),
//                           d_last scales the last span
// A ratio of 0 removes that span, which reduces the layout to its Equal form.
struct Dilation {
  double d0 = 1.0;
  double d_last = 1.0;
};

enum class Role : std::uint8_t { Idle, Scan, Accumulate, Increment };

inline std::string_view to_string(Role r) noexcept {
  switch (r) {
    case Role::Idle: return "idle";
    case Role::Scan: return "scan";
    case Role::Accumulate: return "accumulate";
    case Role::Increment: return "increment";
  }
  return "?";
}

struct Task {
  Role role = Role::Idle;
  std::uint32_t owner = 0;

  bool busy() const noexcept { return role != Role::Idle; }
};

struct SpanPlan {
  Span span;
  Task pass1;
  Task pass2;
};

inline constexpr std::size_t kNoSpan = std::numeric_limits<std::size_t>::max();

struct PartitionLayout {
  std::vector<SpanPlan> spans;
  std::size_t threads = 1;
  // Per thread: index into `spans` of its pass-1 / pass-2 work, or kNoSpan.
  std::vector<std::array<std::size_t, 2>> assignment;

  Span region() const noexcept {
    if (spans.empty()) return {};
    return {spans.front().span.start, spans.back().span.end() - spans.front().span.start};
  }

  std::size_t span_of(std::size_t thread, int pass) const noexcept {
    return assignment[thread][static_cast<std::size_t>(pass - 1)];
  }

  // Pass-1 scan of span 0 already includes the carry from earlier data.
  bool seeded_first() const noexcept {
    return !spans.empty() && spans.front().pass1.role == Role::Scan;
  }

  // The region total is only known once the last span's pass-2 scan ends.
  bool carry_from_pass2() const noexcept {
    return !spans.empty() && !spans.back().pass1.busy() && spans.back().pass2.role == Role::Scan;
  }

  // Number of (thread, pass) pairs with no work.
  std::size_t idle_thread_passes() const noexcept {
    std::size_t idle = 0;
    for (const auto& a : assignment) idle += (a[0] == kNoSpan) + (a[1] == kNoSpan);
    return idle;
  }
};

namespace detail {

inline void validate_ratio(double d, const char* name) {
  if (!(d >= 0.0 && d <= 1.0)) {
    throw std::invalid_argument(std::string("dilation ") + name + " must lie in [0, 1]");
  }
}

inline std::size_t align_down(std::size_t x, std::size_t w) noexcept { return x / w * w; }

inline void finish_assignment(PartitionLayout& layout) {
  layout.assignment.assign(layout.threads, {kNoSpan, kNoSpan});
  for (std::size_t j = 0; j < layout.spans.size(); ++j) {
    auto& sp = layout.spans[j];
    if (sp.span.empty()) sp.pass1.role = sp.pass2.role = Role::Idle;
    if (sp.pass1.busy()) layout.assignment[sp.pass1.owner][0] = j;
    if (sp.pass2.busy()) layout.assignment[sp.pass2.owner][1] = j;
  }
}

inline PartitionLayout single_span_layout(std::size_t base, std::size_t n, std::size_t m) {
  PartitionLayout layout;
  layout.threads = m;
  if (n > 0) layout.spans.push_back({{base, n}, {Role::Scan, 0}, {Role::Idle, 0}});
  finish_assignment(layout);
  return layout;
}

}  // namespace detail

// Partitions [base, base + n) for m threads. Regular spans get
// floor(n / (sum of span weights)) elements rounded down to a multiple of w;
// dilated spans get their ratio of that, also rounded down to w. The rounding
// residue goes to the last span with nonzero weight. Inputs with n < m * w
// (or whose base length rounds to zero) get a single span scanned by
// thread 0.
inline PartitionLayout compute_layout(std::size_t n, std::size_t m, SchemeId scheme,
                                      Dilation dilation, std::size_t w, std::size_t base = 0) {
  if (m == 0) throw std::invalid_argument("compute_layout: thread count must be at least 1");
  if (!std::has_single_bit(w)) throw std::invalid_argument("compute_layout: lane width must be a power of two");
  detail::validate_ratio(dilation.d0, "d0");
  detail::validate_ratio(dilation.d_last, "d_last");

  if (n < m * w) return detail::single_span_layout(base, n, m);

  const bool plus_one = scheme.partitioning == Partitioning::PlusOne;
  const bool scan_first = scheme.order == PassOrder::ScanIncrement;
  const std::size_t count = plus_one ? m + 1 : m;

  std::vector<double> weight(count, 1.0);
  if (plus_one) {
    if (scan_first) {
      weight[m] = dilation.d0;
    } else {
      weight[0] = dilation.d0;
      weight[m] = dilation.d_last;
    }
  }
  double weight_sum = 0.0;
  for (double x : weight) weight_sum += x;
  if (weight_sum == 0.0) return detail::single_span_layout(base, n, m);

  const auto unit = detail::align_down(
      static_cast<std::size_t>(std::floor(static_cast<double>(n) / weight_sum)), w);
  if (unit == 0) return detail::single_span_layout(base, n, m);

  std::vector<std::size_t> len(count);
  std::size_t used = 0;
  for (std::size_t j = 0; j < count; ++j) {
    len[j] = weight[j] == 1.0
                 ? unit
                 : detail::align_down(
                       static_cast<std::size_t>(std::floor(weight[j] * static_cast<double>(unit))), w);
    used += len[j];
  }
  std::size_t sink = count - 1;
  while (weight[sink] == 0.0) --sink;
  len[sink] += n - used;

  PartitionLayout layout;
  layout.threads = m;
  layout.spans.resize(count);
  std::size_t pos = base;
  for (std::size_t j = 0; j < count; ++j) {
    layout.spans[j].span = {pos, len[j]};
    pos += len[j];
  }

  const auto owner = [](std::size_t t) { return static_cast<std::uint32_t>(t); };
  auto& s = layout.spans;
  if (!plus_one && scan_first) {
    for (std::size_t j = 0; j < m; ++j) {
      s[j].pass1 = {Role::Scan, owner(j)};
      s[j].pass2 = {j == 0 ? Role::Idle : Role::Increment, owner(j)};
    }
  } else if (!plus_one) {
    for (std::size_t j = 0; j < m; ++j) {
      s[j].pass1 = {j + 1 == m ? Role::Idle : Role::Accumulate, owner(j)};
      s[j].pass2 = {Role::Scan, owner(j)};
    }
  } else if (scan_first) {
    for (std::size_t j = 0; j < m; ++j) {
      s[j].pass1 = {Role::Scan, owner(j)};
      s[j].pass2 = {j == 0 ? Role::Idle : Role::Increment, owner(j)};
    }
    s[m].pass1 = {Role::Idle, 0};
    s[m].pass2 = {Role::Scan, 0};
  } else {
    s[0].pass1 = {Role::Scan, 0};
    s[0].pass2 = {Role::Idle, 0};
    for (std::size_t j = 1; j < m; ++j) {
      s[j].pass1 = {Role::Accumulate, owner(j)};
      s[j].pass2 = {Role::Scan, owner(j)};
    }
    s[m].pass1 = {Role::Idle, 0};
    s[m].pass2 = {Role::Scan, 0};
  }
  detail::finish_assignment(layout);
  return layout;
}

struct Iteration {
  Span region;
  PartitionLayout layout;
};

struct IterationGrid {
  std::size_t block_len = 0;  // per thread; 0 = one iteration over everything
  std::vector<Iteration> iterations;
};

// Splits [0, n) into iterations of block_len * m elements (the last may be
// short), each with its own layout. block_len is rounded down to a multiple
// of w unless it already covers n / m, which gives a single iteration.
inline IterationGrid compute_grid(std::size_t n, std::size_t m, SchemeId scheme, Dilation dilation,
                                  std::size_t block_len, std::size_t w) {
  if (m == 0) throw std::invalid_argument("compute_grid: thread count must be at least 1");
  if (block_len != 0 && block_len < w) {
    throw std::invalid_argument("compute_grid: block length must be 0 or at least the lane width");
  }
  IterationGrid grid;
  grid.block_len = detail::align_down(block_len, w);
  if (n == 0) return grid;
  // block_len >= n / m means one iteration, whatever the alignment trims.
  const std::size_t step = grid.block_len == 0 || block_len >= (n + m - 1) / m ? n : grid.block_len * m;
  grid.iterations.reserve((n + step - 1) / step);
  for (std::size_t pos = 0; pos < n; pos += step) {
    const std::size_t len = std::min(step, n - pos);
    grid.iterations.push_back({{pos, len}, compute_layout(len, m, scheme, dilation, w, pos)});
  }
  return grid;
}

// Cache sizes as far as the platform (or configuration) knows them.
struct CacheInfo {
  std::optional<std::size_t> l1d_bytes;
  std::optional<std::size_t> l2_bytes;
  std::optional<std::size_t> l3_bytes;
};

inline constexpr std::size_t kFallbackBlockLen = 128 * 1024;

// Per-thread partition length: half of L2, split between the hardware threads
// sharing the core, rounded down to a multiple of w.
inline std::size_t default_block_len(const CacheInfo& cache, unsigned threads_per_core,
                                     std::size_t w = 16, std::size_t elem_bytes = 4) {
  if (!cache.l2_bytes || *cache.l2_bytes == 0) return kFallbackBlockLen;
  const std::size_t sharing = std::max(1u, threads_per_core);
  const std::size_t len = detail::align_down(*cache.l2_bytes / 2 / elem_bytes / sharing, w);
  return std::max(len, w);
}

}  // namespace psum
