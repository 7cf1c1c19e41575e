#pragma once

// Data-parallel scan kernels over VecBlock<T, W, Isa>:
//   horizontal - in-register scan per block, carry broadcast between blocks
//   vertical   - W strided lane-chunks scanned column-wise via gather/scatter
//   tree       - up-sweep / down-sweep over a balanced tree, strided gathers
//
// Vertical and tree kernels take aligned regions; the blocked_* drivers peel
// tails and chain carries so any length works.

#include <algorithm>
#include <array>
#include <bit>
#include <cassert>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>

#include "prefix_sum/scan_core.hpp"
#include "prefix_sum/simd.hpp"

namespace psum::simd {

// Largest region a 32-bit signed gather index can address.
inline constexpr std::size_t kMaxGatherRegion = std::size_t{1} << 30;

namespace detail {

template <class Vec>
using elem_t = typename Vec::value_type;

}  // namespace detail

// ---------------------------------------------------------------------------
// Horizontal

template <class Vec, class T = detail::elem_t<Vec>>
T horizontal_scan(const T* in, T* out, std::size_t len, T offset) noexcept {
  constexpr std::size_t W = Vec::width;
  Vec carry = Vec::broadcast(offset);
  std::size_t i = 0;
  for (; i + W <= len; i += W) {
    const Vec x = vector_inclusive_scan(Vec::load(in + i)) + carry;
    x.store(out + i);
    carry = x.broadcast_last();
  }
  return scalar::inclusive_scan<T>(in + i, out + i, len - i, carry.last());
}

template <class Vec, class T = detail::elem_t<Vec>>
T horizontal_scan(std::span<T> data, Span span, T offset) noexcept {
  assert(span.end() <= data.size());
  T* p = data.data() + span.start;
  return horizontal_scan<Vec>(p, p, span.len, offset);
}

template <class Vec, class T = detail::elem_t<Vec>>
T vector_accumulate(const T* in, std::size_t len) noexcept {
  constexpr std::size_t W = Vec::width;
  Vec acc = Vec::zero();
  std::size_t i = 0;
  for (; i + W <= len; i += W) acc = acc + Vec::load(in + i);
  return acc.reduce_add() + scalar::accumulate<T>(in + i, len - i);
}

template <class Vec, class T = detail::elem_t<Vec>>
void vector_increment(T* data, std::size_t len, T offset) noexcept {
  constexpr std::size_t W = Vec::width;
  const Vec add = Vec::broadcast(offset);
  std::size_t i = 0;
  for (; i + W <= len; i += W) (Vec::load(data + i) + add).store(data + i);
  scalar::increment<T>(data + i, len - i, offset);
}

// ---------------------------------------------------------------------------
// Vertical
//
// A region of n elements (n % W == 0) is viewed as W chunks of k = n / W
// elements; lane c walks chunk c. Indices advance by a vector add of one per
// step.

// Column-wise scan with per-lane seeds. Returns the final running sums, so
// lane c holds seeds[c] + total of chunk c.
template <class Vec, class T = detail::elem_t<Vec>>
Vec vertical_seeded_scan(const T* in, T* out, std::size_t len, Vec seeds) noexcept {
  constexpr std::size_t W = Vec::width;
  assert(len % W == 0 && len <= kMaxGatherRegion);
  using Index = typename Vec::index_type;
  const std::size_t k = len / W;
  Index idx = Index::strided(static_cast<std::int32_t>(k));
  const Index one = Index::broadcast(1);
  Vec running = seeds;
  for (std::size_t j = 0; j < k; ++j) {
    running = running + Vec::gather(in, idx);
    running.scatter(out, idx);
    idx = idx + one;
  }
  return running;
}

// Column-wise totals; gathers only.
template <class Vec, class T = detail::elem_t<Vec>>
Vec vertical_chunk_totals(const T* in, std::size_t len) noexcept {
  constexpr std::size_t W = Vec::width;
  assert(len % W == 0 && len <= kMaxGatherRegion);
  using Index = typename Vec::index_type;
  const std::size_t k = len / W;
  Index idx = Index::strided(static_cast<std::int32_t>(k));
  const Index one = Index::broadcast(1);
  Vec running = Vec::zero();
  for (std::size_t j = 0; j < k; ++j) {
    running = running + Vec::gather(in, idx);
    idx = idx + one;
  }
  return running;
}

// Pass 1, scan flavour: each chunk becomes its local inclusive scan, chunk 0
// seeded with carry_in. Returns the lane totals (lane 0 includes carry_in).
template <class Vec, class T = detail::elem_t<Vec>>
std::array<T, Vec::width> vertical_scan_pass1_scan(std::span<T> data, Span region,
                                                   T carry_in) noexcept {
  assert(region.end() <= data.size());
  std::array<T, Vec::width> seeds{};
  seeds[0] = carry_in;
  T* p = data.data() + region.start;
  return vertical_seeded_scan<Vec>(p, p, region.len, Vec::from_array(seeds)).to_array();
}

// Pass 2 after pass1_scan: chunk c += chunk_offsets[c].
template <class Vec, class T = detail::elem_t<Vec>>
void vertical_scan_pass2_increment(std::span<T> data, Span region,
                                   const std::array<T, Vec::width>& chunk_offsets) noexcept {
  constexpr std::size_t W = Vec::width;
  assert(region.end() <= data.size() && region.len % W == 0);
  const std::size_t k = region.len / W;
  T* p = data.data() + region.start;
  for (std::size_t c = 0; c < W; ++c) vector_increment<Vec>(p + c * k, k, chunk_offsets[c]);
}

// Pass 1, accumulate flavour: chunk totals only, data untouched.
template <class Vec, class T = detail::elem_t<Vec>>
std::array<T, Vec::width> vertical_scan_pass1_accumulate(std::span<const T> data,
                                                         Span region) noexcept {
  assert(region.end() <= data.size());
  return vertical_chunk_totals<Vec>(data.data() + region.start, region.len).to_array();
}

// Pass 2 after pass1_accumulate: column-wise scan with chunk c seeded by
// chunk_seeds[c].
template <class Vec, class T = detail::elem_t<Vec>>
void vertical_scan_pass2_scan(std::span<T> data, Span region,
                              const std::array<T, Vec::width>& chunk_seeds) noexcept {
  assert(region.end() <= data.size());
  T* p = data.data() + region.start;
  vertical_seeded_scan<Vec>(p, p, region.len, Vec::from_array(chunk_seeds));
}

// ---------------------------------------------------------------------------
// Tree

namespace detail {

inline bool is_tree_length(std::size_t len, std::size_t w) noexcept {
  return len >= w && len % w == 0 && std::has_single_bit(len / w);
}

}  // namespace detail

// Blelloch scan in place over data[0, len), len = W * 2^j. Each tree level
// with at least W node pairs is processed W pairs at a time with strided
// gather/scatter; the top levels with fewer pairs run scalar. The exclusive
// result is then shifted into inclusive form and offset is added. Returns
// offset plus the root (the span total).
template <class Vec, class T = detail::elem_t<Vec>>
T tree_scan(T* data, std::size_t len, T offset) {
  constexpr std::size_t W = Vec::width;
  if (!detail::is_tree_length(len, W) || len > kMaxGatherRegion) {
    throw std::invalid_argument("tree_scan: length " + std::to_string(len) +
                                " is not a power of two times the lane width");
  }
  using Index = typename Vec::index_type;

  // Up-sweep: right child of every pair at this level absorbs the left child.
  for (std::size_t stride = 1; stride < len; stride *= 2) {
    const std::size_t pair_span = 2 * stride;
    const std::size_t pairs = len / pair_span;
    if (pairs >= W) {
      Index left = Index::strided(static_cast<std::int32_t>(pair_span),
                                  static_cast<std::int32_t>(stride - 1));
      Index right = left + Index::broadcast(static_cast<std::int32_t>(stride));
      const Index step = Index::broadcast(static_cast<std::int32_t>(pair_span * W));
      for (std::size_t p = 0; p < pairs; p += W) {
        (Vec::gather(data, left) + Vec::gather(data, right)).scatter(data, right);
        left = left + step;
        right = right + step;
      }
    } else {
      for (std::size_t i = 0; i < len; i += pair_span) data[i + pair_span - 1] += data[i + stride - 1];
    }
  }

  const T total = data[len - 1];
  data[len - 1] = T{};

  // Down-sweep: left <- right, right <- right + old left.
  for (std::size_t stride = len / 2; stride >= 1; stride /= 2) {
    const std::size_t pair_span = 2 * stride;
    const std::size_t pairs = len / pair_span;
    if (pairs >= W) {
      Index left = Index::strided(static_cast<std::int32_t>(pair_span),
                                  static_cast<std::int32_t>(stride - 1));
      Index right = left + Index::broadcast(static_cast<std::int32_t>(stride));
      const Index step = Index::broadcast(static_cast<std::int32_t>(pair_span * W));
      for (std::size_t p = 0; p < pairs; p += W) {
        const Vec l = Vec::gather(data, left);
        const Vec r = Vec::gather(data, right);
        r.scatter(data, left);
        (r + l).scatter(data, right);
        left = left + step;
        right = right + step;
      }
    } else {
      for (std::size_t i = 0; i < len; i += pair_span) {
        const T l = data[i + stride - 1];
        data[i + stride - 1] = data[i + pair_span - 1];
        data[i + pair_span - 1] += l;
      }
    }
  }

  // inclusive[i] = exclusive[i + 1]; the final element is the root.
  const Vec add = Vec::broadcast(offset);
  std::size_t i = 0;
  for (; i + W < len; i += W) (Vec::load(data + i + 1) + add).store(data + i);
  for (; i + 1 < len; ++i) data[i] = data[i + 1] + offset;
  data[len - 1] = total + offset;
  return total + offset;
}

template <class Vec, class T = detail::elem_t<Vec>>
T tree_scan(std::span<T> data, Span span, T offset) {
  assert(span.end() <= data.size());
  return tree_scan<Vec>(data.data() + span.start, span.len, offset);
}

// ---------------------------------------------------------------------------
// Single-thread drivers for arbitrary lengths.

enum class VerticalOrder {
  ScanFirst,        // pass 1 scans chunks, pass 2 increments (SIMD-V1)
  AccumulateFirst,  // pass 1 totals chunks, pass 2 scans (SIMD-V2)
};

// Two-pass vertical scan over regions of `block_len` elements (0 = whole
// input), chained by a running carry. Region lengths are rounded down to a
// multiple of W; the final tail of fewer than W elements goes through the
// horizontal kernel.
template <class Vec, class T = detail::elem_t<Vec>>
T blocked_vertical_scan(const T* in, T* out, std::size_t len, T offset, VerticalOrder order,
                        std::size_t block_len = 0) noexcept {
  constexpr std::size_t W = Vec::width;
  std::size_t cap = block_len == 0 ? kMaxGatherRegion : std::min(block_len, kMaxGatherRegion);
  cap = std::max(W, cap / W * W);

  T carry = offset;
  std::size_t pos = 0;
  while (len - pos >= W) {
    const std::size_t region = std::min(cap, (len - pos) / W * W);
    const std::size_t k = region / W;
    if (order == VerticalOrder::ScanFirst) {
      std::array<T, W> seeds{};
      seeds[0] = carry;
      const auto totals =
          vertical_seeded_scan<Vec>(in + pos, out + pos, region, Vec::from_array(seeds)).to_array();
      T running{};
      for (std::size_t c = 0; c < W; ++c) {
        vector_increment<Vec>(out + pos + c * k, k, running);
        running += totals[c];
      }
      carry = running;
    } else {
      const auto totals = vertical_chunk_totals<Vec>(in + pos, region).to_array();
      std::array<T, W> seeds{};
      seeds[0] = carry;
      for (std::size_t c = 1; c < W; ++c) seeds[c] = seeds[c - 1] + totals[c - 1];
      carry = vertical_seeded_scan<Vec>(in + pos, out + pos, region, Vec::from_array(seeds)).last();
    }
    pos += region;
  }
  return horizontal_scan<Vec>(in + pos, out + pos, len - pos, carry);
}

// Tree scan over any length: greedily peels the largest W * 2^j piece (capped
// by block_len when nonzero), tails of fewer than W elements go horizontal.
// Out-of-place calls copy first; the tree sweeps are in place.
template <class Vec, class T = detail::elem_t<Vec>>
T blocked_tree_scan(const T* in, T* out, std::size_t len, T offset, std::size_t block_len = 0) {
  constexpr std::size_t W = Vec::width;
  if (in != out) std::copy(in, in + len, out);
  std::size_t cap = block_len == 0 ? kMaxGatherRegion : std::min(block_len, kMaxGatherRegion);
  cap = std::max(W, std::bit_floor(cap / W) * W);

  T carry = offset;
  std::size_t pos = 0;
  while (len - pos >= W) {
    const std::size_t piece = std::min(cap, std::bit_floor((len - pos) / W) * W);
    carry = tree_scan<Vec>(out + pos, piece, carry);
    pos += piece;
  }
  return horizontal_scan<Vec>(out + pos, out + pos, len - pos, carry);
}

}  // namespace psum::simd
