#pragma once

// Fixed-width vector of 32-bit lanes. Two backends share one interface:
//   GenericIsa  - std::array lanes, scalar-loop gather/scatter (any width)
//   Avx512Isa   - 512-bit registers, W = 16 only, hardware gather/scatter
// Kernels are written once against this interface.

#include <array>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <type_traits>
#include <utility>

#if defined(__AVX512F__)
#include <immintrin.h>
#endif

#include "prefix_sum/scan_core.hpp"

namespace psum::simd {

struct GenericIsa {};
struct Avx512Isa {};

#if defined(__AVX512F__)
inline constexpr bool kHaveAvx512 = true;
#else
inline constexpr bool kHaveAvx512 = false;
#endif

template <std::size_t W>
concept LaneWidth = std::has_single_bit(W) && W >= 2 && W <= 16;

template <std::size_t W, class Isa = GenericIsa>
struct IndexBlock;

template <class T, std::size_t W, class Isa = GenericIsa>
struct VecBlock;

// ---------------------------------------------------------------------------
// Generic backend

template <std::size_t W>
  requires LaneWidth<W>
struct IndexBlock<W, GenericIsa> {
  std::array<std::int32_t, W> lane{};

  // (0, stride, 2*stride, ...) + first
  static IndexBlock strided(std::int32_t stride, std::int32_t first = 0) noexcept {
    IndexBlock r;
    for (std::size_t i = 0; i < W; ++i) r.lane[i] = first + static_cast<std::int32_t>(i) * stride;
    return r;
  }
  static IndexBlock broadcast(std::int32_t x) noexcept {
    IndexBlock r;
    r.lane.fill(x);
    return r;
  }
  friend IndexBlock operator+(IndexBlock a, const IndexBlock& b) noexcept {
    for (std::size_t i = 0; i < W; ++i) a.lane[i] += b.lane[i];
    return a;
  }
};

template <Element T, std::size_t W>
  requires LaneWidth<W>
struct VecBlock<T, W, GenericIsa> {
  using value_type = T;
  using isa = GenericIsa;
  using index_type = IndexBlock<W, GenericIsa>;
  static constexpr std::size_t width = W;

  std::array<T, W> lane{};

  static VecBlock zero() noexcept { return {}; }
  static VecBlock broadcast(T x) noexcept {
    VecBlock r;
    r.lane.fill(x);
    return r;
  }
  static VecBlock from_array(const std::array<T, W>& a) noexcept { return VecBlock{a}; }
  static VecBlock load(const T* p) noexcept {
    VecBlock r;
    std::memcpy(r.lane.data(), p, sizeof(T) * W);
    return r;
  }
  void store(T* p) const noexcept { std::memcpy(p, lane.data(), sizeof(T) * W); }

  static VecBlock gather(const T* base, const index_type& idx) noexcept {
    VecBlock r;
    for (std::size_t i = 0; i < W; ++i) r.lane[i] = base[idx.lane[i]];
    return r;
  }
  void scatter(T* base, const index_type& idx) const noexcept {
    for (std::size_t i = 0; i < W; ++i) base[idx.lane[i]] = lane[i];
  }

  friend VecBlock operator+(VecBlock a, const VecBlock& b) noexcept {
    for (std::size_t i = 0; i < W; ++i) a.lane[i] += b.lane[i];
    return a;
  }

  // Lane i <- lane (i - k), zeros shifted in at the bottom. Built as
  // "concatenate [zero | v] and extract W lanes at offset W - k".
  VecBlock shift_up(std::size_t k) const noexcept {
    std::array<T, 2 * W> cat{};
    for (std::size_t i = 0; i < W; ++i) cat[W + i] = lane[i];
    VecBlock r;
    const std::size_t from = W - (k > W ? W : k);
    for (std::size_t i = 0; i < W; ++i) r.lane[i] = cat[from + i];
    return r;
  }
  template <std::size_t K>
  VecBlock shift_up() const noexcept {
    static_assert(K <= W);
    return shift_up(K);
  }

  VecBlock broadcast_last() const noexcept { return broadcast(lane[W - 1]); }
  T last() const noexcept { return lane[W - 1]; }
  T operator[](std::size_t i) const noexcept { return lane[i]; }
  std::array<T, W> to_array() const noexcept { return lane; }

  T reduce_add() const noexcept {
    T s{};
    for (std::size_t i = 0; i < W; ++i) s += lane[i];
    return s;
  }
};

// ---------------------------------------------------------------------------
// AVX-512 backend (16 lanes)

#if defined(__AVX512F__)

template <>
struct IndexBlock<16, Avx512Isa> {
  __m512i v;

  static IndexBlock strided(std::int32_t stride, std::int32_t first = 0) noexcept {
    const __m512i iota = _mm512_setr_epi32(0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15);
    return {_mm512_add_epi32(_mm512_set1_epi32(first),
                             _mm512_mullo_epi32(iota, _mm512_set1_epi32(stride)))};
  }
  static IndexBlock broadcast(std::int32_t x) noexcept { return {_mm512_set1_epi32(x)}; }
  friend IndexBlock operator+(IndexBlock a, const IndexBlock& b) noexcept {
    return {_mm512_add_epi32(a.v, b.v)};
  }
};

namespace detail {

template <Element T>
struct Avx512Traits;

template <>
struct Avx512Traits<std::uint32_t> {
  using reg = __m512i;
  static reg zero() noexcept { return _mm512_setzero_si512(); }
  static reg set1(std::uint32_t x) noexcept { return _mm512_set1_epi32(static_cast<int>(x)); }
  static reg load(const std::uint32_t* p) noexcept { return _mm512_loadu_si512(p); }
  static void store(std::uint32_t* p, reg x) noexcept { _mm512_storeu_si512(p, x); }
  static reg add(reg a, reg b) noexcept { return _mm512_add_epi32(a, b); }
  static reg gather(const std::uint32_t* base, __m512i idx) noexcept {
    return _mm512_i32gather_epi32(idx, base, 4);
  }
  static void scatter(std::uint32_t* base, __m512i idx, reg x) noexcept {
    _mm512_i32scatter_epi32(base, idx, x, 4);
  }
  static __m512i as_int(reg x) noexcept { return x; }
  static reg from_int(__m512i x) noexcept { return x; }
  static std::uint32_t reduce(reg x) noexcept {
    return static_cast<std::uint32_t>(_mm512_reduce_add_epi32(x));
  }
};

template <>
struct Avx512Traits<float> {
  using reg = __m512;
  static reg zero() noexcept { return _mm512_setzero_ps(); }
  static reg set1(float x) noexcept { return _mm512_set1_ps(x); }
  static reg load(const float* p) noexcept { return _mm512_loadu_ps(p); }
  static void store(float* p, reg x) noexcept { _mm512_storeu_ps(p, x); }
  static reg add(reg a, reg b) noexcept { return _mm512_add_ps(a, b); }
  static reg gather(const float* base, __m512i idx) noexcept {
    return _mm512_i32gather_ps(idx, base, 4);
  }
  static void scatter(float* base, __m512i idx, reg x) noexcept {
    _mm512_i32scatter_ps(base, idx, x, 4);
  }
  static __m512i as_int(reg x) noexcept { return _mm512_castps_si512(x); }
  static reg from_int(__m512i x) noexcept { return _mm512_castsi512_ps(x); }
  static float reduce(reg x) noexcept { return _mm512_reduce_add_ps(x); }
};

}  // namespace detail

template <Element T>
struct VecBlock<T, 16, Avx512Isa> {
  using traits = detail::Avx512Traits<T>;
  using value_type = T;
  using isa = Avx512Isa;
  using index_type = IndexBlock<16, Avx512Isa>;
  static constexpr std::size_t width = 16;

  typename traits::reg v;

  static VecBlock zero() noexcept { return {traits::zero()}; }
  static VecBlock broadcast(T x) noexcept { return {traits::set1(x)}; }
  static VecBlock from_array(const std::array<T, 16>& a) noexcept { return load(a.data()); }
  static VecBlock load(const T* p) noexcept { return {traits::load(p)}; }
  void store(T* p) const noexcept { traits::store(p, v); }

  static VecBlock gather(const T* base, const index_type& idx) noexcept {
    return {traits::gather(base, idx.v)};
  }
  void scatter(T* base, const index_type& idx) const noexcept { traits::scatter(base, idx.v, v); }

  friend VecBlock operator+(VecBlock a, const VecBlock& b) noexcept {
    return {traits::add(a.v, b.v)};
  }

  // valignd over [v | zero]: there is no whole-register lane shift.
  template <std::size_t K>
  VecBlock shift_up() const noexcept {
    static_assert(K <= 16);
    if constexpr (K == 0) {
      return *this;
    } else if constexpr (K == 16) {
      return zero();
    } else {
      const __m512i x = traits::as_int(v);
      return {traits::from_int(_mm512_alignr_epi32(x, _mm512_setzero_si512(), 16 - K))};
    }
  }
  VecBlock shift_up(std::size_t k) const noexcept {
    return shift_dispatch(k, std::make_index_sequence<17>{});
  }

  VecBlock broadcast_last() const noexcept {
    return {traits::from_int(_mm512_permutexvar_epi32(_mm512_set1_epi32(15), traits::as_int(v)))};
  }
  T last() const noexcept { return (*this)[15]; }
  T operator[](std::size_t i) const noexcept {
    alignas(64) T tmp[16];
    store(tmp);
    return tmp[i];
  }
  std::array<T, 16> to_array() const noexcept {
    std::array<T, 16> a;
    store(a.data());
    return a;
  }
  T reduce_add() const noexcept { return traits::reduce(v); }

 private:
  template <std::size_t... K>
  VecBlock shift_dispatch(std::size_t k, std::index_sequence<K...>) const noexcept {
    VecBlock r = zero();
    ((k == K ? (r = shift_up<K>(), true) : false) || ...);
    return r;
  }
};

#endif  // __AVX512F__

// Fastest backend available for this width on the build target.
template <std::size_t W>
using native_isa = std::conditional_t<kHaveAvx512 && W == 16, Avx512Isa, GenericIsa>;

template <class T, std::size_t W>
using NativeVec = VecBlock<T, W, native_isa<W>>;

// Reference lane count (512-bit vectors of 32-bit elements).
inline constexpr std::size_t kReferenceWidth = 16;

// ---------------------------------------------------------------------------

// Probe hooks let tests observe the in-register scan's round structure.
struct NoProbe {
  constexpr void on_round(std::size_t /*shift*/) const noexcept {}
};

// Lane i <- lane i shifted up by k with zero fill.
template <class Vec>
Vec lane_shift_with_zero_fill(const Vec& v, std::size_t k) noexcept {
  return v.shift_up(k);
}

// In-register inclusive scan: log2(W) shift-and-add rounds with shifts
// 1, 2, 4, ..., W/2.
template <class Vec, class Probe>
Vec vector_inclusive_scan(Vec v, Probe&& probe) noexcept {
  constexpr std::size_t rounds = std::countr_zero(Vec::width);
  [&]<std::size_t... R>(std::index_sequence<R...>) {
    ((v = v + v.template shift_up<(std::size_t{1} << R)>(), probe.on_round(std::size_t{1} << R)),
     ...);
  }(std::make_index_sequence<rounds>{});
  return v;
}

template <class Vec>
Vec vector_inclusive_scan(Vec v) noexcept {
  return vector_inclusive_scan(v, NoProbe{});
}

}  // namespace psum::simd
