#pragma once

// Sequential building blocks shared by every scan variant: the in-place /
// out-of-place inclusive scan (also the reference oracle), the read-only
// accumulate pass and the increment pass.

#include <cassert>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <span>
#include <type_traits>

namespace psum {

// 32-bit unsigned integers (wrapping addition) or 32-bit floats.
template <class T>
concept Element = std::same_as<T, std::uint32_t> || std::same_as<T, float>;

// Half-open element range [start, start + len) of some buffer.
struct Span {
  std::size_t start = 0;
  std::size_t len = 0;

  constexpr std::size_t end() const noexcept { return start + len; }
  constexpr bool empty() const noexcept { return len == 0; }

  friend constexpr bool operator==(const Span&, const Span&) = default;
};

namespace scalar {

// `in` and `out` may be the same pointer; each element is read before it is
// overwritten.
template <Element T>
T inclusive_scan(const T* in, T* out, std::size_t len, T offset) noexcept {
  T running = offset;
  for (std::size_t i = 0; i < len; ++i) {
    running += in[i];
    out[i] = running;
  }
  return running;
}

template <Element T>
T accumulate(const T* in, std::size_t len) noexcept {
  T total{};
  for (std::size_t i = 0; i < len; ++i) total += in[i];
  return total;
}

template <Element T>
void increment(T* data, std::size_t len, T offset) noexcept {
  for (std::size_t i = 0; i < len; ++i) data[i] += offset;
}

}  // namespace scalar

// Replaces data[span] with running totals seeded by `offset` and returns the
// last running total (span total plus offset).
template <Element T>
T sequential_inclusive_scan(std::span<T> data, Span span, T offset = T{}) noexcept {
  assert(span.end() <= data.size());
  T* p = data.data() + span.start;
  return scalar::inclusive_scan<T>(p, p, span.len, offset);
}

// Out-of-place form: reads in[span], writes out[span].
template <Element T>
T sequential_inclusive_scan(std::span<const T> in, std::span<T> out, Span span,
                            T offset = T{}) noexcept {
  assert(span.end() <= in.size() && span.end() <= out.size());
  return scalar::inclusive_scan<T>(in.data() + span.start, out.data() + span.start, span.len,
                                   offset);
}

// Total of data[span]. Never writes the buffer.
template <class E>
  requires Element<std::remove_const_t<E>>
std::remove_const_t<E> sequential_accumulate(std::span<E> data, Span span) noexcept {
  assert(span.end() <= data.size());
  return scalar::accumulate<std::remove_const_t<E>>(data.data() + span.start, span.len);
}

template <Element T>
void sequential_increment(std::span<T> data, Span span, T offset) noexcept {
  assert(span.end() <= data.size());
  scalar::increment<T>(data.data() + span.start, span.len, offset);
}

// Turns an inclusive scan into an exclusive one in place: shifts right by one
// and writes `identity` at index 0. Returns the dropped inclusive total, or
// `identity` for an empty buffer.
template <Element T>
T exclusive_from_inclusive(std::span<T> data, T identity = T{}) noexcept {
  if (data.empty()) return identity;
  const T total = data.back();
  for (std::size_t i = data.size() - 1; i > 0; --i) data[i] = data[i - 1];
  data[0] = identity;
  return total;
}

}  // namespace psum
