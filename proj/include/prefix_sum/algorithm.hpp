#pragma once

// Named algorithm variants and a single entry point that runs any of them.
//
//   Scalar      single-thread one-pass scalar scan
//   SIMD        single-thread one-pass horizontal SIMD
//   SIMD-V1/V2  single-thread two-pass vertical SIMD, scan in pass 1 / pass 2
//   SIMD-T      single-thread two-pass tree SIMD
//   Scalar1/2, SIMD1/2        multithreaded, scan in pass 1 / pass 2,
//                             m + 1 partitions
//   Scalar1-P ... SIMD2-P     the same with cache-sized partitioning

#include <algorithm>
#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>

#include "prefix_sum/engine.hpp"
#include "prefix_sum/plan.hpp"
#include "prefix_sum/scan_core.hpp"
#include "prefix_sum/simd_kernels.hpp"

namespace psum {

enum class Family { Scalar, Simd, SimdVertical1, SimdVertical2, SimdTree, MultiThread };

struct Algorithm {
  std::string_view label;
  Family family = Family::Scalar;
  Kernel kernel = Kernel::Scalar;
  PassOrder order = PassOrder::ScanIncrement;
  bool partitioned = false;

  bool multithreaded() const noexcept { return family == Family::MultiThread; }
  // Single-thread two-pass kernels accept an optional block length too.
  bool uses_block_len() const noexcept {
    return partitioned || family == Family::SimdVertical1 || family == Family::SimdVertical2 ||
           family == Family::SimdTree;
  }
};

inline constexpr std::array<Algorithm, 13> kAlgorithms{{
    {"Scalar", Family::Scalar, Kernel::Scalar, PassOrder::ScanIncrement, false},
    {"SIMD", Family::Simd, Kernel::Simd, PassOrder::ScanIncrement, false},
    {"SIMD-V1", Family::SimdVertical1, Kernel::Simd, PassOrder::ScanIncrement, false},
    {"SIMD-V2", Family::SimdVertical2, Kernel::Simd, PassOrder::AccumulateScan, false},
    {"SIMD-T", Family::SimdTree, Kernel::Simd, PassOrder::ScanIncrement, false},
    {"Scalar1", Family::MultiThread, Kernel::Scalar, PassOrder::ScanIncrement, false},
    {"Scalar2", Family::MultiThread, Kernel::Scalar, PassOrder::AccumulateScan, false},
    {"SIMD1", Family::MultiThread, Kernel::Simd, PassOrder::ScanIncrement, false},
    {"SIMD2", Family::MultiThread, Kernel::Simd, PassOrder::AccumulateScan, false},
    {"Scalar1-P", Family::MultiThread, Kernel::Scalar, PassOrder::ScanIncrement, true},
    {"Scalar2-P", Family::MultiThread, Kernel::Scalar, PassOrder::AccumulateScan, true},
    {"SIMD1-P", Family::MultiThread, Kernel::Simd, PassOrder::ScanIncrement, true},
    {"SIMD2-P", Family::MultiThread, Kernel::Simd, PassOrder::AccumulateScan, true},
}};

inline std::optional<Algorithm> parse_algorithm(std::string_view label) noexcept {
  for (const auto& a : kAlgorithms) {
    if (a.label == label) return a;
  }
  return std::nullopt;
}

inline std::string algorithm_labels() {
  std::string out;
  for (const auto& a : kAlgorithms) {
    if (!out.empty()) out += ", ";
    out += a.label;
  }
  return out;
}

struct RunParams {
  std::size_t threads = 1;
  std::size_t block_len = 0;
  Dilation dilation{};
  Affinity affinity = Affinity::None;
};

// Scans `in` into `out` (same storage for in-place) with the given variant
// and returns the grand total. Thread count is ignored by single-thread
// variants. Partitioned variants need a nonzero block length.
template <Element T>
T run_algorithm(const Algorithm& algo, std::span<const T> in, std::span<T> out,
                const RunParams& params, ScanEngine& engine) {
  if (in.size() != out.size()) throw std::invalid_argument("input and output lengths differ");
  using Vec = simd::NativeVec<T, simd::kReferenceWidth>;
  const std::size_t n = in.size();
  switch (algo.family) {
    case Family::Scalar:
      return scalar::inclusive_scan<T>(in.data(), out.data(), n, T{});
    case Family::Simd:
      return simd::horizontal_scan<Vec>(in.data(), out.data(), n, T{});
    case Family::SimdVertical1:
      return simd::blocked_vertical_scan<Vec>(in.data(), out.data(), n, T{},
                                              simd::VerticalOrder::ScanFirst, params.block_len);
    case Family::SimdVertical2:
      return simd::blocked_vertical_scan<Vec>(in.data(), out.data(), n, T{},
                                              simd::VerticalOrder::AccumulateFirst, params.block_len);
    case Family::SimdTree:
      return simd::blocked_tree_scan<Vec>(in.data(), out.data(), n, T{}, params.block_len);
    case Family::MultiThread:
      break;
  }
  if (algo.partitioned && params.block_len == 0) {
    throw std::invalid_argument(std::string(algo.label) + " needs a nonzero block length");
  }
  ScanRequest<T> req;
  req.input = in;
  req.output = out;
  req.kernel = algo.kernel;
  req.scheme = {algo.order, Partitioning::PlusOne};
  req.dilation = params.dilation;
  req.block_len = algo.partitioned ? params.block_len : 0;
  req.threads = params.threads;
  req.affinity = params.affinity;
  return engine.run(req);
}

}  // namespace psum
