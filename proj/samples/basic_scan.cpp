// Scans a small array several ways and prints the results.

#include <cstdint>
#include <cstdio>
#include <numeric>
#include <vector>

#include "prefix_sum.hpp"

int main() {
  std::vector<std::uint32_t> data(40);
  std::iota(data.begin(), data.end(), 1u);

  // Sequential, in place.
  std::vector<std::uint32_t> seq = data;
  psum::sequential_inclusive_scan<std::uint32_t>(seq, {0, seq.size()});

  // Horizontal SIMD, out of place.
  using Vec = psum::simd::NativeVec<std::uint32_t, 16>;
  std::vector<std::uint32_t> simd(data.size());
  psum::simd::horizontal_scan<Vec>(data.data(), simd.data(), data.size(), 0u);

  // Four threads, partitioned pipeline.
  std::vector<std::uint32_t> mt = data;
  psum::ScanEngine engine;
  auto req = psum::ScanRequest<std::uint32_t>::in_place(mt);
  req.threads = 4;
  req.block_len = 16;
  req.scheme = psum::kAccumulateScanPlusOne;
  const std::uint32_t total = engine.run(req);

  for (std::size_t i = 0; i < data.size(); ++i) {
    std::printf("%2zu: %4u %4u %4u\n", i, seq[i], simd[i], mt[i]);
  }
  std::printf("total %u in %zu iterations\n", total, engine.last_stats().iterations);

  // Exclusive scan from the inclusive one.
  psum::exclusive_from_inclusive<std::uint32_t>(mt);
  std::printf("exclusive[0..3] = %u %u %u %u\n", mt[0], mt[1], mt[2], mt[3]);
  return seq == simd && seq.back() == total ? 0 : 1;
}
