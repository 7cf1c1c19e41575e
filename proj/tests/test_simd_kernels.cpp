#include <gtest/gtest.h>

#include <bit>
#include <cstdint>
#include <numeric>
#include <random>
#include <stdexcept>
#include <vector>

#include "naive_oracle.hpp"
#include "prefix_sum/simd.hpp"
#include "prefix_sum/simd_kernels.hpp"

namespace simd = psum::simd;
using u32 = std::uint32_t;

namespace {

// Float inputs are small integers so every summation order is exact and the
// float kernels can be compared bit for bit.
template <class T>
std::vector<T> random_input(std::size_t n, std::uint32_t seed) {
  std::mt19937 gen(seed);
  std::vector<T> v(n);
  for (auto& x : v) {
    if constexpr (std::is_same_v<T, float>) {
      x = static_cast<float>(gen() % 16);
    } else {
      x = static_cast<u32>(gen());
    }
  }
  return v;
}

template <class Vec>
Vec iota_vec() {
  using T = typename Vec::value_type;
  std::array<T, Vec::width> a{};
  for (std::size_t i = 0; i < Vec::width; ++i) a[i] = static_cast<T>(i + 1);
  return Vec::from_array(a);
}

struct RoundCounter {
  std::vector<std::size_t> shifts;
  void on_round(std::size_t s) { shifts.push_back(s); }
};

std::vector<std::size_t> random_lengths(std::size_t count, std::size_t max, std::uint32_t seed) {
  std::mt19937 gen(seed);
  std::uniform_int_distribution<std::size_t> dist(0, max);
  std::vector<std::size_t> out(count);
  for (auto& x : out) x = dist(gen);
  return out;
}

}  // namespace

template <class Vec>
class KernelTest : public ::testing::Test {
 protected:
  using T = typename Vec::value_type;
  static constexpr std::size_t W = Vec::width;
};

using VecTypes = ::testing::Types<
    simd::VecBlock<u32, 4>, simd::VecBlock<u32, 8>, simd::VecBlock<u32, 16>,
    simd::VecBlock<float, 4>, simd::VecBlock<float, 8>, simd::VecBlock<float, 16>
#if defined(__AVX512F__)
    , simd::VecBlock<u32, 16, simd::Avx512Isa>, simd::VecBlock<float, 16, simd::Avx512Isa>
#endif
    >;
TYPED_TEST_SUITE(KernelTest, VecTypes);

TYPED_TEST(KernelTest, LaneShiftFillsWithZeros) {
  using Vec = TypeParam;
  using T = typename TestFixture::T;
  constexpr std::size_t W = TestFixture::W;
  const Vec v = iota_vec<Vec>();
  EXPECT_EQ(simd::lane_shift_with_zero_fill(v, 0).to_array(), v.to_array());
  EXPECT_EQ(simd::lane_shift_with_zero_fill(v, W).to_array(), Vec::zero().to_array());
  for (std::size_t k = 0; k <= W; ++k) {
    const auto r = simd::lane_shift_with_zero_fill(v, k).to_array();
    for (std::size_t i = 0; i < W; ++i) {
      EXPECT_EQ(r[i], i >= k ? static_cast<T>(i - k + 1) : T{}) << "k=" << k << " lane " << i;
    }
  }
}

TYPED_TEST(KernelTest, InRegisterScanOfOnes) {
  using Vec = TypeParam;
  using T = typename TestFixture::T;
  const auto r = simd::vector_inclusive_scan(Vec::broadcast(T{1})).to_array();
  for (std::size_t i = 0; i < TestFixture::W; ++i) EXPECT_EQ(r[i], static_cast<T>(i + 1));
}

TYPED_TEST(KernelTest, InRegisterScanUsesLogWRounds) {
  using Vec = TypeParam;
  constexpr std::size_t W = TestFixture::W;
  RoundCounter probe;
  simd::vector_inclusive_scan(iota_vec<Vec>(), probe);
  ASSERT_EQ(probe.shifts.size(), static_cast<std::size_t>(std::countr_zero(W)));
  for (std::size_t r = 0; r < probe.shifts.size(); ++r) EXPECT_EQ(probe.shifts[r], std::size_t{1} << r);
}

TYPED_TEST(KernelTest, InRegisterScanMatchesOracle) {
  using Vec = TypeParam;
  using T = typename TestFixture::T;
  constexpr std::size_t W = TestFixture::W;
  for (std::uint32_t seed = 0; seed < 50; ++seed) {
    const auto in = random_input<T>(W, seed);
    std::array<T, W> a{};
    std::copy(in.begin(), in.end(), a.begin());
    const auto r = simd::vector_inclusive_scan(Vec::from_array(a)).to_array();
    const auto expect = oracle::inclusive(in);
    EXPECT_TRUE(std::equal(r.begin(), r.end(), expect.begin())) << "seed " << seed;
  }
}

TYPED_TEST(KernelTest, HorizontalScanExamples) {
  using Vec = TypeParam;
  using T = typename TestFixture::T;
  constexpr std::size_t W = TestFixture::W;
  std::vector<T> ones(2 * W, T{1});
  EXPECT_EQ(simd::horizontal_scan<Vec>(ones.data(), ones.data(), ones.size(), T{}), static_cast<T>(2 * W));
  for (std::size_t i = 0; i < ones.size(); ++i) EXPECT_EQ(ones[i], static_cast<T>(i + 1));

  // Shorter than one vector: scalar tail only.
  auto tail = random_input<T>(W - 1, 3);
  const auto expect = oracle::inclusive(tail, T{5});
  simd::horizontal_scan<Vec>(tail.data(), tail.data(), tail.size(), T{5});
  EXPECT_EQ(tail, expect);
}

TYPED_TEST(KernelTest, HorizontalCarryChainTracksOracle) {
  using Vec = TypeParam;
  using T = typename TestFixture::T;
  constexpr std::size_t W = TestFixture::W;
  const auto in = random_input<T>(20 * W, 17);
  const auto expect = oracle::inclusive(in);
  std::vector<T> out(in.size());
  for (std::size_t b = 0; b < 20; ++b) {
    const T carry = simd::horizontal_scan<Vec>(in.data(), out.data(), (b + 1) * W, T{});
    EXPECT_EQ(carry, expect[(b + 1) * W - 1]) << "block " << b;
  }
}

TYPED_TEST(KernelTest, AccumulateAndIncrement) {
  using Vec = TypeParam;
  using T = typename TestFixture::T;
  for (std::size_t n = 0; n <= 4 * TestFixture::W + 3; ++n) {
    auto in = random_input<T>(n, static_cast<std::uint32_t>(n));
    EXPECT_EQ(simd::vector_accumulate<Vec>(in.data(), n), oracle::total(in)) << n;
    auto expect = in;
    for (auto& x : expect) x += T{7};
    simd::vector_increment<Vec>(in.data(), n, T{7});
    EXPECT_EQ(in, expect) << n;
  }
}

TYPED_TEST(KernelTest, AllKernelsMatchOracleOnShortLengths) {
  using Vec = TypeParam;
  using T = typename TestFixture::T;
  constexpr std::size_t W = TestFixture::W;
  for (std::size_t n = 0; n <= 4 * W; ++n) {
    const auto in = random_input<T>(n, static_cast<std::uint32_t>(100 + n));
    const auto expect = oracle::inclusive(in, T{3});
    std::vector<T> out(n);
    EXPECT_EQ(simd::horizontal_scan<Vec>(in.data(), out.data(), n, T{3}), n ? expect.back() : T{3});
    EXPECT_EQ(out, expect) << "horizontal n=" << n;
    for (auto order : {simd::VerticalOrder::ScanFirst, simd::VerticalOrder::AccumulateFirst}) {
      std::fill(out.begin(), out.end(), T{});
      simd::blocked_vertical_scan<Vec>(in.data(), out.data(), n, T{3}, order);
      EXPECT_EQ(out, expect) << "vertical n=" << n;
    }
    std::fill(out.begin(), out.end(), T{});
    simd::blocked_tree_scan<Vec>(in.data(), out.data(), n, T{3});
    EXPECT_EQ(out, expect) << "tree n=" << n;
  }
}

TYPED_TEST(KernelTest, AllKernelsMatchOracleOnRandomLengths) {
  using Vec = TypeParam;
  using T = typename TestFixture::T;
  // Float inputs stay below 16, so prefix sums of up to 10^6 of them are exact.
  for (const std::size_t n : random_lengths(100, 1'000'000, 29)) {
    const auto in = random_input<T>(n, static_cast<std::uint32_t>(n));
    const auto expect = oracle::inclusive(in);
    std::vector<T> out(n);
    simd::horizontal_scan<Vec>(in.data(), out.data(), n, T{});
    ASSERT_EQ(out, expect) << "horizontal n=" << n;
    const std::size_t block = 64 * TestFixture::W;
    simd::blocked_vertical_scan<Vec>(in.data(), out.data(), n, T{}, simd::VerticalOrder::ScanFirst, block);
    ASSERT_EQ(out, expect) << "vertical-1 n=" << n;
    simd::blocked_vertical_scan<Vec>(in.data(), out.data(), n, T{}, simd::VerticalOrder::AccumulateFirst);
    ASSERT_EQ(out, expect) << "vertical-2 n=" << n;
    auto inplace = in;
    simd::blocked_tree_scan<Vec>(inplace.data(), inplace.data(), n, T{}, n % 2 ? 0 : block);
    ASSERT_EQ(inplace, expect) << "tree n=" << n;
  }
}

TYPED_TEST(KernelTest, VerticalPassOneTotalsArePerChunkTotals) {
  using Vec = TypeParam;
  using T = typename TestFixture::T;
  constexpr std::size_t W = TestFixture::W;
  for (std::uint32_t seed = 0; seed < 20; ++seed) {
    const std::size_t k = 1 + seed * 7;
    const auto in = random_input<T>(W * k, seed);
    auto data = in;
    const T carry = static_cast<T>(seed);
    const auto totals = simd::vertical_scan_pass1_scan<Vec>(std::span<T>(data), {0, W * k}, carry);
    const auto acc_totals = simd::vertical_scan_pass1_accumulate<Vec>(std::span<const T>(in), {0, W * k});
    for (std::size_t c = 0; c < W; ++c) {
      const std::vector<T> chunk(in.begin() + c * k, in.begin() + (c + 1) * k);
      const T expect_total = oracle::total(chunk);
      EXPECT_EQ(acc_totals[c], expect_total);
      EXPECT_EQ(totals[c], c == 0 ? carry + expect_total : expect_total);
      const auto chunk_scan = oracle::inclusive(chunk, c == 0 ? carry : T{});
      EXPECT_TRUE(std::equal(chunk_scan.begin(), chunk_scan.end(), data.begin() + c * k));
    }
  }
}

TYPED_TEST(KernelTest, VerticalTwoPassCompositions) {
  using Vec = TypeParam;
  using T = typename TestFixture::T;
  constexpr std::size_t W = TestFixture::W;
  const std::size_t k = 37;
  const auto in = random_input<T>(W * k + 10, 5);
  const psum::Span region{5, W * k};
  std::vector<T> window(in.begin() + 5, in.begin() + 5 + W * k);
  const auto expect = oracle::inclusive(window);

  // Scan first, then increment by the exclusive scan of the totals.
  auto a = in;
  const auto totals = simd::vertical_scan_pass1_scan<Vec>(std::span<T>(a), region, T{});
  std::array<T, W> offsets{};
  for (std::size_t c = 1; c < W; ++c) offsets[c] = offsets[c - 1] + totals[c - 1];
  simd::vertical_scan_pass2_increment<Vec>(std::span<T>(a), region, offsets);
  EXPECT_TRUE(std::equal(expect.begin(), expect.end(), a.begin() + 5));
  EXPECT_TRUE(std::equal(in.begin(), in.begin() + 5, a.begin()));
  EXPECT_TRUE(std::equal(in.begin() + 5 + W * k, in.end(), a.begin() + 5 + W * k));

  // Accumulate first, then seeded scan.
  auto b = in;
  const auto acc = simd::vertical_scan_pass1_accumulate<Vec>(std::span<const T>(b), region);
  EXPECT_EQ(b, in);
  std::array<T, W> seeds{};
  for (std::size_t c = 1; c < W; ++c) seeds[c] = seeds[c - 1] + acc[c - 1];
  simd::vertical_scan_pass2_scan<Vec>(std::span<T>(b), region, seeds);
  EXPECT_TRUE(std::equal(expect.begin(), expect.end(), b.begin() + 5));

  // Zero offsets leave the data alone.
  auto c = in;
  simd::vertical_scan_pass2_increment<Vec>(std::span<T>(c), region, std::array<T, W>{});
  EXPECT_EQ(c, in);
}

TYPED_TEST(KernelTest, TreeScanPowerOfTwoLengths) {
  using Vec = TypeParam;
  using T = typename TestFixture::T;
  constexpr std::size_t W = TestFixture::W;
  for (std::size_t len = W; len <= (W << 12); len *= 2) {
    auto data = random_input<T>(len, static_cast<std::uint32_t>(len));
    const auto expect = oracle::inclusive(data, T{2});
    const T root = simd::tree_scan<Vec>(data.data(), len, T{2});
    EXPECT_EQ(root, expect.back()) << len;
    EXPECT_EQ(data, expect) << len;
  }
}

TYPED_TEST(KernelTest, TreeRootEqualsBufferTotal) {
  using Vec = TypeParam;
  using T = typename TestFixture::T;
  auto data = random_input<T>(TestFixture::W << 9, 77);
  const T total = oracle::total(data);
  EXPECT_EQ(simd::tree_scan<Vec>(std::span<T>(data), {0, data.size()}, T{}), total);
}

TYPED_TEST(KernelTest, TreeScanRejectsOtherLengths) {
  using Vec = TypeParam;
  using T = typename TestFixture::T;
  constexpr std::size_t W = TestFixture::W;
  std::vector<T> data(8 * W);
  for (std::size_t len : {std::size_t{0}, W - 1, W + 1, 3 * W, 6 * W}) {
    EXPECT_THROW(simd::tree_scan<Vec>(data.data(), len, T{}), std::invalid_argument) << len;
  }
}

#if defined(__AVX512F__)
TEST(Avx512Backend, AgreesWithGenericBackend) {
  using Native = simd::VecBlock<u32, 16, simd::Avx512Isa>;
  using Generic = simd::VecBlock<u32, 16>;
  const auto in = random_input<u32>(100003, 4);
  std::vector<u32> a(in.size()), b(in.size());
  simd::horizontal_scan<Native>(in.data(), a.data(), in.size(), 0u);
  simd::horizontal_scan<Generic>(in.data(), b.data(), in.size(), 0u);
  EXPECT_EQ(a, b);
  const auto idx = Native::index_type::strided(3, 1);
  const auto g = Native::gather(in.data(), idx).to_array();
  for (std::size_t i = 0; i < 16; ++i) EXPECT_EQ(g[i], in[1 + 3 * i]);
  EXPECT_EQ(Native::load(in.data()).reduce_add(), oracle::total(std::vector<u32>(in.begin(), in.begin() + 16)));
  EXPECT_EQ(Native::load(in.data()).broadcast_last().to_array(), Generic::broadcast(in[15]).to_array());
}
#endif

// Hand-checked two-lane examples.

TEST(VerticalTwoLane, PassOneScan) {
  using V2 = simd::VecBlock<u32, 2>;
  std::vector<u32> data{1, 2, 3, 4, 5, 6, 7, 8};
  const auto totals = simd::vertical_scan_pass1_scan<V2>(std::span<u32>(data), {0, 8}, 0u);
  EXPECT_EQ(data, (std::vector<u32>{1, 3, 6, 10, 5, 11, 18, 26}));
  EXPECT_EQ(totals, (std::array<u32, 2>{10, 26}));

  simd::vertical_scan_pass2_increment<V2>(std::span<u32>(data), {0, 8}, {0, 10});
  EXPECT_EQ(data, (std::vector<u32>{1, 3, 6, 10, 15, 21, 28, 36}));
}

TEST(VerticalTwoLane, PassOneAccumulate) {
  using V2 = simd::VecBlock<u32, 2>;
  const std::vector<u32> data{1, 2, 3, 4, 5, 6, 7, 8};
  EXPECT_EQ(simd::vertical_scan_pass1_accumulate<V2>(std::span<const u32>(data), {0, 8}),
            (std::array<u32, 2>{10, 26}));
  const std::vector<u32> zeros(8, 0);
  EXPECT_EQ(simd::vertical_scan_pass1_accumulate<V2>(std::span<const u32>(zeros), {0, 8}),
            (std::array<u32, 2>{0, 0}));
}

TEST(VerticalTwoLane, ZerosAndSingleStep) {
  using V2 = simd::VecBlock<u32, 2>;
  std::vector<u32> zeros(8, 0);
  EXPECT_EQ(simd::vertical_scan_pass1_scan<V2>(std::span<u32>(zeros), {0, 8}, 0u), (std::array<u32, 2>{0, 0}));
  EXPECT_EQ(zeros, std::vector<u32>(8, 0));

  // k = 1: only the carry moves anything.
  std::vector<u32> pair{3, 4};
  EXPECT_EQ(simd::vertical_scan_pass1_scan<V2>(std::span<u32>(pair), {0, 2}, 5u), (std::array<u32, 2>{8, 4}));
  EXPECT_EQ(pair, (std::vector<u32>{8, 4}));
}

TEST(TreeScan, EightOnes) {
  using V4 = simd::VecBlock<u32, 4>;
  std::vector<u32> ones(8, 1);
  EXPECT_EQ(simd::tree_scan<V4>(ones.data(), 8, 0u), 8u);
  EXPECT_EQ(ones, (std::vector<u32>{1, 2, 3, 4, 5, 6, 7, 8}));
}

TEST(TreeScan, DegenerateInputs) {
  using V16 = simd::NativeVec<u32, 16>;
  std::vector<u32> one{42};
  EXPECT_EQ(simd::blocked_tree_scan<V16>(one.data(), one.data(), 1, 0u), 42u);
  EXPECT_EQ(one[0], 42u);

  auto block = oracle::random_u32(16, 9);
  const auto expect = oracle::inclusive(block);
  simd::tree_scan<V16>(block.data(), 16, 0u);
  EXPECT_EQ(block, expect);
}

TEST(HorizontalScan, MillionElementsBitExact) {
  using V16 = simd::NativeVec<u32, 16>;
  const auto in = oracle::random_u32(1'000'000, 1);
  std::vector<u32> out(in.size());
  simd::horizontal_scan<V16>(in.data(), out.data(), in.size(), 0u);
  EXPECT_EQ(out, oracle::inclusive(in));
}

TEST(TreeScan, TwoToTheSixteenBitExact) {
  using V16 = simd::NativeVec<u32, 16>;
  auto data = oracle::random_u32(1 << 16, 2);
  const auto expect = oracle::inclusive(data);
  simd::tree_scan<V16>(data.data(), data.size(), 0u);
  EXPECT_EQ(data, expect);
}
