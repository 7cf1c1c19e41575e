#pragma once

// Measurement harness: runs one configuration (a "case") with a verified
// warm-up and N timed repetitions, or sweeps one parameter over a grid.
// Records serialise to a fixed-column CSV.

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <iostream>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "prefix_sum/algorithm.hpp"
#include "prefix_sum/engine.hpp"
#include "prefix_sum/scan_core.hpp"

namespace psum::bench {

enum class ElemType { I32, F32 };

inline std::string_view to_string(ElemType e) noexcept { return e == ElemType::I32 ? "i32" : "f32"; }

inline std::optional<ElemType> parse_elem_type(std::string_view s) noexcept {
  if (s == "i32") return ElemType::I32;
  if (s == "f32") return ElemType::F32;
  return std::nullopt;
}

template <Element T>
inline constexpr ElemType elem_type_of = std::same_as<T, float> ? ElemType::F32 : ElemType::I32;

// Deterministic input: uniform 32-bit words, or floats uniform in [0, 1)
// built from the top 24 bits of each word.
template <Element T>
std::vector<T> make_input(std::size_t n, std::uint64_t seed) {
  std::mt19937 gen(static_cast<std::mt19937::result_type>(seed ^ (seed >> 32)));
  std::vector<T> v(n);
  for (auto& x : v) {
    const std::uint32_t word = gen();
    if constexpr (std::same_as<T, float>) {
      x = static_cast<float>(word >> 8) * 0x1p-24f;
    } else {
      x = word;
    }
  }
  return v;
}

// ---------------------------------------------------------------------------
// Checksums

namespace detail {

inline std::string hex64(std::uint64_t x) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, x >>= 4) s[static_cast<std::size_t>(i)] = digits[x & 0xf];
  return s;
}

inline std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

inline std::string format_scientific(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x, std::chars_format::scientific, 10);
  return std::string(buf, res.ptr);
}

}  // namespace detail

// i32: FNV-1a over the little-endian bytes, as 16 hex digits.
// f32: sum of the outputs in double precision, scientific notation.
template <Element T>
std::string checksum(std::span<const T> data) {
  if constexpr (std::same_as<T, float>) {
    double sum = 0.0;
    for (float x : data) sum += x;
    return detail::format_scientific(sum);
  } else {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (std::uint32_t x : data) {
      for (int b = 0; b < 4; ++b, x >>= 8) {
        h ^= x & 0xffu;
        h *= 0x100000001b3ull;
      }
    }
    return detail::hex64(h);
  }
}

// ---------------------------------------------------------------------------
// Reference

struct Verification {
  bool ok = true;
  double max_rel_error = 0.0;
  double tolerance = 0.0;
  std::size_t first_bad = 0;
  std::string message;
};

// Relative tolerance floor for float outputs.
inline constexpr double kFloatRelTolerance = 1e-5;

// Expected result of scanning one input, streamed from the input itself.
//
// Integers must match the sequential scan exactly. Floats are compared with
// a double-precision running sum: any order of float additions drifts from
// the exact prefix sums, and the sequential float scan drifts too (by more
// than 1e-5 relative once n reaches ~1e5 with inputs in [0, 1)). A float
// output passes if its worst relative error is within 1e-5 plus twice the
// sequential float scan's own worst error.
template <Element T>
class Reference {
 public:
  explicit Reference(std::span<const T> input) : input_(input) {
    if constexpr (std::same_as<T, float>) {
      double exact = 0.0, exact_sum = 0.0, oracle_sum = 0.0;
      float seq = 0.0f;
      for (float x : input_) {
        exact += x;
        seq += x;
        exact_sum += exact;
        oracle_sum += seq;
        oracle_error_ = std::max(oracle_error_, rel_error(seq, exact));
      }
      exact_checksum_ = exact_sum;
      oracle_checksum_ = detail::format_scientific(oracle_sum);
      tolerance_ = kFloatRelTolerance + 2.0 * oracle_error_;
    } else {
      std::vector<T> scanned(input_.begin(), input_.end());
      sequential_inclusive_scan<T>(scanned, {0, scanned.size()});
      oracle_checksum_ = checksum<T>(scanned);
      total_ = scanned.empty() ? T{} : scanned.back();
    }
  }

  Verification check(std::span<const T> output) const {
    Verification v;
    if (output.size() != input_.size()) {
      v.ok = false;
      v.message = "output length differs from input length";
      return v;
    }
    v.tolerance = tolerance_;
    if constexpr (std::same_as<T, float>) {
      double exact = 0.0;
      for (std::size_t i = 0; i < input_.size(); ++i) {
        exact += input_[i];
        const double err = rel_error(output[i], exact);
        if (err > v.max_rel_error) v.max_rel_error = err;
        if (!(err <= tolerance_) && v.ok) {
          v.ok = false;
          v.first_bad = i;
        }
      }
      if (!v.ok) {
        v.message = "relative error " + detail::format_double(v.max_rel_error) + " exceeds " +
                    detail::format_double(tolerance_) + " (first at index " +
                    std::to_string(v.first_bad) + ")";
      }
    } else {
      T running{};
      for (std::size_t i = 0; i < input_.size(); ++i) {
        running += input_[i];
        if (output[i] != running) {
          v.ok = false;
          v.first_bad = i;
          v.message = "mismatch at index " + std::to_string(i) + ": expected " +
                      std::to_string(running) + ", got " + std::to_string(output[i]);
          break;
        }
      }
    }
    return v;
  }

  bool checksum_matches(std::string_view cs) const {
    if constexpr (std::same_as<T, float>) {
      double value = 0.0;
      const auto res = std::from_chars(cs.data(), cs.data() + cs.size(), value);
      if (res.ec != std::errc{} || res.ptr != cs.data() + cs.size()) return false;
      return std::abs(value - exact_checksum_) <= tolerance_ * std::abs(exact_checksum_);
    } else {
      return cs == oracle_checksum_;
    }
  }

  const std::string& oracle_checksum() const noexcept { return oracle_checksum_; }
  double oracle_error() const noexcept { return oracle_error_; }
  double tolerance() const noexcept { return tolerance_; }

 private:
  static double rel_error(double got, double exact) noexcept {
    const double diff = std::abs(got - exact);
    if (diff == 0.0) return 0.0;
    const double scale = std::abs(exact);
    return scale == 0.0 ? std::numeric_limits<double>::infinity() : diff / scale;
  }

  std::span<const T> input_;
  std::string oracle_checksum_;
  double exact_checksum_ = 0.0;
  double oracle_error_ = 0.0;
  double tolerance_ = 0.0;
  T total_{};
};

// ---------------------------------------------------------------------------
// Cases

class VerificationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::size_t kMinReps = 5;

struct BenchConfig {
  std::string algo = "SIMD";
  ElemType elem = ElemType::F32;
  std::size_t n = 0;
  std::size_t threads = 1;
  std::size_t block_len = 0;
  double d0 = 1.0;
  double d_last = 1.0;
  bool out_of_place = false;
  std::size_t reps = kMinReps;
  std::uint64_t seed = 42;
  Affinity affinity = Affinity::None;
  // Runs inside the timed region of repetition r. Harness self-tests only.
  std::function<void(std::size_t)> rep_hook;
};

struct BenchRecord {
  std::string algo;
  std::string elem_type;
  std::size_t n = 0;
  std::size_t threads = 0;
  std::size_t block_len = 0;
  double d0 = 1.0;
  double d_last = 1.0;
  bool out_of_place = false;
  std::size_t reps = 0;
  std::int64_t median_ns = 0;
  double throughput_eps = 0.0;
  std::string checksum;
  std::vector<std::int64_t> rep_ns;  // not serialised
};

// Median; the mean of the two middle values for even counts.
inline std::int64_t median_ns(std::vector<std::int64_t> samples) {
  if (samples.empty()) return 0;
  const std::size_t mid = samples.size() / 2;
  std::nth_element(samples.begin(), samples.begin() + static_cast<std::ptrdiff_t>(mid), samples.end());
  const std::int64_t hi = samples[mid];
  if (samples.size() % 2 == 1) return hi;
  const std::int64_t lo = *std::max_element(samples.begin(), samples.begin() + static_cast<std::ptrdiff_t>(mid));
  return lo + (hi - lo) / 2;
}

inline Algorithm resolve_algorithm(const BenchConfig& cfg) {
  const auto algo = parse_algorithm(cfg.algo);
  if (!algo) {
    throw std::invalid_argument("unknown algorithm '" + cfg.algo + "' (expected one of: " +
                                algorithm_labels() + ")");
  }
  if (cfg.reps < kMinReps) {
    throw std::invalid_argument("reps must be at least " + std::to_string(kMinReps));
  }
  if (cfg.threads == 0) throw std::invalid_argument("threads must be at least 1");
  if (algo->partitioned && cfg.block_len == 0) {
    throw std::invalid_argument(cfg.algo + " needs a nonzero block length");
  }
  return *algo;
}

template <Element T>
BenchRecord run_case_typed(const BenchConfig& cfg) {
  const Algorithm algo = resolve_algorithm(cfg);
  const std::vector<T> input = make_input<T>(cfg.n, cfg.seed);
  const Reference<T> reference(input);

  RunParams params;
  params.threads = algo.multithreaded() ? cfg.threads : 1;
  params.block_len = algo.uses_block_len() ? cfg.block_len : 0;
  params.dilation = {cfg.d0, cfg.d_last};
  params.affinity = cfg.affinity;

  std::vector<T> work(cfg.n);
  std::vector<T> output(cfg.out_of_place ? cfg.n : 0);
  ScanEngine engine;
  auto run_once = [&]() -> std::span<const T> {
    if (cfg.out_of_place) {
      run_algorithm<T>(algo, input, output, params, engine);
      return output;
    }
    run_algorithm<T>(algo, work, work, params, engine);
    return work;
  };
  auto reset = [&] {
    if (!cfg.out_of_place) std::copy(input.begin(), input.end(), work.begin());
  };

  // Warm-up doubles as the one verified run.
  reset();
  const Verification v = reference.check(run_once());
  if (!v.ok) throw VerificationError(cfg.algo + ": " + v.message);

  BenchRecord rec;
  rec.algo = cfg.algo;
  rec.elem_type = std::string(to_string(elem_type_of<T>));
  rec.n = cfg.n;
  rec.threads = params.threads;
  rec.block_len = params.block_len;
  rec.d0 = cfg.d0;
  rec.d_last = cfg.d_last;
  rec.out_of_place = cfg.out_of_place;
  rec.reps = cfg.reps;

  for (std::size_t r = 0; r < cfg.reps; ++r) {
    reset();
    const auto t0 = std::chrono::steady_clock::now();
    const std::span<const T> out = run_once();
    if (cfg.rep_hook) cfg.rep_hook(r);
    const auto t1 = std::chrono::steady_clock::now();
    rec.rep_ns.push_back(std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count());
    std::string cs = checksum<T>(out);
    if (!reference.checksum_matches(cs)) {
      throw VerificationError(cfg.algo + ": checksum " + cs + " of repetition " + std::to_string(r) +
                              " does not match the reference");
    }
    rec.checksum = std::move(cs);
  }
  rec.median_ns = median_ns(rec.rep_ns);
  if (cfg.n == 0 || rec.median_ns <= 0) {
    if (cfg.n == 0) std::clog << "bench: empty input, throughput reported as 0\n";
    rec.throughput_eps = 0.0;
  } else {
    rec.throughput_eps = static_cast<double>(cfg.n) / (static_cast<double>(rec.median_ns) * 1e-9);
  }
  return rec;
}

inline BenchRecord run_case(const BenchConfig& cfg) {
  return cfg.elem == ElemType::I32 ? run_case_typed<std::uint32_t>(cfg) : run_case_typed<float>(cfg);
}

// ---------------------------------------------------------------------------
// Sweeps

enum class SweepDim { Threads, BlockLen, Dilation };

inline std::optional<SweepDim> parse_sweep_dim(std::string_view s) noexcept {
  if (s == "threads") return SweepDim::Threads;
  if (s == "block-len" || s == "block_len") return SweepDim::BlockLen;
  if (s == "dilation" || s == "d0") return SweepDim::Dilation;
  return std::nullopt;
}

struct SweepFailure {
  double point = 0.0;
  std::string message;
};

struct SweepResult {
  std::vector<BenchRecord> records;
  std::vector<SweepFailure> failures;
};

// One case per grid point, all with the base config's seed. Dilation sweeps
// vary d0. Failing points are collected and the sweep carries on.
inline SweepResult sweep(SweepDim dim, std::span<const double> grid, const BenchConfig& base) {
  if (grid.empty()) throw std::invalid_argument("sweep grid is empty");
  SweepResult result;
  for (const double point : grid) {
    BenchConfig cfg = base;
    switch (dim) {
      case SweepDim::Threads: cfg.threads = static_cast<std::size_t>(point); break;
      case SweepDim::BlockLen: cfg.block_len = static_cast<std::size_t>(point); break;
      case SweepDim::Dilation: cfg.d0 = point; break;
    }
    try {
      result.records.push_back(run_case(cfg));
    } catch (const std::exception& e) {
      result.failures.push_back({point, e.what()});
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// CSV

inline constexpr std::string_view kCsvHeader =
    "algo,elem_type,n,threads,block_len,d0,d_last,out_of_place,reps,median_ns,throughput_eps,checksum";

inline std::string to_csv_row(const BenchRecord& r) {
  std::string row;
  row += r.algo;
  row += ',';
  row += r.elem_type;
  row += ',' + std::to_string(r.n);
  row += ',' + std::to_string(r.threads);
  row += ',' + std::to_string(r.block_len);
  row += ',' + detail::format_double(r.d0);
  row += ',' + detail::format_double(r.d_last);
  row += r.out_of_place ? ",1" : ",0";
  row += ',' + std::to_string(r.reps);
  row += ',' + std::to_string(r.median_ns);
  row += ',' + detail::format_double(r.throughput_eps);
  row += ',';
  row += r.checksum;
  return row;
}

inline void write_csv(std::ostream& os, std::span<const BenchRecord> records, bool header = true) {
  if (header) os << kCsvHeader << '\n';
  for (const auto& r : records) os << to_csv_row(r) << '\n';
}

namespace detail {

template <class Num>
Num parse_field(std::string_view s, std::string_view column) {
  Num value{};
  const auto res = std::from_chars(s.data(), s.data() + s.size(), value);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
    throw std::runtime_error("csv: bad value '" + std::string(s) + "' in column " + std::string(column));
  }
  return value;
}

inline std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t next = line.find(sep, pos);
    out.push_back(line.substr(pos, next == std::string_view::npos ? std::string_view::npos : next - pos));
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }
  return out;
}

}  // namespace detail

// Parses CSV written by write_csv. Throws std::runtime_error if the header or
// any row deviates from the column schema.
inline std::vector<BenchRecord> parse_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != kCsvHeader) {
    throw std::runtime_error("csv: header does not match the record schema");
  }
  std::vector<BenchRecord> out;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto f = detail::split(line, ',');
    if (f.size() != 12) throw std::runtime_error("csv: expected 12 columns, got " + std::to_string(f.size()));
    BenchRecord r;
    r.algo = std::string(f[0]);
    if (!parse_algorithm(r.algo)) throw std::runtime_error("csv: unknown algorithm " + r.algo);
    r.elem_type = std::string(f[1]);
    if (!parse_elem_type(r.elem_type)) throw std::runtime_error("csv: unknown elem_type " + r.elem_type);
    r.n = detail::parse_field<std::size_t>(f[2], "n");
    r.threads = detail::parse_field<std::size_t>(f[3], "threads");
    r.block_len = detail::parse_field<std::size_t>(f[4], "block_len");
    r.d0 = detail::parse_field<double>(f[5], "d0");
    r.d_last = detail::parse_field<double>(f[6], "d_last");
    if (f[7] != "0" && f[7] != "1") throw std::runtime_error("csv: out_of_place must be 0 or 1");
    r.out_of_place = f[7] == "1";
    r.reps = detail::parse_field<std::size_t>(f[8], "reps");
    r.median_ns = detail::parse_field<std::int64_t>(f[9], "median_ns");
    r.throughput_eps = detail::parse_field<double>(f[10], "throughput_eps");
    r.checksum = std::string(f[11]);
    if (r.checksum.empty()) throw std::runtime_error("csv: empty checksum");
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace psum::bench
