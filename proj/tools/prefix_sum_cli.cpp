// prefix_sum_cli: run one scan, verify every variant against the sequential
// reference, or benchmark.
//
//   prefix_sum_cli scan   --algo SIMD1-P --n 1000000 --threads 4
//   prefix_sum_cli verify --n 100000 --threads 4
//   prefix_sum_cli bench  --algo SIMD --threads 1 --csv out.csv
//   prefix_sum_cli sweep  --algo Scalar1 --threads 4 --dim dilation --grid 0,0.5,1
//
// Exit codes: 0 success, 1 verification failure, 2 usage error.

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "prefix_sum.hpp"
#include "prefix_sum/bench.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

struct Options {
  std::string algo = "SIMD";
  std::size_t n = 0;
  bool n_given = false;
  std::size_t threads = 1;
  std::string block_len = "auto";
  double d0 = 1.0;
  double d_last = 1.0;
  std::string elem = "i32";
  bool out_of_place = false;
  std::uint64_t seed = 42;
  std::size_t reps = psum::bench::kMinReps;
  std::string csv;
  std::string dim = "block-len";
  std::vector<double> grid;
  bool pin = false;
};

std::optional<std::size_t> env_size(const char* name) {
  const char* v = std::getenv(name);
  if (v == nullptr || *v == '\0') return std::nullopt;
  std::size_t out = 0;
  const char* end = v + std::char_traits<char>::length(v);
  const auto res = std::from_chars(v, end, out);
  if (res.ec != std::errc{} || res.ptr != end || out == 0) {
    std::cerr << "ignoring " << name << "=" << v << " (expected a positive integer)\n";
    return std::nullopt;
  }
  return out;
}

// "auto" -> half of L2 per hardware thread sharing the core. PSUM_L2_ELEMENTS
// and PSUM_THREADS_PER_CORE override the topology query.
std::size_t resolve_block_len(const std::string& text) {
  if (text != "auto") return std::stoull(text);
  psum::CacheInfo cache;
  if (const auto l2 = env_size("PSUM_L2_ELEMENTS")) {
    cache.l2_bytes = *l2 * sizeof(std::uint32_t);
  } else {
    cache = psum::platform::query_cache_info();
  }
  unsigned tpc = psum::platform::threads_per_core();
  if (const auto t = env_size("PSUM_THREADS_PER_CORE")) tpc = static_cast<unsigned>(*t);
  if (!cache.l2_bytes) {
    std::cerr << "L2 cache size unknown; using block length " << psum::kFallbackBlockLen
              << " (set PSUM_L2_ELEMENTS to override)\n";
  }
  return psum::default_block_len(cache, tpc, psum::kEngineLaneWidth, sizeof(std::uint32_t));
}

psum::bench::BenchConfig make_config(const Options& o) {
  psum::bench::BenchConfig cfg;
  cfg.algo = o.algo;
  cfg.elem = *psum::bench::parse_elem_type(o.elem);
  cfg.n = o.n_given ? o.n : (std::size_t{1} << 24) * std::min<std::size_t>(o.threads, 8);
  cfg.threads = o.threads;
  cfg.block_len = resolve_block_len(o.block_len);
  cfg.d0 = o.d0;
  cfg.d_last = o.d_last;
  cfg.out_of_place = o.out_of_place;
  cfg.seed = o.seed;
  cfg.reps = o.reps;
  cfg.affinity = o.pin ? psum::Affinity::Compact : psum::Affinity::None;
  return cfg;
}

// ---------------------------------------------------------------------------
// scan

template <psum::Element T>
int scan_typed(const Options& o) {
  const auto algo = *psum::parse_algorithm(o.algo);
  const std::vector<T> input = psum::bench::make_input<T>(o.n, o.seed);
  std::vector<T> work(input);
  std::vector<T> output(o.out_of_place ? o.n : 0);

  psum::RunParams params;
  params.threads = o.threads;
  params.block_len = algo.uses_block_len() ? resolve_block_len(o.block_len) : 0;
  params.dilation = {o.d0, o.d_last};
  params.affinity = o.pin ? psum::Affinity::Compact : psum::Affinity::None;
  psum::ScanEngine engine;

  std::span<T> result = work;
  T total{};
  if (o.out_of_place) {
    total = psum::run_algorithm<T>(algo, std::span<const T>(input), output, params, engine);
    result = output;
  } else {
    total = psum::run_algorithm<T>(algo, std::span<const T>(work), work, params, engine);
  }

  const psum::bench::Reference<T> reference(input);
  const auto v = reference.check(result);
  std::cout << "algo " << o.algo << "\nelem " << o.elem << "\nn " << o.n << "\nthreads "
            << (algo.multithreaded() ? o.threads : 1) << "\nblock_len " << params.block_len << "\n";
  if constexpr (std::same_as<T, float>) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", static_cast<double>(total));
    std::cout << "total " << buf << "\n";
  } else {
    std::cout << "total " << total << "\n";
  }
  std::cout << "checksum " << psum::bench::checksum<T>(result) << "\n";
  if (!v.ok) {
    std::cout << "verify FAIL: " << v.message << "\n";
    return kExitFailure;
  }
  std::cout << "verify PASS\n";
  return kExitOk;
}

int cmd_scan(Options o) {
  if (!o.n_given) o.n = std::size_t{1} << 20;
  return o.elem == "f32" ? scan_typed<float>(o) : scan_typed<std::uint32_t>(o);
}

// ---------------------------------------------------------------------------
// verify

template <psum::Element T>
bool verify_one(const psum::Algorithm& algo, std::size_t n, std::size_t threads, std::size_t block_len,
                bool out_of_place, const Options& o, psum::ScanEngine& engine, std::string& why) {
  const std::vector<T> input = psum::bench::make_input<T>(n, o.seed + n);
  std::vector<T> work(input);
  std::vector<T> output(out_of_place ? n : 0);
  psum::RunParams params;
  params.threads = threads;
  params.block_len = block_len;
  params.dilation = {o.d0, o.d_last};
  std::span<T> result = work;
  if (out_of_place) {
    psum::run_algorithm<T>(algo, std::span<const T>(input), output, params, engine);
    result = output;
  } else {
    psum::run_algorithm<T>(algo, std::span<const T>(work), work, params, engine);
  }
  const auto v = psum::bench::Reference<T>(input).check(result);
  if (!v.ok) why = "n=" + std::to_string(n) + " block_len=" + std::to_string(block_len) + ": " + v.message;
  return v.ok;
}

int cmd_verify(Options o, bool elem_given) {
  if (!o.n_given) o.n = 100000;
  const std::size_t w = psum::kEngineLaneWidth;
  const std::size_t m = o.threads;
  const std::vector<std::size_t> sizes{0, 1, w - 1, w, m * w, o.n};
  const std::size_t block_len = resolve_block_len(o.block_len);
  std::vector<std::string> elems{"i32", "f32"};
  if (elem_given) elems = {o.elem};

  psum::ScanEngine engine;
  std::size_t failures = 0;
  for (const auto& elem : elems) {
    for (const auto& algo : psum::kAlgorithms) {
      for (const bool oop : {false, true}) {
        std::vector<std::size_t> blocks{algo.uses_block_len() ? block_len : 0};
        if (algo.uses_block_len()) blocks.push_back(4 * w);
        std::string why;
        bool ok = true;
        for (const std::size_t n : sizes) {
          for (const std::size_t b : blocks) {
            ok = ok && (elem == "f32" ? verify_one<float>(algo, n, m, b, oop, o, engine, why)
                                      : verify_one<std::uint32_t>(algo, n, m, b, oop, o, engine, why));
          }
        }
        failures += !ok;
        std::printf("%s  %-10s %s  threads=%zu  %s%s%s\n", ok ? "PASS" : "FAIL",
                    std::string(algo.label).c_str(), elem.c_str(), algo.multithreaded() ? m : 1,
                    oop ? "out-of-place" : "in-place", ok ? "" : "  ", why.c_str());
      }
    }
  }
  std::printf("%zu failure(s)\n", failures);
  return failures == 0 ? kExitOk : kExitFailure;
}

// ---------------------------------------------------------------------------
// bench / sweep

std::ostream* open_csv(const std::string& path, std::ofstream& file) {
  if (path.empty() || path == "-") return &std::cout;
  file.open(path, std::ios::binary);
  if (!file) throw std::runtime_error("cannot open " + path);
  return &file;
}

int cmd_bench(const Options& o) {
  const auto cfg = make_config(o);
  try {
    const auto rec = psum::bench::run_case(cfg);
    std::ofstream file;
    psum::bench::write_csv(*open_csv(o.csv, file), std::span(&rec, 1));
  } catch (const psum::bench::VerificationError& e) {
    std::cerr << "verification failed: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitOk;
}

int cmd_sweep(const Options& o) {
  const auto dim = *psum::bench::parse_sweep_dim(o.dim);
  std::vector<double> grid = o.grid;
  if (grid.empty()) {
    switch (dim) {
      case psum::bench::SweepDim::Threads: grid = {1, 2, 4, 8}; break;
      case psum::bench::SweepDim::BlockLen:
        for (double b = 8192; b <= 8388608; b *= 2) grid.push_back(b);
        break;
      case psum::bench::SweepDim::Dilation:
        for (int i = 0; i <= 10; ++i) grid.push_back(i / 10.0);
        break;
    }
  }
  const auto result = psum::bench::sweep(dim, grid, make_config(o));
  std::ofstream file;
  psum::bench::write_csv(*open_csv(o.csv, file), result.records);
  for (const auto& f : result.failures) std::cerr << "point " << f.point << " failed: " << f.message << "\n";
  return result.failures.empty() ? kExitOk : kExitFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Parallel prefix sums: scan, verify, benchmark"};
  app.require_subcommand(1);
  Options o;

  const auto labels = [] {
    std::vector<std::string> v;
    for (const auto& a : psum::kAlgorithms) v.emplace_back(a.label);
    return v;
  }();
  const auto block_len_check = CLI::Validator(
      [](std::string& s) -> std::string {
        if (s == "auto") return {};
        std::size_t v = 0;
        const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
        if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) return "expected a number or 'auto'";
        if (v != 0 && v < psum::kEngineLaneWidth) {
          return "must be 0 or at least " + std::to_string(psum::kEngineLaneWidth);
        }
        return {};
      },
      "NUMBER|auto");

  auto common = [&](CLI::App* sub) {
    sub->add_option("--algo", o.algo, "Algorithm label")->check(CLI::IsMember(labels));
    sub->add_option_function<std::size_t>("--n", [&](const std::size_t& v) { o.n = v; o.n_given = true; },
                                          "Element count");
    sub->add_option("--threads", o.threads, "Worker threads")->check(CLI::Range(std::size_t{1}, std::size_t{4096}));
    sub->add_option("--block-len", o.block_len, "Per-thread partition length, or 'auto'")->check(block_len_check);
    sub->add_option("--d0", o.d0, "Dilation of thread 0's partition")->check(CLI::Range(0.0, 1.0));
    sub->add_option("--d-last", o.d_last, "Dilation of the extra last partition")->check(CLI::Range(0.0, 1.0));
    sub->add_flag("--out-of-place", o.out_of_place, "Write to a separate output buffer");
    sub->add_option("--seed", o.seed, "Input RNG seed");
    sub->add_flag("--pin", o.pin, "Pin worker j to CPU j");
  };
  auto* elem_opt = static_cast<CLI::Option*>(nullptr);
  auto elem = [&](CLI::App* sub) {
    elem_opt = sub->add_option("--elem", o.elem, "Element type")->check(CLI::IsMember({"i32", "f32"}));
  };

  auto* scan = app.add_subcommand("scan", "Scan random input once and print total and checksum");
  common(scan);
  elem(scan);

  auto* verify = app.add_subcommand("verify", "Check every algorithm against the sequential scan");
  common(verify);
  elem(verify);
  CLI::Option* verify_elem = elem_opt;

  auto* bench = app.add_subcommand("bench", "Time one configuration, emit CSV");
  auto* sweep = app.add_subcommand("sweep", "Time a parameter sweep, emit CSV");
  for (auto* sub : {bench, sweep}) {
    common(sub);
    elem(sub);
    sub->add_option("--reps", o.reps, "Timed repetitions")->check(CLI::Range(psum::bench::kMinReps, std::size_t{1} << 20));
    sub->add_option("--csv", o.csv, "Output path (default stdout)");
  }
  sweep->add_option("--dim", o.dim, "Swept dimension")->check(CLI::IsMember({"threads", "block-len", "dilation"}));
  sweep->add_option("--grid", o.grid, "Comma-separated grid points")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*scan) return cmd_scan(o);
    if (*verify) return cmd_verify(o, verify_elem->count() > 0);
    if (*bench) return cmd_bench(o);
    if (*sweep) return cmd_sweep(o);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}
