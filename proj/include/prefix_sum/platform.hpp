#pragma once

// Host topology queries and best-effort thread pinning. Every query degrades
// to "unknown" instead of failing.

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <utility>

#if defined(__linux__)
#include <pthread.h>
#include <sched.h>
#include <unistd.h>
#endif

#include "prefix_sum/plan.hpp"

namespace psum::platform {

namespace detail {

// Parses sysfs sizes such as "2048K" or "32M".
inline std::optional<std::size_t> parse_size(const std::string& text) {
  std::size_t pos = 0;
  unsigned long long value = 0;
  try {
    value = std::stoull(text, &pos);
  } catch (...) {
    return std::nullopt;
  }
  std::size_t scale = 1;
  if (pos < text.size()) {
    switch (text[pos]) {
      case 'K': case 'k': scale = 1024; break;
      case 'M': case 'm': scale = 1024 * 1024; break;
      case 'G': case 'g': scale = std::size_t{1024} * 1024 * 1024; break;
      default: break;
    }
  }
  if (value == 0) return std::nullopt;
  return static_cast<std::size_t>(value) * scale;
}

inline std::optional<std::string> read_line(const std::string& path) {
  std::ifstream f(path);
  std::string line;
  if (!f || !std::getline(f, line)) return std::nullopt;
  return line;
}

inline std::optional<std::size_t> sysfs_cache(int level, bool data_or_unified) {
  for (int index = 0; index < 8; ++index) {
    const std::string dir = "/sys/devices/system/cpu/cpu0/cache/index" + std::to_string(index) + "/";
    const auto lvl = read_line(dir + "level");
    if (!lvl) break;
    if (std::atoi(lvl->c_str()) != level) continue;
    const auto type = read_line(dir + "type").value_or("");
    if (data_or_unified && type == "Instruction") continue;
    if (const auto size = read_line(dir + "size")) return parse_size(*size);
  }
  return std::nullopt;
}

inline std::optional<std::size_t> sysconf_cache([[maybe_unused]] int name) {
#if defined(__linux__) && defined(_SC_LEVEL2_CACHE_SIZE)
  const long v = ::sysconf(name);
  if (v > 0) return static_cast<std::size_t>(v);
#endif
  return std::nullopt;
}

}  // namespace detail

inline CacheInfo query_cache_info() {
  CacheInfo info;
#if defined(__linux__)
  info.l1d_bytes = detail::sysfs_cache(1, true);
  info.l2_bytes = detail::sysfs_cache(2, true);
  info.l3_bytes = detail::sysfs_cache(3, true);
#if defined(_SC_LEVEL2_CACHE_SIZE)
  if (!info.l1d_bytes) info.l1d_bytes = detail::sysconf_cache(_SC_LEVEL1_DCACHE_SIZE);
  if (!info.l2_bytes) info.l2_bytes = detail::sysconf_cache(_SC_LEVEL2_CACHE_SIZE);
  if (!info.l3_bytes) info.l3_bytes = detail::sysconf_cache(_SC_LEVEL3_CACHE_SIZE);
#endif
#endif
  return info;
}

inline unsigned hardware_threads() noexcept {
  const unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : n;
}

// Hardware threads sharing cpu0's core (1 when unknown).
inline unsigned threads_per_core() {
#if defined(__linux__)
  const auto list = detail::read_line("/sys/devices/system/cpu/cpu0/topology/thread_siblings_list");
  if (list) {
    // Formats: "0", "0,48", "0-1".
    unsigned count = 0;
    std::size_t pos = 0;
    while (pos < list->size()) {
      const std::size_t next = list->find(',', pos);
      const std::string item = list->substr(pos, next == std::string::npos ? std::string::npos : next - pos);
      const std::size_t dash = item.find('-');
      if (dash == std::string::npos) {
        ++count;
      } else {
        count += static_cast<unsigned>(std::atoi(item.c_str() + dash + 1) - std::atoi(item.c_str()) + 1);
      }
      if (next == std::string::npos) break;
      pos = next + 1;
    }
    if (count > 0) return count;
  }
#endif
  return 1;
}

inline unsigned physical_cores() {
#if defined(__linux__)
  std::set<std::pair<std::string, std::string>> cores;
  for (unsigned cpu = 0; cpu < hardware_threads(); ++cpu) {
    const std::string dir = "/sys/devices/system/cpu/cpu" + std::to_string(cpu) + "/topology/";
    const auto pkg = detail::read_line(dir + "physical_package_id");
    const auto core = detail::read_line(dir + "core_id");
    if (!pkg || !core) return std::max(1u, hardware_threads() / threads_per_core());
    cores.emplace(*pkg, *core);
  }
  if (!cores.empty()) return static_cast<unsigned>(cores.size());
#endif
  return std::max(1u, hardware_threads() / threads_per_core());
}

// Pins the calling thread to one CPU; restores the previous mask on
// destruction. Silently does nothing where pinning is unsupported.
class ScopedPin {
 public:
  ScopedPin() = default;
  explicit ScopedPin([[maybe_unused]] unsigned cpu) {
#if defined(__linux__)
    if (pthread_getaffinity_np(pthread_self(), sizeof(saved_), &saved_) != 0) return;
    cpu_set_t set;
    CPU_ZERO(&set);
    CPU_SET(cpu % hardware_threads(), &set);
    active_ = pthread_setaffinity_np(pthread_self(), sizeof(set), &set) == 0;
#endif
  }
  ScopedPin(const ScopedPin&) = delete;
  ScopedPin& operator=(const ScopedPin&) = delete;
  ~ScopedPin() {
#if defined(__linux__)
    if (active_) pthread_setaffinity_np(pthread_self(), sizeof(saved_), &saved_);
#endif
  }

 private:
#if defined(__linux__)
  cpu_set_t saved_{};
#endif
  bool active_ = false;
};

}  // namespace psum::platform
