#include "bidgen/util.hpp"

#include <atomic>
#include <charconv>
#include <cstdio>
#include <cstring>
#include <mutex>
#include <thread>

#include "bidgen/errors.hpp"

namespace bidgen {

std::uint64_t fnv1a64(const void* data, std::size_t len, std::uint64_t seed) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = seed;
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001B3ULL;
  }
  return h;
}

void Digest::add_bytes(const void* data, std::size_t len) {
  h_ = fnv1a64(data, len, h_);
}

void Digest::add(double v) { add_bytes(&v, sizeof(v)); }
void Digest::add(std::uint64_t v) { add_bytes(&v, sizeof(v)); }
void Digest::add(std::int64_t v) { add_bytes(&v, sizeof(v)); }

void parallel_chunks(std::size_t n_items, std::size_t n_chunks,
                     const std::function<void(std::size_t, std::size_t, std::size_t)>& fn) {
  if (n_items == 0 || n_chunks == 0) return;
  if (n_chunks > n_items) n_chunks = n_items;

  auto chunk_range = [&](std::size_t c) {
    const std::size_t base = n_items / n_chunks;
    const std::size_t rem = n_items % n_chunks;
    const std::size_t begin = c * base + (c < rem ? c : rem);
    const std::size_t end = begin + base + (c < rem ? 1 : 0);
    return std::pair<std::size_t, std::size_t>{begin, end};
  };

  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const std::size_t n_threads = std::min<std::size_t>(hw, n_chunks);
  if (n_threads <= 1) {
    for (std::size_t c = 0; c < n_chunks; ++c) {
      auto [b, e] = chunk_range(c);
      fn(c, b, e);
    }
    return;
  }

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      const std::size_t c = next.fetch_add(1);
      if (c >= n_chunks) return;
      auto [b, e] = chunk_range(c);
      fn(c, b, e);
    }
  };
  std::vector<std::thread> threads;
  threads.reserve(n_threads - 1);
  for (std::size_t i = 1; i < n_threads; ++i) threads.emplace_back(worker);
  worker();
  for (auto& t : threads) t.join();
}

std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) fail(Errc::invalid_argument, "format_double");
  return std::string(buf, ptr);
}

namespace {
std::atomic<int> g_log_level{static_cast<int>(LogLevel::warn)};
std::mutex g_log_mutex;
const char* level_name(LogLevel l) {
  switch (l) {
    case LogLevel::debug: return "debug";
    case LogLevel::info: return "info";
    case LogLevel::warn: return "warn";
    case LogLevel::error: return "error";
    case LogLevel::off: return "off";
  }
  return "?";
}
}  // namespace

void set_log_level(LogLevel level) { g_log_level.store(static_cast<int>(level)); }
LogLevel log_level() { return static_cast<LogLevel>(g_log_level.load()); }

void set_log_level(const std::string& name) {
  if (name == "debug") set_log_level(LogLevel::debug);
  else if (name == "info") set_log_level(LogLevel::info);
  else if (name == "warn") set_log_level(LogLevel::warn);
  else if (name == "error") set_log_level(LogLevel::error);
  else if (name == "off") set_log_level(LogLevel::off);
  else fail(Errc::invalid_argument, "unknown log level '" + name + "'");
}

void log(LogLevel level, const std::string& msg) {
  if (static_cast<int>(level) < g_log_level.load()) return;
  std::lock_guard<std::mutex> lock(g_log_mutex);
  std::fprintf(stderr, "[%s] %s\n", level_name(level), msg.c_str());
}

}  // namespace bidgen
