#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace bidgen {

/// FNV-1a over raw bytes; used for file checksums and episode digests.
std::uint64_t fnv1a64(const void* data, std::size_t len,
                      std::uint64_t seed = 0xCBF29CE484222325ULL);

/// Incremental digest helper for mixed scalar streams.
class Digest {
 public:
  void add_bytes(const void* data, std::size_t len);
  void add(double v);
  void add(std::uint64_t v);
  void add(std::int64_t v);
  void add(int v) { add(static_cast<std::int64_t>(v)); }
  std::uint64_t value() const { return h_; }

 private:
  std::uint64_t h_ = 0xCBF29CE484222325ULL;
};

/// Runs fn(chunk_index, begin, end) over `n_items` split into exactly
/// `n_chunks` contiguous ranges. Chunk boundaries depend only on the two
/// counts, never on thread availability, so any order-sensitive reduction the
/// caller performs in chunk order is reproducible on any machine.
void parallel_chunks(std::size_t n_items, std::size_t n_chunks,
                     const std::function<void(std::size_t, std::size_t, std::size_t)>& fn);

std::string format_double(double v);  // shortest round-trip representation

/// Minimal leveled logger writing to stderr.
enum class LogLevel { debug = 0, info = 1, warn = 2, error = 3, off = 4 };
void set_log_level(LogLevel level);
LogLevel log_level();
void set_log_level(const std::string& name);  // "debug" | "info" | ...
void log(LogLevel level, const std::string& msg);
inline void log_debug(const std::string& m) { log(LogLevel::debug, m); }
inline void log_info(const std::string& m) { log(LogLevel::info, m); }
inline void log_warn(const std::string& m) { log(LogLevel::warn, m); }
inline void log_error(const std::string& m) { log(LogLevel::error, m); }

}  // namespace bidgen
