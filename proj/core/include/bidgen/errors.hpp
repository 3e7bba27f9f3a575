#pragma once

#include <stdexcept>
#include <string>

namespace bidgen {

/// Machine-readable failure categories. Tests match on these rather than on
/// message text.
enum class Errc {
  invalid_config,
  invalid_argument,
  corrupted_episode,
  policy_fault,
  version_mismatch,
  truncated_file,
  checksum_failure,
  stats_mismatch,
  io_error,
  shape_mismatch,
  non_finite,
  unknown_condition,
  layout_mismatch,
};

const char* to_string(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what);
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] void fail(Errc code, const std::string& what);

}  // namespace bidgen
