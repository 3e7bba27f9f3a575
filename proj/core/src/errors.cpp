#include "bidgen/errors.hpp"

namespace bidgen {

const char* to_string(Errc code) noexcept {
  switch (code) {
    case Errc::invalid_config: return "invalid_config";
    case Errc::invalid_argument: return "invalid_argument";
    case Errc::corrupted_episode: return "corrupted_episode";
    case Errc::policy_fault: return "policy_fault";
    case Errc::version_mismatch: return "version_mismatch";
    case Errc::truncated_file: return "truncated_file";
    case Errc::checksum_failure: return "checksum_failure";
    case Errc::stats_mismatch: return "stats_mismatch";
    case Errc::io_error: return "io_error";
    case Errc::shape_mismatch: return "shape_mismatch";
    case Errc::non_finite: return "non_finite";
    case Errc::unknown_condition: return "unknown_condition";
    case Errc::layout_mismatch: return "layout_mismatch";
  }
  return "unknown";
}

Error::Error(Errc code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

void fail(Errc code, const std::string& what) { throw Error(code, what); }

}  // namespace bidgen
