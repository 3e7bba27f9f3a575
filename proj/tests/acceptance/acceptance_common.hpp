#pragma once

#include <chrono>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

namespace acceptance {

/// One line per criterion; never compiled out. Returns the process exit code.
class Suite {
 public:
  void run(int number, const std::string& title, double budget_seconds,
           const std::function<bool(std::string&)>& body) {
    const auto start = std::chrono::steady_clock::now();
    std::string detail;
    bool ok = false;
    try {
      ok = body(detail);
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
    }
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (budget_seconds > 0.0 && elapsed > budget_seconds) {
      ok = false;
      detail += (detail.empty() ? "" : "; ") + std::string("runtime ") +
                std::to_string(elapsed) + "s over budget " + std::to_string(budget_seconds) +
                "s";
    }
    std::printf("[%s] criterion %d: %s (%.2f s)%s%s\n", ok ? "PASS" : "FAIL", number,
                title.c_str(), elapsed, detail.empty() ? "" : " -- ", detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failures_;
  }

  int exit_code() const { return failures_ == 0 ? 0 : 1; }
  int failures() const { return failures_; }

 private:
  int failures_ = 0;
};

inline std::string fmt(const char* format, ...) {
  char buf[512];
  va_list args;
  va_start(args, format);
  std::vsnprintf(buf, sizeof(buf), format, args);
  va_end(args);
  return buf;
}

}  // namespace acceptance
