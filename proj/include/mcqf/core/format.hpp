#pragma once

#include <charconv>
#include <string>
#include <system_error>

namespace mcqf {

/// Shortest decimal text that parses back to exactly `v`; independent of
/// locale, so CSV output is byte-stable.
inline std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace mcqf
