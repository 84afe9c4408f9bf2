#pragma once
// Small formatting helpers shared by reports and the CLI.

#include <cerrno>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <optional>
#include <string>

namespace gatesim {

// 16-digit lowercase hex, no prefix: the canonical address spelling in all
// artifacts (e.g. "fffff8036385b000").
inline std::string hex16(uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return std::string(buf);
}

inline std::string hex_byte(uint8_t v) {
  char buf[3];
  std::snprintf(buf, sizeof buf, "%02x", v);
  return std::string(buf);
}

// Seconds with one decimal place, the resolution used by all artifacts.
inline std::string seconds1(double s) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.1f", s);
  return std::string(buf);
}

inline std::string fixed4(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return std::string(buf);
}

// Accepts "fffff80000000000", "0xfffff80000000000" or decimal.
inline std::optional<uint64_t> parse_u64(const std::string& s) {
  if (s.empty()) return std::nullopt;
  const char* p = s.c_str();
  char* end = nullptr;
  int base = 10;
  if (s.size() > 2 && s[0] == '0' && (s[1] == 'x' || s[1] == 'X')) {
    base = 16;
  } else if (s.find_first_of("abcdefABCDEF") != std::string::npos ||
             s.size() == 16) {
    base = 16;
  }
  errno = 0;
  unsigned long long v = std::strtoull(p, &end, base);
  if (errno != 0 || end == p || *end != '\0') return std::nullopt;
  return static_cast<uint64_t>(v);
}

}  // namespace gatesim
