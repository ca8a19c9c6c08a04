#pragma once

#include <cstdint>
#include <string>

#include "loom/errors.hpp"

namespace loom {

// Overflow is reported, never wrapped.

inline std::uint64_t checked_mul(std::uint64_t a, std::uint64_t b, const char* what) {
  std::uint64_t out = 0;
  if (__builtin_mul_overflow(a, b, &out)) {
    throw Error(ErrorKind::overflow, std::string(what) + ": product exceeds 64-bit range");
  }
  return out;
}

inline std::uint64_t checked_add(std::uint64_t a, std::uint64_t b, const char* what) {
  std::uint64_t out = 0;
  if (__builtin_add_overflow(a, b, &out)) {
    throw Error(ErrorKind::overflow, std::string(what) + ": sum exceeds 64-bit range");
  }
  return out;
}

inline std::uint64_t checked_pow(std::uint64_t base, std::uint64_t exp, const char* what) {
  std::uint64_t out = 1;
  for (std::uint64_t i = 0; i < exp; ++i) out = checked_mul(out, base, what);
  return out;
}

inline std::uint64_t checked_factorial(std::uint64_t n, const char* what) {
  std::uint64_t out = 1;
  for (std::uint64_t i = 2; i <= n; ++i) out = checked_mul(out, i, what);
  return out;
}

}  // namespace loom
