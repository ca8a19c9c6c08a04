#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace loom {

enum class ErrorKind {
  invalid_argument,
  invalid_parameter,
  missing_variant,
  missing_key,
  overflow,
  empty_samples,
  dimension_mismatch,
  all_infeasible,
  length_mismatch,
  zero_truth,
  invalid_k,
  inconsistent_plan,
  parse,
  io,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Every failure raised by the library carries a machine-readable kind so the
/// CLI can report it as a single parseable line.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace loom
