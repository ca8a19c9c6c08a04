#include "loom/errors.hpp"

namespace loom {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::invalid_argument: return "invalid_argument";
    case ErrorKind::invalid_parameter: return "invalid_parameter";
    case ErrorKind::missing_variant: return "missing_variant";
    case ErrorKind::missing_key: return "missing_key";
    case ErrorKind::overflow: return "overflow";
    case ErrorKind::empty_samples: return "empty_samples";
    case ErrorKind::dimension_mismatch: return "dimension_mismatch";
    case ErrorKind::all_infeasible: return "all_infeasible";
    case ErrorKind::length_mismatch: return "length_mismatch";
    case ErrorKind::zero_truth: return "zero_truth";
    case ErrorKind::invalid_k: return "invalid_k";
    case ErrorKind::inconsistent_plan: return "inconsistent_plan";
    case ErrorKind::parse: return "parse";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

}  // namespace loom
