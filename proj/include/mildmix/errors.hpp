#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mildmix {

enum class ErrorKind {
  rational_detected,
  precision_exhausted,
  out_of_range,
  insufficient_depth,
  positivity_violation,
  zero_jump_sum,
  no_admissible_shift,
  degenerate_pair,
  out_of_delta,
  same_orbit,
  window_exceeded,
  singularity,
  step_failure,
  no_return,
  schema_violation,
  file_io,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Domain error carrying a machine-readable kind. Every failure the library
/// reports to callers goes through this type.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace mildmix
