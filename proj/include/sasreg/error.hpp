#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sasreg {

// Each kind maps to one CLI exit code (see tools/cli.cpp).
enum class ErrorKind {
  invalid_argument,
  dimension_too_small,
  shape_mismatch,
  missing_directory,
  malformed_image,
  inconsistent_dimensions,
  io,
  checkpoint,
  schema_mismatch,
  training_diverged,
  malformed_report,
  empty_dataset,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

}  // namespace sasreg
