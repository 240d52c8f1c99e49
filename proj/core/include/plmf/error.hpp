#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace plmf {

enum class Errc {
  invalid_input,
  invalid_parameter,
  insufficient_data,
  insufficient_scales,
  unsupported_filter,
  singular_regression,
  degenerate_data,
  invalid_correction,
  invalid_expansion,
  no_valid_p,
  scale_too_small,
  embedding_failure,
  unsupported_order,
  parameter_inconsistency,
  io_error,
};

// Coarse grouping used by the CLI to pick an exit code.
enum class ErrorCategory { usage, data, numerical };

std::string_view errc_name(Errc code) noexcept;
ErrorCategory errc_category(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what);
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace plmf
