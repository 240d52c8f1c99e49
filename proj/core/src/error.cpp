#include "plmf/error.hpp"

namespace plmf {

std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::invalid_input: return "invalid-input";
    case Errc::invalid_parameter: return "invalid-parameter";
    case Errc::insufficient_data: return "insufficient-data";
    case Errc::insufficient_scales: return "insufficient-scales";
    case Errc::unsupported_filter: return "unsupported-filter";
    case Errc::singular_regression: return "singular-regression";
    case Errc::degenerate_data: return "degenerate-data";
    case Errc::invalid_correction: return "invalid-correction";
    case Errc::invalid_expansion: return "invalid-expansion";
    case Errc::no_valid_p: return "no-valid-p";
    case Errc::scale_too_small: return "scale-too-small";
    case Errc::embedding_failure: return "embedding-failure";
    case Errc::unsupported_order: return "unsupported-order";
    case Errc::parameter_inconsistency: return "parameter-inconsistency";
    case Errc::io_error: return "io-error";
  }
  return "unknown";
}

ErrorCategory errc_category(Errc code) noexcept {
  switch (code) {
    case Errc::invalid_parameter:
    case Errc::unsupported_filter:
    case Errc::unsupported_order:
    case Errc::parameter_inconsistency:
    case Errc::scale_too_small:
      return ErrorCategory::usage;
    case Errc::singular_regression:
    case Errc::invalid_correction:
    case Errc::invalid_expansion:
    case Errc::no_valid_p:
    case Errc::embedding_failure:
      return ErrorCategory::numerical;
    default:
      return ErrorCategory::data;
  }
}

Error::Error(Errc code, const std::string& what)
    : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

}  // namespace plmf
