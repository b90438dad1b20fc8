#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace splinecop {

enum class Errc {
  invalid_domain,
  too_few_functions,
  invalid_order,
  non_finite,
  out_of_range,
  dimension_mismatch,
  no_root,
  no_convergence,
  density_nonpositive,
  degenerate_proposal,
  empty_draws,
  weighted_draws,
  grid_mismatch,
  malformed_config,
  malformed_data,
};

std::string_view to_string(Errc code) noexcept;

// Single exception type for the library. Numerical failures are separated
// from bad input so the CLI can map them to distinct exit codes.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

  bool numerical() const noexcept {
    switch (code_) {
      case Errc::no_root:
      case Errc::no_convergence:
      case Errc::density_nonpositive:
      case Errc::degenerate_proposal:
        return true;
      default:
        return false;
    }
  }

 private:
  Errc code_;
};

inline std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::invalid_domain: return "invalid-domain";
    case Errc::too_few_functions: return "too-few-functions";
    case Errc::invalid_order: return "invalid-order";
    case Errc::non_finite: return "non-finite";
    case Errc::out_of_range: return "out-of-range";
    case Errc::dimension_mismatch: return "dimension-mismatch";
    case Errc::no_root: return "no-root-in-bracket";
    case Errc::no_convergence: return "no-convergence";
    case Errc::density_nonpositive: return "density-nonpositive";
    case Errc::degenerate_proposal: return "proposal-degenerate";
    case Errc::empty_draws: return "empty-draws";
    case Errc::weighted_draws: return "weighted-draws";
    case Errc::grid_mismatch: return "grid-mismatch";
    case Errc::malformed_config: return "malformed-config";
    case Errc::malformed_data: return "malformed-data";
  }
  return "unknown";
}

}  // namespace splinecop
