#include "lspdyn/error.hpp"

namespace lspdyn {

std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::domain: return "domain";
    case Errc::unsupported_order: return "unsupported_order";
    case Errc::pole: return "pole";
    case Errc::convergence: return "convergence";
    case Errc::no_resonance: return "no_resonance";
    case Errc::numerical_symmetry: return "numerical_symmetry";
    case Errc::precision: return "precision";
    case Errc::absent_state: return "absent_state";
    case Errc::aliasing: return "aliasing";
    case Errc::accuracy: return "accuracy";
    case Errc::unsupported: return "unsupported";
    case Errc::config: return "config";
    case Errc::io: return "io";
  }
  return "unknown";
}

bool is_numerical(Errc code) noexcept {
  switch (code) {
    case Errc::pole:
    case Errc::convergence:
    case Errc::no_resonance:
    case Errc::numerical_symmetry:
    case Errc::precision:
    case Errc::aliasing:
    case Errc::accuracy:
      return true;
    default:
      return false;
  }
}

Error::Error(std::string_view module, Errc code, const std::string& message)
    : std::runtime_error(std::string(module) + "." + std::string(errc_name(code)) + ": " + message),
      module_(module),
      code_(code) {}

std::string Error::qualified_code() const { return module_ + "." + std::string(errc_name(code_)); }

}  // namespace lspdyn
