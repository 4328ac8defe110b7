#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace lspdyn {

enum class Errc {
  domain,
  unsupported_order,
  pole,
  convergence,
  no_resonance,
  numerical_symmetry,
  precision,
  absent_state,
  aliasing,
  accuracy,
  unsupported,
  config,
  io,
};

std::string_view errc_name(Errc code) noexcept;

/// True for the numerical failure classes the CLI reports with exit code 3.
bool is_numerical(Errc code) noexcept;

/// Library exception. what() reads "<module>.<code>: <message>".
class Error : public std::runtime_error {
 public:
  Error(std::string_view module, Errc code, const std::string& message);

  Errc code() const noexcept { return code_; }
  const std::string& module() const noexcept { return module_; }
  std::string qualified_code() const;

 private:
  std::string module_;
  Errc code_;
};

}  // namespace lspdyn
