#pragma once

#include <stdexcept>
#include <string>

namespace orbitlab {

enum class ErrorKind {
  kInvalidParameter,
  kDegenerateInput,
  kChartDomain,
  kGeometry,
  kNoIntersection,
  kNotLibrating,
  kInfinitePotential,
  kStepUnderflow,
};

const char* to_string(ErrorKind kind);

// Every precondition violation in the library surfaces as this exception.
// `module` names the component that raised it so the CLI can report it.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string module, const std::string& what)
      : std::runtime_error(module + ": " + what), kind_(kind), module_(std::move(module)) {}

  ErrorKind kind() const { return kind_; }
  const std::string& module() const { return module_; }

 private:
  ErrorKind kind_;
  std::string module_;
};

}  // namespace orbitlab
