#pragma once

#include <stdexcept>
#include <string>

namespace semshield {

/// Broad failure category. Maps one-to-one onto the CLI exit code contract.
enum class ErrorKind {
  Validation,     // bad input values, schema violations, contract breaches
  Shape,          // dimension mismatch
  Index,          // label/class index out of range
  Configuration,  // missing artifacts for a requested method
  Convergence,    // iterative solver hit its cap
  Singularity,    // ill-posed linear system
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message, std::string context = {})
      : std::runtime_error(message), kind_(kind), context_(std::move(context)) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& context() const noexcept { return context_; }

  /// Stable machine-readable name, e.g. "shape_error".
  const char* code() const noexcept {
    switch (kind_) {
      case ErrorKind::Validation: return "validation_error";
      case ErrorKind::Shape: return "shape_error";
      case ErrorKind::Index: return "index_error";
      case ErrorKind::Configuration: return "configuration_error";
      case ErrorKind::Convergence: return "convergence_error";
      case ErrorKind::Singularity: return "singularity_error";
    }
    return "error";
  }

  /// 2 for validation/configuration problems, 3 for numerical failures.
  int exit_code() const noexcept {
    return (kind_ == ErrorKind::Convergence || kind_ == ErrorKind::Singularity) ? 3 : 2;
  }

 private:
  ErrorKind kind_;
  std::string context_;
};

inline Error validation_error(const std::string& msg, std::string ctx = {}) {
  return Error(ErrorKind::Validation, msg, std::move(ctx));
}
inline Error shape_error(const std::string& msg, std::string ctx = {}) {
  return Error(ErrorKind::Shape, msg, std::move(ctx));
}
inline Error index_error(const std::string& msg, std::string ctx = {}) {
  return Error(ErrorKind::Index, msg, std::move(ctx));
}
inline Error configuration_error(const std::string& msg, std::string ctx = {}) {
  return Error(ErrorKind::Configuration, msg, std::move(ctx));
}

}  // namespace semshield
