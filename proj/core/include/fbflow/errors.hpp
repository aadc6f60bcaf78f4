#pragma once

#include <stdexcept>
#include <string>

namespace fbflow {

/// A parameter violates an operation's precondition (nonpositive step,
/// inverted box bounds, dimension mismatch, ...).
class InvalidParameter : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Integrator configuration rejected before integration starts.
class InvalidConfig : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An iterative inner solver hit its iteration cap or failed its certificate.
class ConvergenceFailure : public std::runtime_error {
 public:
  ConvergenceFailure(const std::string& what, double last_residual)
      : std::runtime_error(what), last_residual_(last_residual) {}

  double last_residual() const noexcept { return last_residual_; }

 private:
  double last_residual_;
};

/// A non-finite state showed up during integration. Under the step-size
/// condition the flow is globally Lipschitz, so this signals a bug or a
/// term whose declared Lipschitz constant is wrong.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Post-processing could not be carried out (e.g. empty fit window).
class AnalysisError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Configuration text failed to parse or validate. The message carries the
/// source location and the offending field.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace fbflow
