#pragma once

#include <stdexcept>
#include <string>

namespace sones {

/// Bad dimensions, out-of-range indices, non-positive amplitudes and the like.
struct InvalidArgument : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// A documented precondition (e.g. probing-frequency validity) does not hold.
struct PreconditionError : std::logic_error {
  using std::logic_error::logic_error;
};

/// Base for failures of a numerical procedure on otherwise valid input.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct QuadratureError : NumericError {
  using NumericError::NumericError;
};

struct ConvergenceError : NumericError {
  using NumericError::NumericError;
};

struct SingularityError : NumericError {
  using NumericError::NumericError;
};

/// A state component became non-finite during integration.
struct DivergenceError : NumericError {
  DivergenceError(const std::string& what, double at_time)
      : NumericError(what), time(at_time) {}
  double time;
};

struct SearchExhausted : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Malformed scenario text. `line` is 1-based, 0 when unknown.
struct ParseError : std::runtime_error {
  ParseError(const std::string& what, int at_line)
      : std::runtime_error(at_line > 0 ? "line " + std::to_string(at_line) + ": " + what : what),
        line(at_line) {}
  int line;
};

/// Well-formed scenario whose content is rejected (frequency violations, bad shapes).
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace sones
