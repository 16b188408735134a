#pragma once

#include <stdexcept>
#include <string>

namespace mweparse {

// Shape disagreement between tensor operands.
struct ShapeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Index outside a valid range (embedding id, token position, ...).
struct IndexError : std::out_of_range {
  using std::out_of_range::out_of_range;
};

// A precondition of an operation was violated by the caller.
struct ContractError : std::logic_error {
  using std::logic_error::logic_error;
};

// Input is structurally valid but the requested quantity is undefined on it
// (empty corpus, all positions masked, zero variance, ...).
struct DegenerateInputError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Floating-point breakdown (near-singular Laplacian, non-finite values).
struct NumericalDegeneracyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed corpus file; carries the 1-based line number when known.
struct ParseError : std::runtime_error {
  long line;
  explicit ParseError(const std::string& msg, long line_no = 0)
      : std::runtime_error(line_no > 0 ? "line " + std::to_string(line_no) + ": " + msg : msg),
        line(line_no) {}
};

// Instance set cannot be expressed in the tagging scheme.
struct EncodingConflictError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Gold tree incompatible with the selected projectivity regime.
struct RegimeMismatchError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Unreadable, unparseable, or incompatible model checkpoint.
struct CheckpointError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace mweparse
