#pragma once

#include <stdexcept>
#include <string>

namespace magd {

class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The problem data do not satisfy the assumptions the method needs
/// (disconnected expected graph, vanishing step size, ...).
class DegenerateProblem : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An iterate left the finite range, usually a sign of a mis-tuned step.
class NonFiniteIterate : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace magd
