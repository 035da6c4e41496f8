#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace macscale {

// Invalid model or malformed input.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Argument outside the documented domain (z <= 0, n > n_max, ...).
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Solver failure, blow-up or singular system.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Collects non-fatal warnings (near-singular brackets, z outside the
// transform radius). Passing nullptr to an operation discards them.
struct Diagnostics {
  std::vector<std::string> warnings;

  void warn(std::string msg) { warnings.push_back(std::move(msg)); }
};

inline void warn(Diagnostics* diag, std::string msg) {
  if (diag) diag->warn(std::move(msg));
}

}  // namespace macscale
