#pragma once

#include <stdexcept>
#include <string>

namespace saflab {

// Precondition violations on user-supplied values.
struct InvalidArgument : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// TLS-family algorithms need a finite noise-variance ratio.
struct ThetaUndefined : InvalidArgument {
  ThetaUndefined() : InvalidArgument("theta undefined: input noise variance is zero") {}
};

// NMSD needs a plant with nonzero energy.
struct DegeneratePlant : InvalidArgument {
  DegeneratePlant() : InvalidArgument("degenerate plant: ||h|| = 0") {}
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct UnsupportedFormat : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Numerical diagnostics from the theory module.
struct NoLocalMinimum : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct UnstableStep : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IllConditioned : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace saflab
