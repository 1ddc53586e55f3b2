#pragma once

#include <stdexcept>
#include <string>

namespace rjepa {

// Dimension disagreement between operands.
struct ShapeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// NaN/Inf where a finite value is required.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Rank-deficient or badly conditioned linear system.
struct SingularityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Input violates a documented precondition (symmetry, stability, ranges).
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Request exceeds a hard size guard.
struct CapacityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed on-disk data; message carries the byte offset where known.
struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Time-indexed states fed out of order.
struct SequencingError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Training loss exceeded the divergence guard or went non-finite.
struct DivergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace rjepa
