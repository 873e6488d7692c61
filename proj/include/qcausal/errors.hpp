#pragma once

#include <stdexcept>
#include <string>

namespace qcausal {

// Factor indices, permutations or shapes that do not fit the matrix they annotate.
class LayoutError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Dimension products that overflow the platform index type.
class DimensionError : public LayoutError {
 public:
  using LayoutError::LayoutError;
};

// A caller broke a documented precondition (missing pieces, bad channel dims, ...).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Malformed input files. The message carries line/field context.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A process matrix that failed validation was handed to discovery.
class RejectedInput : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace qcausal
