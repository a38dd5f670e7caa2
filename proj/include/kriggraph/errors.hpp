#pragma once

#include <stdexcept>
#include <string>

namespace kriggraph {

/// Input failed a documented precondition (ranges, symmetry, ids).
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Operand shapes do not compose.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Function evaluated outside its domain (log of non-positive, division by zero).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// API misuse, e.g. backward() from a non-scalar root.
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Brute-force routine asked to exceed its enumeration limits.
class CapacityError : public std::length_error {
 public:
  using std::length_error::length_error;
};

/// Checkpoint manifest and blob disagree, or the blob is damaged.
class IntegrityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A loss has no terms to average (e.g. every node isolated).
class LossUndefinedError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class GenerationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Training diverged; message carries the diagnostic dump.
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace kriggraph
