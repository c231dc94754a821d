#ifndef SCHEMARL_ERRORS_HPP_
#define SCHEMARL_ERRORS_HPP_

#include <stdexcept>

namespace schemarl {

// Raised when a caller breaks a documented precondition.
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Schema logits cannot move between tasks with different horizons or skill
// vocabularies.
class TransferIncompatible : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed file contents (checkpoints, schema files, configs).
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace schemarl

#endif  // SCHEMARL_ERRORS_HPP_
