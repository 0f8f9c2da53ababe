#pragma once

#include <stdexcept>
#include <string>

namespace barl {

// Precondition / dimension-contract violations.
struct ContractViolation : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Kernel matrix could not be factorized even at the jitter cap.
struct FactorizationFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Hyperparameter fit failed for one output dimension.
struct FitFailure : std::runtime_error {
  FitFailure(const std::string& msg, int dim_in)
      : std::runtime_error(msg), dim(dim_in) {}
  int dim;
};

// A rollout produced non-finite values during planning.
struct PlanningError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace barl
