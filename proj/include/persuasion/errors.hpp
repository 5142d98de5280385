#pragma once

#include <stdexcept>
#include <string>

namespace persuasion {

// Base for every domain failure raised by the library.
class ModelError : public std::runtime_error {
 public:
  explicit ModelError(const std::string& what) : std::runtime_error(what) {}
};

#define PERSUASION_ERROR(Name)                                       \
  class Name : public ModelError {                                   \
   public:                                                           \
    explicit Name(const std::string& what) : ModelError(#Name ": " + what) {} \
  };

PERSUASION_ERROR(InvalidDistribution)
PERSUASION_ERROR(ZeroProbabilityOutcome)
PERSUASION_ERROR(AssumptionViolation)
PERSUASION_ERROR(PreconditionViolation)
PERSUASION_ERROR(UnsupportedDimension)
PERSUASION_ERROR(InfeasiblePerturbation)
PERSUASION_ERROR(InternalInvariantFailure)
PERSUASION_ERROR(NoIndifferencePoint)
PERSUASION_ERROR(NoIntersection)
PERSUASION_ERROR(SecondICFail)
PERSUASION_ERROR(BudgetExceeded)
PERSUASION_ERROR(HypothesisFail)
PERSUASION_ERROR(BadRadius)

#undef PERSUASION_ERROR

}  // namespace persuasion
