#pragma once

#include <stdexcept>
#include <string>

namespace wildgas {

/// Base class of every error raised by the library. Each operation documents
/// which concrete subclasses it can throw.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define WILDGAS_DEFINE_ERROR(Name)          \
  class Name : public Error {               \
   public:                                  \
    explicit Name(const std::string& what)  \
        : Error(#Name ": " + what) {}       \
  }

WILDGAS_DEFINE_ERROR(InvalidArgument);
WILDGAS_DEFINE_ERROR(GridMismatch);
WILDGAS_DEFINE_ERROR(NonZeroMean);
WILDGAS_DEFINE_ERROR(PositivityViolated);
WILDGAS_DEFINE_ERROR(NonPositiveInitial);
WILDGAS_DEFINE_ERROR(StepFailure);
WILDGAS_DEFINE_ERROR(NotTraceFree);
WILDGAS_DEFINE_ERROR(BoundViolated);
WILDGAS_DEFINE_ERROR(NoAdmissibleAmplitude);
WILDGAS_DEFINE_ERROR(StepStalled);
WILDGAS_DEFINE_ERROR(EpsilonTooSmall);
WILDGAS_DEFINE_ERROR(PreconditionFailed);
WILDGAS_DEFINE_ERROR(NotSolenoidal);
WILDGAS_DEFINE_ERROR(InfeasibleProfile);
WILDGAS_DEFINE_ERROR(AdmissibilityFailed);
WILDGAS_DEFINE_ERROR(NonPositiveState);
WILDGAS_DEFINE_ERROR(BlowupSuspected);
WILDGAS_DEFINE_ERROR(SnapshotError);

#undef WILDGAS_DEFINE_ERROR

/// Raised by the staircase recursion when no admissible perturbation could
/// be found at a level. Carries the level index.
class StallAtLevel : public Error {
 public:
  StallAtLevel(int level, const std::string& what)
      : Error("StallAtLevel(" + std::to_string(level) + "): " + what), level_(level) {}
  int level() const { return level_; }

 private:
  int level_;
};

}  // namespace wildgas
