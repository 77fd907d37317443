#pragma once

#include <stdexcept>
#include <string>

namespace sshoot {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define SSHOOT_DECLARE_ERROR(Name)             \
  class Name : public Error {                  \
   public:                                     \
    explicit Name(const std::string& what)     \
        : Error(std::string(#Name ": ") + what) {} \
  };

SSHOOT_DECLARE_ERROR(DomainError)
SSHOOT_DECLARE_ERROR(DimensionMismatch)
SSHOOT_DECLARE_ERROR(RankDeficient)
SSHOOT_DECLARE_ERROR(NotSymmetric)
SSHOOT_DECLARE_ERROR(SLCViolation)
SSHOOT_DECLARE_ERROR(SingularArcDegenerate)
SSHOOT_DECLARE_ERROR(NoConvergence)
SSHOOT_DECLARE_ERROR(StepsTooFew)
SSHOOT_DECLARE_ERROR(StructureDegenerate)
SSHOOT_DECLARE_ERROR(InvalidStructure)
SSHOOT_DECLARE_ERROR(GridMismatch)
SSHOOT_DECLARE_ERROR(InsufficientData)
SSHOOT_DECLARE_ERROR(InvalidParams)
SSHOOT_DECLARE_ERROR(DegeneratePoint)
SSHOOT_DECLARE_ERROR(Diverged)
SSHOOT_DECLARE_ERROR(NoStructure)
SSHOOT_DECLARE_ERROR(ConfigError)

#undef SSHOOT_DECLARE_ERROR

/// Raised by the integrator when the feedback solve fails; keeps the time.
class IntegrationFailure : public Error {
 public:
  IntegrationFailure(double t, const std::string& what)
      : Error("at t = " + std::to_string(t) + ": " + what), time_(t) {}
  double time() const { return time_; }

 private:
  double time_;
};

}  // namespace sshoot
