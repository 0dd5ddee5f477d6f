#pragma once

#include <stdexcept>
#include <string>

namespace nhqb {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual const char* kind() const noexcept { return "error"; }
};

#define NHQB_ERROR(Name, label)                               \
  class Name : public Error {                                 \
   public:                                                    \
    using Error::Error;                                       \
    const char* kind() const noexcept override { return label; } \
  };

NHQB_ERROR(DomainError, "domain error")
NHQB_ERROR(ValidationError, "validation error")
NHQB_ERROR(ConvergenceError, "convergence error")
NHQB_ERROR(ResolutionError, "resolution error")
NHQB_ERROR(SingularityError, "singularity error")
NHQB_ERROR(ExceptionalPointError, "exceptional point error")
NHQB_ERROR(BranchError, "branch error")
NHQB_ERROR(ConsistencyError, "internal consistency error")

#undef NHQB_ERROR

}  // namespace nhqb
