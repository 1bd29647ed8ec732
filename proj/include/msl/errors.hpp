#pragma once

#include <stdexcept>
#include <string>

namespace msl {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define MSL_DEFINE_ERROR(Name)          \
  class Name : public Error {           \
   public:                              \
    using Error::Error;                 \
  }

MSL_DEFINE_ERROR(InvalidArgument);
MSL_DEFINE_ERROR(DegenerateGradient);
MSL_DEFINE_ERROR(BoundaryProximity);
MSL_DEFINE_ERROR(EmptySampleSet);
MSL_DEFINE_ERROR(NotConverged);
MSL_DEFINE_ERROR(FlatnessViolated);
MSL_DEFINE_ERROR(DegenerateSample);
MSL_DEFINE_ERROR(NonHarmonicFit);
MSL_DEFINE_ERROR(ScaleTooFine);
MSL_DEFINE_ERROR(PreconditionUnmet);

#undef MSL_DEFINE_ERROR

}  // namespace msl
