#pragma once

#include <stdexcept>
#include <string>

namespace hyper {

/// Base class for every domain error raised by the library. The CLI maps
/// these to exit code 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define HYPER_DEFINE_ERROR(Name)             \
  class Name : public Error {                \
   public:                                   \
    using Error::Error;                      \
  }

HYPER_DEFINE_ERROR(ArityConflict);
HYPER_DEFINE_ERROR(EmptyFile);
HYPER_DEFINE_ERROR(ParseError);
HYPER_DEFINE_ERROR(UnknownEntity);
HYPER_DEFINE_ERROR(UnknownRelation);
HYPER_DEFINE_ERROR(PositionOutOfRange);
HYPER_DEFINE_ERROR(EmptyGraph);
HYPER_DEFINE_ERROR(ShapeMismatch);
HYPER_DEFINE_ERROR(IdOutOfRange);
HYPER_DEFINE_ERROR(NotScalar);
HYPER_DEFINE_ERROR(ExhaustedPool);
HYPER_DEFINE_ERROR(TruthNotInCandidates);
HYPER_DEFINE_ERROR(DegenerateSplit);
HYPER_DEFINE_ERROR(ConfigMismatch);
HYPER_DEFINE_ERROR(CheckpointError);
HYPER_DEFINE_ERROR(IoError);

#undef HYPER_DEFINE_ERROR

}  // namespace hyper
