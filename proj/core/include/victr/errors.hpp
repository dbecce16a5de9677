#pragma once

#include <stdexcept>
#include <string>

namespace victr {

// Every domain failure derives from Error so callers can catch one type.
// The CLI maps groups of these to exit codes (tools/src/commands.hpp).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define VICTR_DECLARE_ERROR(Name, Base)      \
  class Name : public Base {                 \
   public:                                   \
    using Base::Base;                        \
  }

// numerics / head
VICTR_DECLARE_ERROR(ShapeError, Error);
VICTR_DECLARE_ERROR(ZeroNormError, Error);
VICTR_DECLARE_ERROR(NonFiniteError, Error);
VICTR_DECLARE_ERROR(RangeError, Error);
VICTR_DECLARE_ERROR(LabelError, Error);
VICTR_DECLARE_ERROR(ConfigError, Error);

// semantics
VICTR_DECLARE_ERROR(ParseError, Error);
VICTR_DECLARE_ERROR(DuplicateEntryError, Error);
VICTR_DECLARE_ERROR(UnknownCategoryError, Error);

// dataio
VICTR_DECLARE_ERROR(FormatError, Error);
VICTR_DECLARE_ERROR(MagicMismatchError, FormatError);
VICTR_DECLARE_ERROR(VersionError, FormatError);
VICTR_DECLARE_ERROR(TruncationError, FormatError);
VICTR_DECLARE_ERROR(ChecksumError, FormatError);
VICTR_DECLARE_ERROR(SpecError, Error);
VICTR_DECLARE_ERROR(InsufficientClipsError, Error);
VICTR_DECLARE_ERROR(IoError, Error);

// eval
VICTR_DECLARE_ERROR(DegenerateClassError, Error);
VICTR_DECLARE_ERROR(UnknownAblationError, Error);
VICTR_DECLARE_ERROR(DivergenceError, Error);

#undef VICTR_DECLARE_ERROR

}  // namespace victr
