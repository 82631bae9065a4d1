#pragma once

#include <stdexcept>
#include <string>

namespace ugcn {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define UGCN_DEFINE_ERROR(Name)                                   \
  class Name : public Error {                                     \
   public:                                                        \
    explicit Name(const std::string& what) : Error(#Name ": " + what) {} \
  }

// diff-engine / nn-ops
UGCN_DEFINE_ERROR(ShapeMismatch);
UGCN_DEFINE_ERROR(InvalidAxis);
UGCN_DEFINE_ERROR(NonScalarOutput);
UGCN_DEFINE_ERROR(EvenKernel);

// skeleton-graph
UGCN_DEFINE_ERROR(DisconnectedGraph);
UGCN_DEFINE_ERROR(IndexOutOfRange);
UGCN_DEFINE_ERROR(InvalidMirror);

// model / training / inference
UGCN_DEFINE_ERROR(InvalidConfig);
UGCN_DEFINE_ERROR(EmptyDataset);
UGCN_DEFINE_ERROR(NonFiniteLoss);
UGCN_DEFINE_ERROR(SequenceTooShort);
UGCN_DEFINE_ERROR(TopologyMismatch);

// motion loss
UGCN_DEFINE_ERROR(IntervalTooLarge);
UGCN_DEFINE_ERROR(DimensionError);

// metrics
UGCN_DEFINE_ERROR(TooShort);
UGCN_DEFINE_ERROR(DegenerateFrame);

// data-io
UGCN_DEFINE_ERROR(ParseError);
UGCN_DEFINE_ERROR(SchemaMismatch);
UGCN_DEFINE_ERROR(NonFiniteValue);
UGCN_DEFINE_ERROR(VersionMismatch);
UGCN_DEFINE_ERROR(InvalidParams);
UGCN_DEFINE_ERROR(PointBehindCamera);

#undef UGCN_DEFINE_ERROR

}  // namespace ugcn
