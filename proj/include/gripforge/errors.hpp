#pragma once

#include <stdexcept>
#include <string>

namespace gripforge {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

#define GRIPFORGE_DEFINE_ERROR(Name)        \
  struct Name : Error {                     \
    using Error::Error;                     \
  }

GRIPFORGE_DEFINE_ERROR(DimensionMismatch);
GRIPFORGE_DEFINE_ERROR(InvalidDimensions);
GRIPFORGE_DEFINE_ERROR(SequenceTooShort);
GRIPFORGE_DEFINE_ERROR(EmptySequence);
GRIPFORGE_DEFINE_ERROR(OutOfRange);
GRIPFORGE_DEFINE_ERROR(LengthMismatch);
GRIPFORGE_DEFINE_ERROR(JointCountMismatch);
GRIPFORGE_DEFINE_ERROR(JointSetMismatch);
GRIPFORGE_DEFINE_ERROR(UnknownFingertip);
GRIPFORGE_DEFINE_ERROR(MixedFrames);
GRIPFORGE_DEFINE_ERROR(TooFewKeyframes);
GRIPFORGE_DEFINE_ERROR(SceneMismatch);
GRIPFORGE_DEFINE_ERROR(EmptyList);
GRIPFORGE_DEFINE_ERROR(TaskScriptFailed);
GRIPFORGE_DEFINE_ERROR(SpanOutOfRange);
GRIPFORGE_DEFINE_ERROR(ParseError);
GRIPFORGE_DEFINE_ERROR(VersionUnsupported);
GRIPFORGE_DEFINE_ERROR(IoError);

#undef GRIPFORGE_DEFINE_ERROR

// Simulation blow-up; carries the frame index when raised inside a rollout.
struct SimDiverged : Error {
  explicit SimDiverged(const std::string& msg, int frame = -1)
      : Error(msg), frame_index(frame) {}
  int frame_index;
};

}  // namespace gripforge
