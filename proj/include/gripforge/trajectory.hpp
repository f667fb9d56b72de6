#pragma once

#include <vector>

#include "gripforge/errors.hpp"
#include "gripforge/geometry.hpp"
#include "gripforge/synergy.hpp"

namespace gripforge {

/// Time-indexed hand-object sequence: per frame the object pose, the hand
/// control, and the hand joint world positions.
struct Trajectory {
  double frame_rate = 30.0;
  std::vector<Pose> object_poses;
  std::vector<HandControl> controls;
  std::vector<std::vector<Vec3>> joint_positions;

  int length() const { return static_cast<int>(object_poses.size()); }

  void validate() const {
    if (object_poses.size() != controls.size() ||
        object_poses.size() != joint_positions.size()) {
      throw LengthMismatch("Trajectory: channel lengths differ");
    }
  }

  /// Frames [first, length) as a new trajectory.
  Trajectory slice_from(int first) const {
    if (first < 0 || first > length()) {
      throw OutOfRange("Trajectory::slice_from: bad start frame");
    }
    Trajectory out;
    out.frame_rate = frame_rate;
    out.object_poses.assign(object_poses.begin() + first, object_poses.end());
    out.controls.assign(controls.begin() + first, controls.end());
    out.joint_positions.assign(joint_positions.begin() + first,
                               joint_positions.end());
    return out;
  }
};

}  // namespace gripforge
