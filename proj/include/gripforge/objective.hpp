#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "gripforge/errors.hpp"
#include "gripforge/geometry.hpp"
#include "gripforge/sim.hpp"
#include "gripforge/spline.hpp"
#include "gripforge/trajectory.hpp"

namespace gripforge {

/// Weights of the sequence loss. The velocity-style terms carry their
/// linear/angular sub-weights directly; eta mixes rotation against
/// translation inside the object pose term, w_tip up-weights fingertips in
/// the hand joint term.
struct LossWeights {
  double op = 1.0;
  double eta = 0.2;
  double ov_lin = 1.0;
  double ov_ang = 1.0;
  double hj = 1.0;
  double w_tip = 2.0;
  double ct = 0.3;
  double hc = 1e-3;
  double hv_lin = 1e-3;
  double hv_ang = 1e-3;
};

inline double object_pose_loss(const Pose& sim, const Pose& ref, double eta) {
  return eta * geodesic_distance(sim.rotation, ref.rotation) +
         (1.0 - eta) * (sim.translation - ref.translation).norm();
}

inline double object_velocity_loss(const Twist& sim, const Twist& ref,
                                   const LossWeights& w) {
  return w.ov_lin * (sim.linear - ref.linear).squaredNorm() +
         w.ov_ang * (sim.angular - ref.angular).squaredNorm();
}

inline double hand_joint_loss(const std::vector<Vec3>& sim_joints,
                              const std::vector<Vec3>& ref_joints,
                              const std::vector<int>& fingertip_indices,
                              double w_tip) {
  if (sim_joints.size() != ref_joints.size()) {
    throw JointCountMismatch("hand_joint_loss: joint count mismatch");
  }
  std::vector<double> weight(sim_joints.size(), 1.0);
  for (int idx : fingertip_indices) {
    if (idx < 0 || idx >= static_cast<int>(weight.size())) {
      throw UnknownFingertip("hand_joint_loss: fingertip index out of range");
    }
    weight[idx] = w_tip;
  }
  double total = 0.0, norm = 0.0;
  for (std::size_t i = 0; i < sim_joints.size(); ++i) {
    total += weight[i] * (sim_joints[i] - ref_joints[i]).norm();
    norm += weight[i];
  }
  return total / norm;
}

/// A pre-computed contact target: fingertip id and the matched point on the
/// object surface, in object-local coordinates.
struct ContactTarget {
  int fingertip = 0;  // index into the gripper's fingertip list
  Vec3 local_point = Vec3::Zero();
};

inline double contact_loss(const std::vector<Vec3>& sim_fingertips,
                           const Pose& sim_object,
                           const std::vector<ContactTarget>& targets) {
  if (targets.empty()) return 0.0;
  double total = 0.0;
  for (const auto& t : targets) {
    if (t.fingertip < 0 || t.fingertip >= static_cast<int>(sim_fingertips.size())) {
      throw UnknownFingertip("contact_loss: fingertip id out of range");
    }
    total += (sim_fingertips[t.fingertip] - sim_object * t.local_point).norm();
  }
  return total / static_cast<double>(targets.size());
}

inline double hand_consistency_loss(const HandControl& current,
                                    const HandControl& previous) {
  if (current.coeffs.size() != previous.coeffs.size()) {
    throw DimensionMismatch("hand_consistency_loss: coefficient dims differ");
  }
  return (current.coeffs - previous.coeffs).squaredNorm() +
         geodesic_distance(current.wrist.rotation, previous.wrist.rotation);
}

inline double hand_velocity_loss(const std::vector<Twist>& body_twists,
                                 const LossWeights& w) {
  double total = 0.0;
  for (const auto& t : body_twists) {
    total += w.hv_lin * t.linear.squaredNorm() +
             w.hv_ang * t.angular.squaredNorm();
  }
  return total;
}

// ---------------------------------------------------------------------------
// Reference data and contact-target extraction

/// Reference streams over a full working sequence.
struct ReferenceSequence {
  std::vector<Pose> object_poses;
  std::vector<Twist> object_twists;
  std::vector<std::vector<Vec3>> hand_joints;
  std::vector<std::vector<ContactTarget>> contact_targets;

  int length() const { return static_cast<int>(object_poses.size()); }
};

/// Reference slice covering one optimization window.
struct ReferenceWindow {
  int first_frame = 0;  // index of the frame the snapshot sits on
  std::vector<Pose> object_poses;
  std::vector<Twist> object_twists;
  std::vector<std::vector<Vec3>> hand_joints;
  std::vector<std::vector<ContactTarget>> contact_targets;

  int length() const { return static_cast<int>(object_poses.size()); }
};

inline ReferenceWindow slice_reference(const ReferenceSequence& ref,
                                       int first, int last) {
  if (first < 0 || last >= ref.length() || first > last) {
    throw OutOfRange("slice_reference: bad frame range");
  }
  ReferenceWindow w;
  w.first_frame = first;
  w.object_poses.assign(ref.object_poses.begin() + first,
                        ref.object_poses.begin() + last + 1);
  w.object_twists.assign(ref.object_twists.begin() + first,
                         ref.object_twists.begin() + last + 1);
  w.hand_joints.assign(ref.hand_joints.begin() + first,
                       ref.hand_joints.begin() + last + 1);
  w.contact_targets.assign(ref.contact_targets.begin() + first,
                           ref.contact_targets.begin() + last + 1);
  return w;
}

/// Fingertips whose reference position lies within `threshold` of the
/// reference-posed object surface, paired with the closest surface point in
/// object-local coordinates.
inline std::vector<std::vector<ContactTarget>> extract_contact_targets(
    const Trajectory& ref, const ObjectModel& object,
    const std::vector<int>& fingertip_joint_indices, double threshold) {
  if (!(threshold > 0.0)) {
    throw OutOfRange("extract_contact_targets: threshold must be > 0");
  }
  ref.validate();
  std::vector<std::vector<ContactTarget>> out(ref.length());
  for (int f = 0; f < ref.length(); ++f) {
    Pose inv = ref.object_poses[f].inverse();
    for (std::size_t k = 0; k < fingertip_joint_indices.size(); ++k) {
      int idx = fingertip_joint_indices[k];
      if (idx >= static_cast<int>(ref.joint_positions[f].size())) {
        throw UnknownFingertip("extract_contact_targets: bad fingertip index");
      }
      Vec3 local = inv * ref.joint_positions[f][idx];
      SurfacePoint sp = closest_surface(object.geometry, local);
      if (sp.sdf <= threshold) {
        out[f].push_back({static_cast<int>(k), sp.point});
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Window fitness

/// Black-box fitness of a keyframe track over one window: interpolate the
/// controls, roll out from the snapshot, accumulate the weighted per-frame
/// losses. Simulation blow-ups map to +infinity so the optimizer ranks them
/// worst instead of aborting.
class WindowFitnessEvaluator {
 public:
  WindowFitnessEvaluator(const Scene& scene, const SynergyBasis& basis,
                         LossWeights weights, double frame_dt = 1.0 / 30.0)
      : sim_(scene, basis),
        weights_(weights),
        frame_dt_(frame_dt),
        fingertip_indices_(scene.gripper.fingertip_joint_indices()) {}

  /// The spline spans [track.first, track.last]; the snapshot must be the
  /// state at the window's first frame. Frame indices in the track are
  /// expressed in the reference sequence's frame numbering.
  double operator()(const KeyframeTrack& track, const ReferenceWindow& window,
                    const SimState& snapshot) {
    int first = track.frames.front();
    int last = track.frames.back();
    if (window.first_frame != first ||
        window.length() != last - first + 1) {
      throw LengthMismatch("window fitness: reference window span mismatch");
    }
    TrackSpline spline(track);
    std::vector<HandControl> controls(last - first);
    for (int f = first; f < last; ++f) {
      controls[f - first] = spline.at(static_cast<double>(f));
    }
    RolloutResult roll;
    try {
      roll = sim_.rollout(snapshot, controls, frame_dt_);
    } catch (const SimDiverged&) {
      ++divergences_;
      return std::numeric_limits<double>::infinity();
    }

    double total = 0.0;
    for (int f = first + 1; f <= last; ++f) {
      const SimState& s = roll.states[f - first - 1];
      int w_idx = f - first;
      total += weights_.op * object_pose_loss(s.object,
                                              window.object_poses[w_idx],
                                              weights_.eta);
      total += object_velocity_loss(s.object_twist,
                                    window.object_twists[w_idx], weights_);
      HandKinematics kin = sim_.kinematics(s);
      total += weights_.hj * hand_joint_loss(kin.joint_positions,
                                             window.hand_joints[w_idx],
                                             fingertip_indices_, weights_.w_tip);
      total += weights_.ct * contact_loss(kin.fingertips, s.object,
                                          window.contact_targets[w_idx]);
      total += hand_velocity_loss(sim_.hand_body_twists(s), weights_);
      if (f - first - 1 >= 1) {
        total += weights_.hc * hand_consistency_loss(controls[f - first - 1],
                                                     controls[f - first - 2]);
      }
    }
    return total;
  }

  long divergences() const { return divergences_; }

 private:
  Simulator sim_;
  LossWeights weights_;
  double frame_dt_ = 1.0 / 30.0;
  std::vector<int> fingertip_indices_;
  long divergences_ = 0;
};

}  // namespace gripforge
