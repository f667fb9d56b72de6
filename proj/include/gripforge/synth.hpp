#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "gripforge/rng.hpp"
#include "gripforge/scenario.hpp"

namespace gripforge {

enum class DemoTask { grasp_lift, press_stabilize };

inline const char* to_string(DemoTask t) {
  return t == DemoTask::grasp_lift ? "grasp_lift" : "press_stabilize";
}

inline DemoTask demo_task_from_string(const std::string& s) {
  if (s == "grasp_lift") return DemoTask::grasp_lift;
  if (s == "press_stabilize") return DemoTask::press_stabilize;
  throw ParseError("unknown task '" + s + "'");
}

enum class CorruptionKind { fingertip_gap, interpenetration, jitter, pose_drift };

inline const char* to_string(CorruptionKind k) {
  switch (k) {
    case CorruptionKind::fingertip_gap: return "fingertip_gap";
    case CorruptionKind::interpenetration: return "interpenetration";
    case CorruptionKind::jitter: return "jitter";
    case CorruptionKind::pose_drift: return "pose_drift";
  }
  return "?";
}

inline CorruptionKind corruption_kind_from_string(const std::string& s) {
  if (s == "fingertip_gap") return CorruptionKind::fingertip_gap;
  if (s == "interpenetration") return CorruptionKind::interpenetration;
  if (s == "jitter") return CorruptionKind::jitter;
  if (s == "pose_drift") return CorruptionKind::pose_drift;
  throw ParseError("unknown corruption kind '" + s + "'");
}

/// Controlled injection of a vision-style flaw into a valid demonstration.
/// from/to are inclusive frame indices; to = -1 means the last frame.
struct CorruptionSpec {
  CorruptionKind kind = CorruptionKind::fingertip_gap;
  double magnitude = 0.02;  // meters (or radians for jittered rotation)
  int from = 0;
  int to = -1;
};

namespace detail {

inline double smoothstep01(double x) {
  x = std::clamp(x, 0.0, 1.0);
  return x * x * (3.0 - 2.0 * x);
}

struct GraspScript {
  double wrist_z_high = 0.150;
  double wrist_z_grasp = 0.105;
  double grip_force = 2.0;       // per-finger normal force target, N
  double close_rate = 0.03;      // coefficient units per frame
  double extra_close = 0.035;    // squeeze margin once gripping
  double lift_height = 0.105;
  int approach_frames = 14;
  int close_frames = 13;
  int lift_frames = 24;
  int hold_frames = 12;
  double press_coeff = 0.50;     // press task: finger curl while pushing down
  double press_force = 2.0;      // total downward force target, N
  double press_descent = 0.0012; // m per frame while seeking contact
};

}  // namespace detail

/// Builds the default desk scene: parametric gripper above a ground plane
/// and a 5 cm cube of 0.066 kg.
inline Scenario make_default_scenario(std::uint64_t seed,
                                      int n_coeffs = 4) {
  Scenario sc;
  sc.metadata.seed = seed;
  sc.scene.gripper.params = GripperParams{};
  sc.basis = make_grasp_basis(sc.scene.gripper.n_joints(), n_coeffs,
                              mix_seed(seed, 0xba515));
  sc.scene.gripper.joint_lower = sc.basis.lower;
  sc.scene.gripper.joint_upper = sc.basis.upper;
  sc.scene.object = ObjectModel::make(BoxShape{Vec3(0.025, 0.025, 0.025)}, 0.066);
  sc.trajectory.frame_rate = 30.0;
  return sc;
}

/// Scripts a physically valid demonstration by rolling a feedback controller
/// through the simulator and recording the result as ground truth. The
/// script retries with perturbed constants when the rollout fails its own
/// success checks.
inline Scenario synthesize_demo(DemoTask task, std::uint64_t seed) {
  Rng rng(mix_seed(seed, task == DemoTask::grasp_lift ? 0x917a5 : 0x93e55));
  Scenario base = make_default_scenario(seed);
  base.metadata.name = to_string(task);

  // Seeded variation: object placement and script pacing.
  const double obj_x = rng.uniform(-0.008, 0.008);
  const double obj_y = rng.uniform(-0.008, 0.008);
  const double obj_yaw = rng.uniform(-0.15, 0.15);
  const int extra_frames = static_cast<int>(rng.next_u64() % 5);

  // Spawn at the settled penalty-contact height so the recording starts at
  // static equilibrium.
  const auto* box = std::get_if<BoxShape>(&base.scene.object.geometry);
  const double rest_z = box ? box->half.z() : bounding_radius(base.scene.object.geometry);
  const double settle = base.scene.object.mass * std::abs(base.scene.gravity.z()) /
                        base.scene.contact.stiffness;
  Pose spawn{Rotation::about_axis(Vec3::UnitZ(), obj_yaw),
             Vec3(obj_x, obj_y, rest_z - settle)};

  std::string failure;
  for (int attempt = 0; attempt < 5; ++attempt) {
    detail::GraspScript cs;
    cs.grip_force += 0.4 * attempt;
    cs.wrist_z_grasp -= 0.002 * attempt;
    cs.close_rate += 0.01 * attempt;
    cs.hold_frames += extra_frames;

    Scenario sc = base;
    Simulator sim(sc.scene, sc.basis);
    const int n_coeffs = sc.basis.coeffs();
    const int n_fingers = sc.scene.gripper.n_fingers();

    const int total = task == DemoTask::grasp_lift
                          ? cs.approach_frames + cs.close_frames +
                                cs.lift_frames + cs.hold_frames
                          : cs.approach_frames + cs.close_frames + 36 +
                                extra_frames;

    HandControl control;
    control.coeffs = VecX::Zero(n_coeffs);
    control.wrist =
        Pose{Rotation::identity(), Vec3(obj_x, obj_y, cs.wrist_z_high)};

    SimState state = sim.make_initial_state(control, spawn);
    sim.set_state(state);

    Trajectory& traj = sc.trajectory;
    traj.object_poses.clear();
    traj.controls.clear();
    traj.joint_positions.clear();

    std::vector<ContactRecord> last_contacts;
    double theta_close = 0.0;
    bool grip_latched = false;
    int grip_streak = 0;
    double press_z = 0.0;
    bool press_latched = false;

    auto finger_min_force = [&]() {
      std::vector<double> per(n_fingers, 0.0);
      for (const auto& r : last_contacts) {
        if (r.body_a > 0) per[(r.body_a - 1) / 2] += r.normal_force;
      }
      double lo = per.empty() ? 0.0 : per[0];
      for (double v : per) lo = std::min(lo, v);
      return lo;
    };
    auto downward_force = [&]() {
      double f = 0.0;
      for (const auto& r : last_contacts) {
        if (r.body_a >= 0) f += -r.wrench_force.z();
      }
      return f;
    };

    const int sub = static_cast<int>(std::lround(1.0 / traj.frame_rate / Simulator::kDt));
    for (int f = 0; f < total; ++f) {
      // Command for this frame.
      if (task == DemoTask::grasp_lift) {
        if (f < cs.approach_frames) {
          double u = detail::smoothstep01(static_cast<double>(f) /
                                          cs.approach_frames);
          control.wrist.translation.z() =
              cs.wrist_z_high + u * (cs.wrist_z_grasp - cs.wrist_z_high);
        } else if (f < cs.approach_frames + cs.close_frames) {
          control.wrist.translation.z() = cs.wrist_z_grasp;
          if (!grip_latched) {
            if (finger_min_force() >= cs.grip_force) {
              if (++grip_streak >= 2) {
                theta_close += cs.extra_close;
                grip_latched = true;
              }
            } else {
              grip_streak = 0;
              theta_close += cs.close_rate;
            }
          }
        } else if (f < cs.approach_frames + cs.close_frames + cs.lift_frames) {
          double u = detail::smoothstep01(
              static_cast<double>(f - cs.approach_frames - cs.close_frames) /
              cs.lift_frames);
          control.wrist.translation.z() = cs.wrist_z_grasp + u * cs.lift_height;
        }
        control.coeffs[0] = theta_close;
      } else {  // press_stabilize
        double press_start_z =
            0.052 + 0.048 * std::cos(0.35) + 0.038 * std::cos(0.70);
        if (f < cs.approach_frames) {
          double u = detail::smoothstep01(static_cast<double>(f) /
                                          cs.approach_frames);
          control.wrist.translation.z() =
              cs.wrist_z_high + u * (press_start_z - cs.wrist_z_high);
          control.coeffs[0] = u * cs.press_coeff;
          press_z = press_start_z;
        } else {
          control.coeffs[0] = cs.press_coeff;
          if (!press_latched) {
            if (downward_force() >= cs.press_force) {
              press_latched = true;
            } else {
              press_z -= cs.press_descent;
            }
          }
          control.wrist.translation.z() = press_z;
        }
      }

      traj.object_poses.push_back(sim.state().object);
      traj.controls.push_back(control);
      traj.joint_positions.push_back(sim.hand_joint_positions(sim.state()));

      if (f + 1 < total) {
        for (int s = 0; s < sub; ++s) {
          last_contacts = sim.step(control, f);
        }
      }
    }

    // Success checks on the recorded rollout.
    const Pose& first = traj.object_poses.front();
    const Pose& last_pose = traj.object_poses.back();
    double max_tilt = 0.0;
    for (const auto& p : traj.object_poses) {
      max_tilt = std::max(max_tilt,
                          geodesic_distance(p.rotation, first.rotation));
    }
    bool ok = true;
    if (task == DemoTask::grasp_lift) {
      double lift = last_pose.translation.z() - first.translation.z();
      if (lift < 0.09) {
        ok = false;
        failure = "lift fell short (" + std::to_string(lift) + " m)";
      }
      if (max_tilt > 0.35) {
        ok = false;
        failure = "object tilted during lift";
      }
    } else {
      double drift = (last_pose.translation - first.translation).norm();
      if (drift > 0.005) {
        ok = false;
        failure = "object drifted under press";
      }
      if (max_tilt > 0.09) {
        ok = false;
        failure = "object tilted under press";
      }
      if (!press_latched) {
        ok = false;
        failure = "press force never reached";
      }
    }
    if (ok) return sc;
  }
  throw TaskScriptFailed("synthesize_demo: " + failure);
}

// ---------------------------------------------------------------------------
// Corruption

namespace detail {

/// Mean fingertip-center signed distance to the object surface under
/// kinematic placement of the given control.
inline double mean_tip_sdf(const Scenario& sc, const HandControl& control,
                           const Pose& object_pose) {
  HandKinematics kin =
      sc.scene.gripper.fk(control.wrist, decode(sc.basis, control));
  Pose inv = object_pose.inverse();
  double total = 0.0;
  for (const auto& tip : kin.fingertips) {
    total += signed_distance(sc.scene.object.geometry, inv * tip) -
             sc.scene.gripper.params.link_radius;
  }
  return total / static_cast<double>(kin.fingertips.size());
}

}  // namespace detail

/// Injects the requested flaw. The object reference stream is never made
/// dynamically consistent with the corrupted hand; the corrupted scenario is
/// supposed to fail a naive replay.
inline Scenario corrupt(const Scenario& input, const CorruptionSpec& spec) {
  input.validate();
  if (!(spec.magnitude > 0.0)) {
    throw OutOfRange("corrupt: magnitude must be > 0");
  }
  const int T = input.trajectory.length();
  int from = spec.from;
  int to = spec.to < 0 ? T - 1 : spec.to;
  if (from < 0 || to >= T || from > to) {
    throw SpanOutOfRange("corrupt: frame span outside trajectory");
  }

  Scenario out = input;
  Trajectory& traj = out.trajectory;

  if (spec.kind == CorruptionKind::fingertip_gap ||
      spec.kind == CorruptionKind::interpenetration) {
    // Most-closed frame within the span anchors the coefficient Jacobian.
    int anchor = from;
    double best = -std::numeric_limits<double>::infinity();
    for (int f = from; f <= to; ++f) {
      double closure = decode(input.basis, input.trajectory.controls[f]).sum();
      if (closure > best) {
        best = closure;
        anchor = f;
      }
    }
    const double h = 0.02;
    HandControl probe = input.trajectory.controls[anchor];
    probe.coeffs[0] += h;
    double up = detail::mean_tip_sdf(input, probe, input.trajectory.object_poses[anchor]);
    probe.coeffs[0] -= 2.0 * h;
    double down = detail::mean_tip_sdf(input, probe, input.trajectory.object_poses[anchor]);
    double jac = (up - down) / (2.0 * h);  // d(sdf)/d(theta_1), negative
    if (std::abs(jac) < 1e-6) {
      throw TaskScriptFailed("corrupt: degenerate closure Jacobian");
    }
    double delta = spec.magnitude / jac;  // opens the grip
    if (spec.kind == CorruptionKind::interpenetration) delta = -delta;

    int ramp = std::min(2, std::max(1, (to - from) / 4));
    for (int f = from; f <= to; ++f) {
      double w = 1.0;
      if (f - from < ramp) w = static_cast<double>(f - from + 1) / (ramp + 1);
      if (to - f < ramp) w = std::min(w, static_cast<double>(to - f + 1) / (ramp + 1));
      traj.controls[f].coeffs[0] += w * delta;
      traj.joint_positions[f] =
          out.scene.gripper
              .fk(traj.controls[f].wrist, decode(out.basis, traj.controls[f]))
              .joint_positions;
    }
  } else if (spec.kind == CorruptionKind::jitter) {
    Rng rng(mix_seed(input.metadata.seed, 0x71773 + static_cast<int>(spec.kind)));
    for (int f = from; f <= to; ++f) {
      for (int i = 0; i < traj.controls[f].coeffs.size(); ++i) {
        traj.controls[f].coeffs[i] += spec.magnitude * rng.normal();
      }
      Vec3 dpos(rng.normal(), rng.normal(), rng.normal());
      traj.controls[f].wrist.translation += spec.magnitude * dpos;
      Vec3 drot(rng.normal(), rng.normal(), rng.normal());
      traj.controls[f].wrist.rotation =
          rotation_vector_exp(spec.magnitude * drot) *
          traj.controls[f].wrist.rotation;
      for (auto& p : traj.joint_positions[f]) {
        Vec3 dj(rng.normal(), rng.normal(), rng.normal());
        p += spec.magnitude * dj;
      }
    }
  } else {  // pose_drift
    for (int f = from; f <= to; ++f) {
      double u = static_cast<double>(f - from) / std::max(1, to - from);
      double w = std::sin(M_PI * u);
      traj.object_poses[f].translation.x() += spec.magnitude * w * w;
    }
  }

  std::string desc = std::string(to_string(spec.kind)) + ":" +
                     std::to_string(spec.magnitude) + "@" +
                     std::to_string(from) + "-" + std::to_string(to);
  out.metadata.corruption = out.metadata.corruption.empty()
                                ? desc
                                : out.metadata.corruption + ";" + desc;
  return out;
}

/// Max fingertip-sphere penetration across a frame span under kinematic
/// placement of the recorded controls against the recorded object poses.
inline double kinematic_penetration(const Scenario& sc, int from = 0,
                                    int to = -1) {
  sc.validate();
  const int T = sc.trajectory.length();
  if (to < 0) to = T - 1;
  if (from < 0 || to >= T || from > to) {
    throw SpanOutOfRange("kinematic_penetration: bad span");
  }
  double worst = 0.0;
  for (int f = from; f <= to; ++f) {
    HandKinematics kin = sc.scene.gripper.fk(
        sc.trajectory.controls[f].wrist,
        decode(sc.basis, sc.trajectory.controls[f]));
    Pose inv = sc.trajectory.object_poses[f].inverse();
    for (const auto& tip : kin.fingertips) {
      double sdf = signed_distance(sc.scene.object.geometry, inv * tip);
      worst = std::max(worst, sc.scene.gripper.params.link_radius - sdf);
    }
  }
  return worst;
}

}  // namespace gripforge
