#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "gripforge/errors.hpp"
#include "gripforge/geometry.hpp"
#include "gripforge/shapes.hpp"
#include "gripforge/synergy.hpp"

namespace gripforge {

// ---------------------------------------------------------------------------
// Models

/// Parametric articulated gripper: n fingers around a palm circle, each with
/// two flexion joints rotating about the finger's tangential axis, so
/// positive angles curl the tips toward the palm axis. Links collide as
/// capsules, the palm as a sphere. The wrist is driven kinematically.
struct GripperParams {
  int n_fingers = 3;  // 2 or 3
  double mount_radius = 0.055;
  double proximal_length = 0.048;
  double distal_length = 0.038;
  double link_radius = 0.008;
  double palm_radius = 0.02;
  double servo_kp = 50.0;  // position-servo gains, uniform across joints
  double servo_kv = 3.0;
  double joint_inertia = 8e-4;          // reflected inertia per joint
  double wrist_time_constant = 0.01;    // first-order wrist tracking
};

struct HandKinematics {
  struct Collider {
    int body;  // body index (0 = palm, then prox/dist per finger)
    Vec3 p0, p1;
    double radius;
  };
  Pose wrist;
  std::vector<Vec3> joint_origins;  // 2 per finger (mount, knuckle), world
  std::vector<Vec3> joint_axes;     // matching world axes
  std::vector<Vec3> fingertips;     // 1 per finger, world
  std::vector<Collider> colliders;  // palm sphere first, then finger links
  std::vector<Vec3> joint_positions;  // palm + per finger (mount, knuckle, tip)
};

struct GripperModel {
  GripperParams params;
  VecX joint_lower;  // copied from the synergy basis at scene assembly
  VecX joint_upper;

  int n_fingers() const { return params.n_fingers; }
  int n_joints() const { return 2 * params.n_fingers; }
  int n_bodies() const { return 1 + 2 * params.n_fingers; }

  double finger_azimuth(int i) const {
    return M_PI / 2.0 + 2.0 * M_PI * i / params.n_fingers;
  }

  std::string body_name(int body) const {
    if (body == 0) return "palm";
    int finger = (body - 1) / 2;
    bool distal = (body - 1) % 2 == 1;
    return "f" + std::to_string(finger) + (distal ? "_dist" : "_prox");
  }

  /// Hand "joint" positions used by losses and metrics:
  /// [palm, f0 mount, f0 knuckle, f0 tip, f1 mount, ...].
  std::vector<int> fingertip_joint_indices() const {
    std::vector<int> out;
    for (int i = 0; i < params.n_fingers; ++i) out.push_back(3 * i + 3);
    return out;
  }

  HandKinematics fk(const Pose& wrist, const VecX& q) const {
    if (q.size() != n_joints()) {
      throw DimensionMismatch("GripperModel::fk: joint vector size mismatch");
    }
    HandKinematics kin;
    kin.wrist = wrist;
    kin.joint_positions.push_back(wrist.translation);
    kin.colliders.push_back({0, wrist.translation, wrist.translation,
                             params.palm_radius});
    for (int i = 0; i < params.n_fingers; ++i) {
      double q1 = q[2 * i], q2 = q[2 * i + 1];
      Rotation az = Rotation::about_axis(Vec3::UnitZ(), finger_azimuth(i));
      Rotation r1 = az * Rotation::about_axis(Vec3::UnitY(), q1);
      Rotation r2 = r1 * Rotation::about_axis(Vec3::UnitY(), q2);

      Vec3 mount_local = az * Vec3(params.mount_radius, 0.0, 0.0);
      Vec3 o1 = wrist * mount_local;
      Vec3 o2 = wrist * (mount_local + r1 * Vec3(0, 0, -params.proximal_length));
      Vec3 tip = wrist * (mount_local + r1 * Vec3(0, 0, -params.proximal_length) +
                          r2 * Vec3(0, 0, -params.distal_length));
      Vec3 a1 = wrist.rotation * (az * Vec3::UnitY());
      Vec3 a2 = wrist.rotation * (r1 * Vec3::UnitY());

      kin.joint_origins.push_back(o1);
      kin.joint_origins.push_back(o2);
      kin.joint_axes.push_back(a1);
      kin.joint_axes.push_back(a2);
      kin.fingertips.push_back(tip);
      kin.colliders.push_back({1 + 2 * i, o1, o2, params.link_radius});
      kin.colliders.push_back({2 + 2 * i, o2, tip, params.link_radius});
      kin.joint_positions.push_back(o1);
      kin.joint_positions.push_back(o2);
      kin.joint_positions.push_back(tip);
    }
    return kin;
  }
};

struct ObjectModel {
  ShapeGeometry geometry;
  double mass = 0.066;
  Vec3 inertia_diag = Vec3::Zero();  // body frame, about COM

  static ObjectModel make(ShapeGeometry geometry, double mass) {
    if (!(mass > 0.0)) throw InvalidDimensions("ObjectModel: mass must be > 0");
    if (auto* cvx = std::get_if<ConvexShape>(&geometry)) {
      MassProperties mp = mass_properties(geometry, mass);
      for (auto& v : cvx->vertices) v -= mp.com;  // body origin at the COM
      finalize_convex(*cvx);
    }
    ObjectModel m;
    m.geometry = std::move(geometry);
    m.mass = mass;
    m.inertia_diag = mass_properties(m.geometry, mass).inertia_diag;
    for (int i = 0; i < 3; ++i) {
      int j = (i + 1) % 3, k = (i + 2) % 3;
      if (!(m.inertia_diag[i] > 0.0) ||
          m.inertia_diag[i] > m.inertia_diag[j] + m.inertia_diag[k] + 1e-12) {
        throw InvalidDimensions("ObjectModel: invalid inertia diagonal");
      }
    }
    return m;
  }
};

struct ContactParams {
  double stiffness = 5000.0;       // N/m
  double damping_ratio = 1.0;
  double friction = 0.8;
  double friction_vel = 1e-3;      // regularization velocity, m/s
};

struct Scene {
  GripperModel gripper;
  ObjectModel object;
  Vec3 gravity = Vec3(0, 0, -9.81);
  ContactParams contact;
  bool ground = true;
  double ground_height = 0.0;
};

// ---------------------------------------------------------------------------
// State and contact records

struct SimState {
  VecX q;   // finger joint angles
  VecX qd;
  Pose wrist;
  Twist wrist_twist;
  Pose object;
  Twist object_twist;
  double time = 0.0;
};

inline constexpr int kObjectBody = -2;
inline constexpr int kGroundBody = -1;

struct ContactRecord {
  int frame = -1;
  int body_a = kGroundBody;  // hand body index, or kGroundBody
  int body_b = kObjectBody;
  Vec3 point = Vec3::Zero();    // world, on the object surface
  Vec3 normal = Vec3::UnitZ();  // unit, object-outward
  double normal_force = 0.0;    // N, >= 0
  Eigen::Vector2d tangential = Eigen::Vector2d::Zero();  // N, (t1, t2) basis
  Vec3 wrench_force = Vec3::Zero();   // on the object, world frame
  Vec3 wrench_torque = Vec3::Zero();  // about the object COM
};

/// Deterministic tangent basis for a unit normal.
inline void tangent_basis(const Vec3& n, Vec3& t1, Vec3& t2) {
  int axis = 0;
  for (int i = 1; i < 3; ++i) {
    if (std::abs(n[i]) < std::abs(n[axis])) axis = i;
  }
  t1 = n.cross(Vec3::Unit(axis)).normalized();
  t2 = n.cross(t1);
}

/// Sum of per-contact wrenches at the object COM. All records must belong to
/// the same frame.
inline std::pair<Vec3, Vec3> net_object_wrench(
    const std::vector<ContactRecord>& records) {
  Vec3 force = Vec3::Zero(), torque = Vec3::Zero();
  for (const auto& r : records) {
    if (r.frame != records.front().frame) {
      throw MixedFrames("net_object_wrench: records span multiple frames");
    }
    force += r.wrench_force;
    torque += r.wrench_torque;
  }
  return {force, torque};
}

struct RolloutResult {
  std::vector<SimState> states;  // state after each frame
  std::vector<std::vector<ContactRecord>> contacts;  // at each frame boundary
};

// ---------------------------------------------------------------------------
// Simulator

/// Deterministic penalty-contact micro-simulator at a fixed 240 Hz step.
/// Collisions are restricted to hand-object and object-ground pairs.
class Simulator {
 public:
  static constexpr double kDt = 1.0 / 240.0;
  static constexpr double kDivergenceLimit = 1e6;

  Simulator(Scene scene, SynergyBasis basis)
      : scene_(std::move(scene)), basis_(std::move(basis)) {
    if (basis_.joints() != scene_.gripper.n_joints()) {
      throw SceneMismatch("Simulator: basis joint count != gripper joints");
    }
    object_bound_ = bounding_radius(scene_.object.geometry);
    ground_vertices_ = support_vertices(scene_.object.geometry);
  }

  const Scene& scene() const { return scene_; }
  const SynergyBasis& basis() const { return basis_; }
  const SimState& state() const { return state_; }
  void set_state(const SimState& s) { state_ = s; }

  /// Rest state: object at the given pose, wrist at the commanded pose,
  /// joints at the decoded command, all velocities zero.
  SimState make_initial_state(const HandControl& control,
                              const Pose& object_pose) const {
    SimState s;
    s.q = decode(basis_, control);
    s.qd = VecX::Zero(scene_.gripper.n_joints());
    s.wrist = control.wrist;
    s.object = object_pose;
    s.time = 0.0;
    return s;
  }

  /// One 240 Hz step under a held control. Returns the contacts resolved
  /// during the step (forces as applied to the object).
  std::vector<ContactRecord> step(const HandControl& control,
                                  int frame_label = -1) {
    const double dt = kDt;
    const GripperModel& g = scene_.gripper;
    VecX q_cmd = decode(basis_, control);

    // Kinematic wrist: first-order pull toward the commanded pose.
    double alpha = dt / (g.params.wrist_time_constant + dt);
    Vec3 new_pos = state_.wrist.translation +
                   alpha * (control.wrist.translation - state_.wrist.translation);
    Vec3 rel = rotation_vector_log(control.wrist.rotation *
                                   state_.wrist.rotation.inverse());
    Rotation new_rot = rotation_vector_exp(alpha * rel) * state_.wrist.rotation;
    state_.wrist_twist.linear = (new_pos - state_.wrist.translation) / dt;
    state_.wrist_twist.angular = alpha * rel / dt;
    state_.wrist = Pose{new_rot, new_pos};

    HandKinematics kin = g.fk(state_.wrist, state_.q);

    // Geometric pass first: the stiffness budget of a body pair is split
    // across that pair's contact points and the damping clamp shares the
    // object's mass across all contacts, so the 240 Hz step stays inside
    // the semi-implicit stability region.
    struct Pending {
      int body;      // hand body or kGroundBody
      Vec3 point;    // world, on object surface
      Vec3 normal;   // object-outward
      double depth;
    };
    std::vector<Pending> pending;
    int ground_contacts = 0;

    const Pose& obj = state_.object;
    const Pose obj_inv = obj.inverse();
    for (const auto& col : kin.colliders) {
      double seg_len = (col.p1 - col.p0).norm();
      double reach = object_bound_ + col.radius + 0.5 * seg_len + 0.01;
      if ((0.5 * (col.p0 + col.p1) - obj.translation).norm() > reach) continue;
      Vec3 a = obj_inv * col.p0;
      Vec3 b = obj_inv * col.p1;
      Vec3 center = deepest_on_segment(a, b);
      SurfacePoint sp = closest_surface(scene_.object.geometry, center);
      double depth = col.radius - sp.sdf;
      if (depth <= 0.0) continue;
      pending.push_back({col.body, obj * sp.point, obj.rotation * sp.normal,
                         depth});
    }
    if (scene_.ground &&
        obj.translation.z() - object_bound_ < scene_.ground_height + 1e-3) {
      for (const auto& v : ground_vertices_) {
        Vec3 pw = obj * v;
        double depth = scene_.ground_height - pw.z();
        if (depth <= 0.0) continue;
        pending.push_back({kGroundBody, pw, Vec3(0, 0, -1), depth});
        ++ground_contacts;
      }
    }

    const double m_obj = scene_.object.mass;
    const double m_eff = m_obj / std::max<std::size_t>(1, pending.size());
    const ContactParams& cp = scene_.contact;

    std::vector<ContactRecord> records;
    records.reserve(pending.size());
    Vec3 force_total = scene_.gravity * m_obj;
    Vec3 torque_total = Vec3::Zero();
    VecX joint_torque = g.params.servo_kp * (q_cmd - state_.q);

    for (const auto& c : pending) {
      double k_contact =
          c.body == kGroundBody ? cp.stiffness / ground_contacts : cp.stiffness;
      double c_damp =
          std::min(2.0 * cp.damping_ratio * std::sqrt(k_contact * m_obj),
                   m_eff / dt);
      Vec3 v_obj_pt = state_.object_twist.linear +
                      state_.object_twist.angular.cross(c.point - obj.translation);
      Vec3 v_other = c.body == kGroundBody
                         ? Vec3::Zero()
                         : hand_point_velocity(kin, c.body, c.point);
      Vec3 v_rel = v_other - v_obj_pt;
      double depth_rate = -v_rel.dot(c.normal);
      double fn = k_contact * c.depth + c_damp * depth_rate;
      if (fn < 0.0) fn = 0.0;

      Vec3 v_t = v_rel - v_rel.dot(c.normal) * c.normal;
      double vt_norm = v_t.norm();
      Vec3 f_t = Vec3::Zero();
      if (vt_norm > 1e-12 && fn > 0.0) {
        double mag = cp.friction * fn * std::min(1.0, vt_norm / cp.friction_vel);
        mag = std::min(mag, m_eff * vt_norm / dt);
        f_t = mag * v_t / vt_norm;  // drags the object along the other body
      }

      Vec3 f_obj = -fn * c.normal + f_t;
      force_total += f_obj;
      torque_total += (c.point - obj.translation).cross(f_obj);
      if (c.body >= 0) {
        apply_hand_reaction(kin, c.body, c.point, -f_obj, joint_torque);
      }

      ContactRecord rec;
      rec.frame = frame_label;
      rec.body_a = c.body;
      rec.point = c.point;
      rec.normal = c.normal;
      rec.normal_force = fn;
      Vec3 t1, t2;
      tangent_basis(c.normal, t1, t2);
      rec.tangential = Eigen::Vector2d(f_t.dot(t1), f_t.dot(t2));
      rec.wrench_force = f_obj;
      rec.wrench_torque = (c.point - obj.translation).cross(f_obj);
      records.push_back(std::move(rec));
    }

    // Object: semi-implicit Euler, gyroscopic term in the body frame.
    Vec3 v = state_.object_twist.linear + dt * force_total / m_obj;
    Mat3 r = obj.rotation.matrix();
    Vec3 w_body = r.transpose() * state_.object_twist.angular;
    Vec3 tau_body = r.transpose() * torque_total;
    const Vec3& inertia = scene_.object.inertia_diag;
    Vec3 w_dot = (tau_body - w_body.cross(inertia.asDiagonal() * w_body))
                     .cwiseQuotient(inertia);
    w_body += dt * w_dot;
    Vec3 w_world = r * w_body;
    state_.object_twist.linear = v;
    state_.object_twist.angular = w_world;
    state_.object.translation += dt * v;
    state_.object.rotation =
        rotation_vector_exp(dt * w_world) * state_.object.rotation;

    // Finger joints: servo stiffness explicit, servo damping implicit.
    const double inertia_j = g.params.joint_inertia;
    for (int j = 0; j < g.n_joints(); ++j) {
      double qd_new = (state_.qd[j] + dt * joint_torque[j] / inertia_j) /
                      (1.0 + dt * g.params.servo_kv / inertia_j);
      double q_new = state_.q[j] + dt * qd_new;
      if (q_new < g.joint_lower[j]) {
        q_new = g.joint_lower[j];
        qd_new = 0.0;
      } else if (q_new > g.joint_upper[j]) {
        q_new = g.joint_upper[j];
        qd_new = 0.0;
      }
      state_.q[j] = q_new;
      state_.qd[j] = qd_new;
    }

    state_.time += dt;
    check_divergence();
    return records;
  }

  /// Holds each frame's control across its substeps; records the state and
  /// the contacts at every frame boundary.
  RolloutResult rollout(const SimState& initial,
                        const std::vector<HandControl>& controls,
                        double frame_dt = 1.0 / 30.0) {
    long sub = std::lround(frame_dt / kDt);
    if (sub < 1 || std::abs(sub * kDt - frame_dt) > 1e-9) {
      throw OutOfRange("rollout: frame_dt must be a multiple of 1/240 s");
    }
    RolloutResult out;
    out.states.reserve(controls.size());
    out.contacts.reserve(controls.size());
    state_ = initial;
    for (std::size_t f = 0; f < controls.size(); ++f) {
      std::vector<ContactRecord> last;
      for (long s = 0; s < sub; ++s) {
        try {
          last = step(controls[f], static_cast<int>(f));
        } catch (const SimDiverged& e) {
          throw SimDiverged(e.what(), static_cast<int>(f));
        }
      }
      out.states.push_back(state_);
      out.contacts.push_back(std::move(last));
    }
    return out;
  }

  // -- queries ---------------------------------------------------------

  HandKinematics kinematics(const SimState& s) const {
    return scene_.gripper.fk(s.wrist, s.q);
  }

  std::vector<Vec3> hand_joint_positions(const SimState& s) const {
    return kinematics(s).joint_positions;
  }

  std::vector<Vec3> fingertip_positions(const SimState& s) const {
    return kinematics(s).fingertips;
  }

  /// Twist of every hand body (palm first, then prox/dist per finger);
  /// linear velocity taken at the link midpoint.
  std::vector<Twist> hand_body_twists(const SimState& s) const {
    HandKinematics kin = scene_.gripper.fk(s.wrist, s.q);
    std::vector<Twist> out;
    for (const auto& col : kin.colliders) {
      Twist t;
      t.angular = s.wrist_twist.angular;
      if (col.body > 0) {
        int finger = (col.body - 1) / 2;
        t.angular += s.qd[2 * finger] * kin.joint_axes[2 * finger];
        if ((col.body - 1) % 2 == 1) {
          t.angular += s.qd[2 * finger + 1] * kin.joint_axes[2 * finger + 1];
        }
      }
      t.linear = point_velocity(s, kin, col.body, 0.5 * (col.p0 + col.p1));
      out.push_back(t);
    }
    return out;
  }

  /// Deepest fingertip-sphere penetration into the object, 0 when clear.
  double max_fingertip_penetration(const SimState& s) const {
    HandKinematics kin = scene_.gripper.fk(s.wrist, s.q);
    Pose inv = s.object.inverse();
    double worst = 0.0;
    for (const auto& tip : kin.fingertips) {
      double sdf = signed_distance(scene_.object.geometry, inv * tip);
      worst = std::max(worst, scene_.gripper.params.link_radius - sdf);
    }
    return worst;
  }

  double kinetic_energy(const SimState& s) const {
    const Vec3& inertia = scene_.object.inertia_diag;
    Mat3 r = s.object.rotation.matrix();
    Vec3 w_body = r.transpose() * s.object_twist.angular;
    double e = 0.5 * scene_.object.mass * s.object_twist.linear.squaredNorm() +
               0.5 * w_body.dot(inertia.asDiagonal() * w_body);
    for (int j = 0; j < s.qd.size(); ++j) {
      e += 0.5 * scene_.gripper.params.joint_inertia * s.qd[j] * s.qd[j];
    }
    return e;
  }

 private:
  Vec3 deepest_on_segment(const Vec3& a, const Vec3& b) const {
    if ((b - a).squaredNorm() < 1e-16) return a;
    // The SDF of a convex body is convex along the segment.
    double lo = 0.0, hi = 1.0;
    auto sd = [&](double t) {
      return signed_distance(scene_.object.geometry, a + t * (b - a));
    };
    for (int iter = 0; iter < 24; ++iter) {
      double t1 = lo + (hi - lo) / 3.0;
      double t2 = hi - (hi - lo) / 3.0;
      if (sd(t1) <= sd(t2)) {
        hi = t2;
      } else {
        lo = t1;
      }
    }
    return a + 0.5 * (lo + hi) * (b - a);
  }

  Vec3 point_velocity(const SimState& s, const HandKinematics& kin, int body,
                      const Vec3& p) const {
    Vec3 v = s.wrist_twist.linear +
             s.wrist_twist.angular.cross(p - s.wrist.translation);
    if (body <= 0) return v;
    int finger = (body - 1) / 2;
    v += s.qd[2 * finger] *
         kin.joint_axes[2 * finger].cross(p - kin.joint_origins[2 * finger]);
    if ((body - 1) % 2 == 1) {
      v += s.qd[2 * finger + 1] *
           kin.joint_axes[2 * finger + 1].cross(p - kin.joint_origins[2 * finger + 1]);
    }
    return v;
  }

  Vec3 hand_point_velocity(const HandKinematics& kin, int body,
                           const Vec3& p) const {
    return point_velocity(state_, kin, body, p);
  }

  void apply_hand_reaction(const HandKinematics& kin, int body, const Vec3& p,
                           const Vec3& force, VecX& joint_torque) const {
    if (body <= 0) return;  // palm reactions go into the kinematic wrist
    int finger = (body - 1) / 2;
    int j1 = 2 * finger;
    joint_torque[j1] +=
        kin.joint_axes[j1].dot((p - kin.joint_origins[j1]).cross(force));
    if ((body - 1) % 2 == 1) {
      int j2 = j1 + 1;
      joint_torque[j2] +=
          kin.joint_axes[j2].dot((p - kin.joint_origins[j2]).cross(force));
    }
  }

  void check_divergence() const {
    auto bad = [](double x) {
      return !std::isfinite(x) || std::abs(x) > kDivergenceLimit;
    };
    for (int j = 0; j < state_.q.size(); ++j) {
      if (bad(state_.q[j]) || bad(state_.qd[j])) {
        throw SimDiverged("simulation diverged: joint state");
      }
    }
    const auto& t = state_.object.translation;
    const auto& v = state_.object_twist.linear;
    const auto& w = state_.object_twist.angular;
    for (int i = 0; i < 3; ++i) {
      if (bad(t[i]) || bad(v[i]) || bad(w[i])) {
        throw SimDiverged("simulation diverged: object state");
      }
    }
  }

  Scene scene_;
  SynergyBasis basis_;
  SimState state_;
  double object_bound_ = 0.0;
  std::vector<Vec3> ground_vertices_;
};

}  // namespace gripforge
