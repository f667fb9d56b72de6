#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>
#include <cmath>
#include <vector>

#include "gripforge/errors.hpp"

namespace gripforge {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Unit-quaternion rotation. Normalized on every construction and
/// canonicalized to w >= 0, so the double cover never leaks out.
class Rotation {
 public:
  Rotation() : q_(1.0, 0.0, 0.0, 0.0) {}

  explicit Rotation(const Eigen::Quaterniond& q) : q_(q) { canonicalize(); }

  Rotation(double w, double x, double y, double z) : q_(w, x, y, z) {
    canonicalize();
  }

  static Rotation identity() { return Rotation(); }

  static Rotation from_matrix(const Mat3& m) {
    return Rotation(Eigen::Quaterniond(m));
  }

  static Rotation about_axis(const Vec3& axis, double angle) {
    return Rotation(Eigen::Quaterniond(Eigen::AngleAxisd(angle, axis.normalized())));
  }

  const Eigen::Quaterniond& quat() const { return q_; }
  Mat3 matrix() const { return q_.toRotationMatrix(); }

  Rotation inverse() const {
    Rotation r;
    r.q_ = q_.conjugate();  // already unit and w >= 0
    return r;
  }

  Rotation operator*(const Rotation& rhs) const {
    return Rotation(q_ * rhs.q_);
  }

  Vec3 operator*(const Vec3& v) const { return q_ * v; }

  bool approx_equal(const Rotation& other, double tol = 1e-9) const {
    return (q_.coeffs() - other.q_.coeffs()).norm() < tol;
  }

 private:
  void canonicalize() {
    q_.normalize();
    if (q_.w() < 0.0) q_.coeffs() = -q_.coeffs();
  }

  Eigen::Quaterniond q_;
};

/// Rigid transform: x_world = rotation * x_local + translation.
struct Pose {
  Rotation rotation;
  Vec3 translation = Vec3::Zero();

  static Pose identity() { return Pose{}; }

  Pose operator*(const Pose& rhs) const {
    return Pose{rotation * rhs.rotation,
                rotation * rhs.translation + translation};
  }

  Vec3 operator*(const Vec3& p) const { return rotation * p + translation; }

  Pose inverse() const {
    Rotation rinv = rotation.inverse();
    return Pose{rinv, -(rinv * translation)};
  }
};

struct Twist {
  Vec3 linear = Vec3::Zero();   // m/s
  Vec3 angular = Vec3::Zero();  // rad/s, world frame
};

/// Angle of the relative rotation, arccos((tr(Ra Rb^T) - 1) / 2), in [0, pi].
/// The arccos argument is clamped; floating point can push it past +/-1.
inline double geodesic_distance(const Rotation& a, const Rotation& b) {
  Eigen::Quaterniond rel = a.quat() * b.quat().conjugate();
  double tr = 4.0 * rel.w() * rel.w() - 1.0;  // tr(R) for a unit quaternion
  double c = std::clamp(0.5 * (tr - 1.0), -1.0, 1.0);
  return std::acos(c);
}

/// Axis-angle vector of r with magnitude in [0, pi].
inline Vec3 rotation_vector_log(const Rotation& r) {
  const Eigen::Quaterniond& q = r.quat();
  Vec3 v(q.x(), q.y(), q.z());
  double s = v.norm();
  if (s < 1e-9) return 2.0 * v;  // w ~ 1, first-order series
  double angle = 2.0 * std::atan2(s, q.w());
  return v * (angle / s);
}

/// Rodrigues exponential of an axis-angle vector.
inline Rotation rotation_vector_exp(const Vec3& v) {
  double angle = v.norm();
  if (angle < 1e-12) {
    return Rotation(1.0, 0.5 * v.x(), 0.5 * v.y(), 0.5 * v.z());
  }
  double half = 0.5 * angle;
  double k = std::sin(half) / angle;
  return Rotation(std::cos(half), k * v.x(), k * v.y(), k * v.z());
}

/// Reference twists by finite differences: central stencil on interior
/// frames, one-sided at the boundaries. Angular part is the log of the
/// relative rotation over the stencil's time span (world frame).
inline std::vector<Twist> finite_difference_twist(
    const std::vector<Pose>& poses, double dt) {
  if (poses.size() < 2) {
    throw SequenceTooShort("finite_difference_twist needs at least 2 poses");
  }
  if (!(dt > 0.0)) {
    throw OutOfRange("finite_difference_twist: dt must be positive");
  }
  const std::size_t n = poses.size();
  std::vector<Twist> out(n);
  auto between = [&](std::size_t lo, std::size_t hi, double span) {
    Twist t;
    t.linear = (poses[hi].translation - poses[lo].translation) / span;
    Rotation rel = poses[hi].rotation * poses[lo].rotation.inverse();
    t.angular = rotation_vector_log(rel) / span;
    return t;
  };
  out[0] = between(0, 1, dt);
  out[n - 1] = between(n - 2, n - 1, dt);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    out[i] = between(i - 1, i + 1, 2.0 * dt);
  }
  return out;
}

}  // namespace gripforge
