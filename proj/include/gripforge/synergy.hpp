#pragma once

#include <Eigen/Dense>

#include "gripforge/errors.hpp"
#include "gripforge/geometry.hpp"
#include "gripforge/rng.hpp"

namespace gripforge {

using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;

/// Fixed linear map from a low-dimensional coefficient vector to joint
/// angles: q = clamp(mean + components * coeffs, lower, upper).
/// Columns of `components` are orthonormal.
struct SynergyBasis {
  MatX components;  // n_joints x n_coeffs
  VecX mean;        // radians
  VecX lower;       // per-joint limits, radians
  VecX upper;

  int joints() const { return static_cast<int>(components.rows()); }
  int coeffs() const { return static_cast<int>(components.cols()); }
};

/// Low-dimensional hand command: synergy coefficients plus the wrist pose.
/// The wrist translation rides along because the simulator drives the wrist
/// along an explicit path.
struct HandControl {
  VecX coeffs;
  Pose wrist;
};

inline constexpr double kCoeffBoundDefault = 3.0;

inline VecX decode(const SynergyBasis& basis, const VecX& coeffs) {
  if (coeffs.size() != basis.coeffs()) {
    throw DimensionMismatch("decode: coefficient dimension mismatch");
  }
  VecX q = basis.mean + basis.components * coeffs;
  return q.cwiseMax(basis.lower).cwiseMin(basis.upper);
}

inline VecX decode(const SynergyBasis& basis, const HandControl& control) {
  return decode(basis, control.coeffs);
}

/// Least-squares projection of a joint configuration onto the basis.
inline VecX encode(const SynergyBasis& basis, const VecX& q) {
  if (q.size() != basis.joints()) {
    throw DimensionMismatch("encode: joint dimension mismatch");
  }
  return basis.components.transpose() * (q - basis.mean);
}

/// Deterministic synthetic basis. The first component is a coordinated
/// curl-all-fingers direction (all flexion entries positive, distal joints
/// slightly de-weighted); the remaining components are a random orthonormal
/// completion drawn from the seed.
inline SynergyBasis make_grasp_basis(int n_joints, int n_coeffs,
                                     std::uint64_t seed,
                                     double joint_lower = -0.5,
                                     double joint_upper = 1.8,
                                     double mean_angle = 0.12) {
  if (n_coeffs < 1 || n_coeffs > n_joints) {
    throw InvalidDimensions("make_grasp_basis: need 1 <= n_coeffs <= n_joints");
  }
  SynergyBasis basis;
  basis.components.resize(n_joints, n_coeffs);

  VecX curl(n_joints);
  for (int j = 0; j < n_joints; ++j) {
    curl[j] = (j % 2 == 0) ? 1.0 : 0.75;  // proximal / distal pattern
  }
  basis.components.col(0) = curl.normalized();

  Rng rng(mix_seed(seed, 0x5711e7));
  for (int c = 1; c < n_coeffs; ++c) {
    VecX v(n_joints);
    while (true) {
      for (int j = 0; j < n_joints; ++j) v[j] = rng.normal();
      for (int p = 0; p < c; ++p) {
        v -= basis.components.col(p).dot(v) * basis.components.col(p);
      }
      if (v.norm() > 1e-6) break;
    }
    basis.components.col(c) = v.normalized();
  }

  basis.mean = VecX::Constant(n_joints, mean_angle);
  basis.lower = VecX::Constant(n_joints, joint_lower);
  basis.upper = VecX::Constant(n_joints, joint_upper);
  return basis;
}

}  // namespace gripforge
