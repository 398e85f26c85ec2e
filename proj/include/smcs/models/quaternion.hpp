#pragma once

// Unit quaternions, Hamilton convention, scalar-first storage in state
// vectors. q^{nb} rotates body-frame vectors into the navigation frame.

#include <span>

#include <Eigen/Dense>
#include <Eigen/Geometry>

namespace smcs::models {

using Quaternion = Eigen::Quaterniond;

/// Hamilton product qa * qb, renormalized. Throws std::invalid_argument on a
/// zero-norm input.
[[nodiscard]] Quaternion quaternion_product(const Quaternion& qa, const Quaternion& qb);

/// exp of the pure quaternion (0, half_dt * w): unit quaternion rotating by
/// the angle 2 * half_dt * |w| about w.
[[nodiscard]] Quaternion quaternion_exp(const Eigen::Vector3d& w, double half_dt);

/// Inverse of quaternion_exp with half_dt = 1, on the hemisphere q.w() >= 0.
/// Returns v such that exp(v) = +-q.
[[nodiscard]] Eigen::Vector3d quaternion_log(const Quaternion& q);

[[nodiscard]] Eigen::Matrix3d rotation_matrix(const Quaternion& q);

/// Roll, pitch, yaw (ZYX convention), radians.
[[nodiscard]] Eigen::Vector3d roll_pitch_yaw(const Quaternion& q);

[[nodiscard]] inline Quaternion load_quaternion(std::span<const double> wxyz) {
  return {wxyz[0], wxyz[1], wxyz[2], wxyz[3]};
}

inline void store_quaternion(const Quaternion& q, std::span<double> wxyz) {
  wxyz[0] = q.w();
  wxyz[1] = q.x();
  wxyz[2] = q.y();
  wxyz[3] = q.z();
}

}  // namespace smcs::models
