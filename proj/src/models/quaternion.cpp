#include "smcs/models/quaternion.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace smcs::models {

Quaternion quaternion_product(const Quaternion& qa, const Quaternion& qb) {
  if (qa.squaredNorm() == 0.0 || qb.squaredNorm() == 0.0) {
    throw std::invalid_argument("quaternion_product: zero-norm quaternion");
  }
  Quaternion q = qa * qb;
  q.normalize();
  return q;
}

Quaternion quaternion_exp(const Eigen::Vector3d& w, double half_dt) {
  const Eigen::Vector3d v = half_dt * w;
  const double angle = v.norm();
  if (angle < 1e-8) {
    // cos a ~ 1 - a^2/2, sin(a)/a ~ 1 - a^2/6
    const double s = 1.0 - angle * angle / 6.0;
    Quaternion q(1.0 - 0.5 * angle * angle, s * v.x(), s * v.y(), s * v.z());
    q.normalize();
    return q;
  }
  const double s = std::sin(angle) / angle;
  return {std::cos(angle), s * v.x(), s * v.y(), s * v.z()};
}

Eigen::Vector3d quaternion_log(const Quaternion& q_in) {
  Quaternion q = q_in.normalized();
  if (q.w() < 0.0) q.coeffs() = -q.coeffs();
  const Eigen::Vector3d u = q.vec();
  const double s = u.norm();
  if (s < 1e-8) return u / q.w();
  return u * (std::atan2(s, q.w()) / s);
}

Eigen::Matrix3d rotation_matrix(const Quaternion& q) { return q.normalized().toRotationMatrix(); }

Eigen::Vector3d roll_pitch_yaw(const Quaternion& q_in) {
  const Quaternion q = q_in.normalized();
  const double w = q.w(), x = q.x(), y = q.y(), z = q.z();
  const double roll = std::atan2(2.0 * (w * x + y * z), 1.0 - 2.0 * (x * x + y * y));
  const double sp = std::clamp(2.0 * (w * y - z * x), -1.0, 1.0);
  const double pitch = std::asin(sp);
  const double yaw = std::atan2(2.0 * (w * z + x * y), 1.0 - 2.0 * (y * y + z * z));
  return {roll, pitch, yaw};
}

}  // namespace smcs::models
