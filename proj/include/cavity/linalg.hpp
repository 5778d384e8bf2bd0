#pragma once

#include <Eigen/Dense>

namespace cavity {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;
using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;

/// Rotation matrix for a right-handed rotation of `angle` radians about `axis`.
inline Mat3 axis_angle_rotation(const Vec3& axis, double angle) {
  if (axis.norm() == 0.0) return Mat3::Identity();
  return Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix();
}

/// Levi-Civita curl of a field from its Jacobian J(i, k) = d u_i / d x_k.
inline Vec3 curl_from_jacobian(const Mat3& J) {
  return {J(2, 1) - J(1, 2), J(0, 2) - J(2, 0), J(1, 0) - J(0, 1)};
}

}  // namespace cavity
