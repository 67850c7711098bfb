#include "poseref/geometry/camera.hpp"

namespace poseref {

AugmentedPoint project(const Eigen::Vector3d& X) {
  if (!(X.z() > kMinDepth)) return AugmentedPoint::invalid_point();
  const double inv_z = 1.0 / X.z();
  return AugmentedPoint(X.x() * inv_z, X.y() * inv_z, inv_z);
}

std::optional<Eigen::Vector3d> backproject(const AugmentedPoint& x) {
  if (!(x.d > kMinInverseDepth)) return std::nullopt;
  const double z = 1.0 / x.d;
  return Eigen::Vector3d(x.x * z, x.y * z, z);
}

Eigen::Matrix3d projection_point_jacobian(const Eigen::Vector3d& X) {
  const double inv_z = 1.0 / X.z();
  const double inv_z2 = inv_z * inv_z;
  Eigen::Matrix3d J;
  // clang-format off
  J << inv_z,     0, -X.x() * inv_z2,
           0, inv_z, -X.y() * inv_z2,
           0,     0, -inv_z2;
  // clang-format on
  return J;
}

Matrix36d point_twist_jacobian(const Eigen::Vector3d& p) {
  Matrix36d J;
  J.block<3, 3>(0, 0) = Eigen::Matrix3d::Identity();
  J.block<3, 3>(0, 3) = -skew(p);
  return J;
}

Matrix36d projection_pose_jacobian_forward(const Eigen::Vector3d& p_transformed) {
  return projection_point_jacobian(p_transformed) * point_twist_jacobian(p_transformed);
}

Matrix36d projection_pose_jacobian_backward(const Eigen::Vector3d& q_source,
                                            const Eigen::Matrix3d& rotation_rel,
                                            const Eigen::Vector3d& p_transformed) {
  return -projection_point_jacobian(p_transformed) * rotation_rel *
         point_twist_jacobian(q_source);
}

}  // namespace poseref
