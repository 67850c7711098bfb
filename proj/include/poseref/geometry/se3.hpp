#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace poseref {

using Matrix36d = Eigen::Matrix<double, 3, 6>;
using Matrix6d = Eigen::Matrix<double, 6, 6>;
using Vector6d = Eigen::Matrix<double, 6, 1>;

/// Element of se(3). Convention used throughout: translation-first, i.e. the
/// stacked vector is [v; omega], and increments act on the left of a pose
/// (G <- exp(xi) * G).
struct Twist {
  Eigen::Vector3d v = Eigen::Vector3d::Zero();      // m
  Eigen::Vector3d omega = Eigen::Vector3d::Zero();  // rad

  Twist() = default;
  Twist(const Eigen::Vector3d& v_, const Eigen::Vector3d& omega_) : v(v_), omega(omega_) {}
  explicit Twist(const Vector6d& xi) : v(xi.head<3>()), omega(xi.tail<3>()) {}

  Vector6d vec() const {
    Vector6d xi;
    xi << v, omega;
    return xi;
  }
  double norm() const { return vec().norm(); }
  Twist operator-() const { return Twist(-v, -omega); }
};

/// Rigid transform G = (R, t): X_out = R * X + t.
struct RigidTransform {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  RigidTransform() = default;
  RigidTransform(const Eigen::Matrix3d& R, const Eigen::Vector3d& t)
      : rotation(R), translation(t) {}

  static RigidTransform identity() { return RigidTransform(); }

  RigidTransform inverse() const {
    RigidTransform out;
    out.rotation = rotation.transpose();
    out.translation = -(out.rotation * translation);
    return out;
  }

  RigidTransform operator*(const RigidTransform& rhs) const {
    return RigidTransform(rotation * rhs.rotation,
                          rotation * rhs.translation + translation);
  }

  Eigen::Vector3d operator*(const Eigen::Vector3d& p) const {
    return rotation * p + translation;
  }

  Eigen::Matrix4d matrix() const {
    Eigen::Matrix4d T = Eigen::Matrix4d::Identity();
    T.block<3, 3>(0, 0) = rotation;
    T.block<3, 1>(0, 3) = translation;
    return T;
  }

  static RigidTransform from_matrix(const Eigen::Matrix4d& T) {
    return RigidTransform(T.block<3, 3>(0, 0), T.block<3, 1>(0, 3));
  }

  /// Max deviation from R^T R = I and det = +1.
  double orthonormality_error() const;

  /// Projects the rotation back onto SO(3) via SVD.
  void orthonormalize();
};

Eigen::Matrix3d skew(const Eigen::Vector3d& v);

/// SO(3) exponential (Rodrigues), with a series branch below 1e-8 rad.
Eigen::Matrix3d so3_exp(const Eigen::Vector3d& omega);

/// Which formula produced a log result; surfaced for debugging the angle ~ pi case.
enum class LogBranch { kSmallAngle, kGeneric, kNearPi };

struct LogDiagnostics {
  LogBranch so3_branch = LogBranch::kGeneric;
  double angle = 0.0;
};

/// SO(3) log with angle in [0, pi]; the angle ~ pi branch extracts the axis
/// from the dominant column of R + I.
Eigen::Vector3d so3_log(const Eigen::Matrix3d& R, LogDiagnostics* diag = nullptr);

/// Left Jacobian of SO(3) and its inverse.
Eigen::Matrix3d so3_left_jacobian(const Eigen::Vector3d& omega);
Eigen::Matrix3d so3_left_jacobian_inverse(const Eigen::Vector3d& omega);

/// SE(3) exponential map. Total function: defined for every finite twist.
RigidTransform se3_exp(const Twist& xi);

/// Inverse of se3_exp on rotations with angle < pi.
Twist se3_log(const RigidTransform& G, LogDiagnostics* diag = nullptr);

/// Left-multiplicative retraction: exp(dxi) * G. Re-orthonormalizes when the
/// accumulated rotation drift exceeds 1e-9.
RigidTransform retract(const RigidTransform& G, const Twist& dxi);

/// Adjoint of G for [v; omega] twists: exp(adjoint(G) xi) = G exp(xi) G^-1.
Matrix6d adjoint(const RigidTransform& G);

/// Left Jacobian of SE(3): exp(xi + dxi) ~= exp(J_l(xi) dxi) exp(xi).
Matrix6d se3_left_jacobian(const Twist& xi);

/// Geodesic rotation angle between two transforms, in [0, pi].
double rotation_geodesic_distance(const RigidTransform& a, const RigidTransform& b);

}  // namespace poseref
