#include "poseref/geometry/se3.hpp"

#include <Eigen/SVD>
#include <cmath>

namespace poseref {

namespace {
constexpr double kSmallAngle = 1e-8;
}

Eigen::Matrix3d skew(const Eigen::Vector3d& v) {
  Eigen::Matrix3d s;
  // clang-format off
  s <<     0, -v.z(),  v.y(),
       v.z(),      0, -v.x(),
      -v.y(),  v.x(),      0;
  // clang-format on
  return s;
}

double RigidTransform::orthonormality_error() const {
  double e = (rotation.transpose() * rotation - Eigen::Matrix3d::Identity())
                 .cwiseAbs()
                 .maxCoeff();
  return std::max(e, std::abs(rotation.determinant() - 1.0));
}

void RigidTransform::orthonormalize() {
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(rotation, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d R = svd.matrixU() * svd.matrixV().transpose();
  if (R.determinant() < 0) {
    Eigen::Matrix3d flip = Eigen::Matrix3d::Identity();
    flip(2, 2) = -1;
    R = svd.matrixU() * flip * svd.matrixV().transpose();
  }
  rotation = R;
}

Eigen::Matrix3d so3_exp(const Eigen::Vector3d& omega) {
  const double theta2 = omega.squaredNorm();
  const double theta = std::sqrt(theta2);
  const Eigen::Matrix3d W = skew(omega);
  double a, b;  // R = I + a*W + b*W^2
  if (theta < kSmallAngle) {
    a = 1.0 - theta2 / 6.0;
    b = 0.5 - theta2 / 24.0;
  } else {
    a = std::sin(theta) / theta;
    b = (1.0 - std::cos(theta)) / theta2;
  }
  return Eigen::Matrix3d::Identity() + a * W + b * W * W;
}

Eigen::Vector3d so3_log(const Eigen::Matrix3d& R, LogDiagnostics* diag) {
  const double trace = R.trace();
  const double cos_theta = std::clamp((trace - 1.0) * 0.5, -1.0, 1.0);
  const double theta = std::acos(cos_theta);
  const Eigen::Vector3d antisym(R(2, 1) - R(1, 2), R(0, 2) - R(2, 0), R(1, 0) - R(0, 1));

  LogBranch branch;
  Eigen::Vector3d omega;
  if (theta < kSmallAngle) {
    branch = LogBranch::kSmallAngle;
    omega = 0.5 * antisym;  // sin(theta) ~ theta
  } else if (theta > M_PI - 1e-6) {
    branch = LogBranch::kNearPi;
    // R + I = 2(aa^T + cos... ) -> columns are proportional to the axis.
    const Eigen::Matrix3d B = R + Eigen::Matrix3d::Identity();
    int col;
    B.colwise().norm().maxCoeff(&col);
    Eigen::Vector3d axis = B.col(col).normalized();
    // Pick the sign from the antisymmetric part when it is informative,
    // otherwise canonicalize to the first nonzero component positive.
    const double s = axis.dot(antisym);
    if (std::abs(s) > 1e-12) {
      if (s < 0) axis = -axis;
    } else {
      for (int i = 0; i < 3; ++i) {
        if (std::abs(axis[i]) > 1e-12) {
          if (axis[i] < 0) axis = -axis;
          break;
        }
      }
    }
    omega = theta * axis;
  } else {
    branch = LogBranch::kGeneric;
    omega = (theta / (2.0 * std::sin(theta))) * antisym;
  }
  if (diag) {
    diag->so3_branch = branch;
    diag->angle = theta;
  }
  return omega;
}

Eigen::Matrix3d so3_left_jacobian(const Eigen::Vector3d& omega) {
  const double theta2 = omega.squaredNorm();
  const double theta = std::sqrt(theta2);
  const Eigen::Matrix3d W = skew(omega);
  double a, b;  // J = I + a*W + b*W^2
  if (theta < kSmallAngle) {
    a = 0.5 - theta2 / 24.0;
    b = 1.0 / 6.0 - theta2 / 120.0;
  } else {
    a = (1.0 - std::cos(theta)) / theta2;
    b = (theta - std::sin(theta)) / (theta2 * theta);
  }
  return Eigen::Matrix3d::Identity() + a * W + b * W * W;
}

Eigen::Matrix3d so3_left_jacobian_inverse(const Eigen::Vector3d& omega) {
  const double theta2 = omega.squaredNorm();
  const double theta = std::sqrt(theta2);
  const Eigen::Matrix3d W = skew(omega);
  double c;  // J^-1 = I - W/2 + c*W^2
  if (theta < kSmallAngle) {
    c = 1.0 / 12.0 + theta2 / 720.0;
  } else {
    // 1/theta^2 * (1 - (theta/2) * cot(theta/2)); stable through theta = pi.
    const double half = 0.5 * theta;
    c = (1.0 - half * std::cos(half) / std::sin(half)) / theta2;
  }
  return Eigen::Matrix3d::Identity() - 0.5 * W + c * W * W;
}

RigidTransform se3_exp(const Twist& xi) {
  RigidTransform G;
  G.rotation = so3_exp(xi.omega);
  G.translation = so3_left_jacobian(xi.omega) * xi.v;
  return G;
}

Twist se3_log(const RigidTransform& G, LogDiagnostics* diag) {
  Twist xi;
  xi.omega = so3_log(G.rotation, diag);
  xi.v = so3_left_jacobian_inverse(xi.omega) * G.translation;
  return xi;
}

RigidTransform retract(const RigidTransform& G, const Twist& dxi) {
  RigidTransform out = se3_exp(dxi) * G;
  if (out.orthonormality_error() > 1e-9) out.orthonormalize();
  return out;
}

Matrix6d adjoint(const RigidTransform& G) {
  Matrix6d ad = Matrix6d::Zero();
  ad.block<3, 3>(0, 0) = G.rotation;
  ad.block<3, 3>(0, 3) = skew(G.translation) * G.rotation;
  ad.block<3, 3>(3, 3) = G.rotation;
  return ad;
}

namespace {

// Q block of the SE(3) left Jacobian (coupling of rotation into translation).
Eigen::Matrix3d se3_jacobian_q(const Eigen::Vector3d& v, const Eigen::Vector3d& omega) {
  const Eigen::Matrix3d P = skew(v);
  const Eigen::Matrix3d W = skew(omega);
  const double theta2 = omega.squaredNorm();
  const double theta = std::sqrt(theta2);

  double c1, c2, c3;
  if (theta < 1e-4) {
    c1 = 1.0 / 6.0 - theta2 / 120.0;
    c2 = 1.0 / 24.0 - theta2 / 720.0;
    c3 = 1.0 / 120.0 - theta2 / 5040.0;
  } else {
    const double st = std::sin(theta);
    const double ct = std::cos(theta);
    const double t3 = theta2 * theta;
    const double t4 = theta2 * theta2;
    const double t5 = t4 * theta;
    c1 = (theta - st) / t3;
    c2 = (0.5 * theta2 + ct - 1.0) / t4;
    c3 = (t3 / 6.0 - theta + st) / t5;
  }

  const Eigen::Matrix3d WP = W * P;
  const Eigen::Matrix3d PW = P * W;
  const Eigen::Matrix3d WPW = WP * W;

  return 0.5 * P + c1 * (WP + PW + WPW)
       + c2 * (W * WP + PW * W - 3.0 * WPW)
       + 0.5 * (c2 - 3.0 * c3) * (WPW * W + W * WPW);
}

}  // namespace

Matrix6d se3_left_jacobian(const Twist& xi) {
  const Eigen::Matrix3d J = so3_left_jacobian(xi.omega);
  Matrix6d out = Matrix6d::Zero();
  out.block<3, 3>(0, 0) = J;
  out.block<3, 3>(0, 3) = se3_jacobian_q(xi.v, xi.omega);
  out.block<3, 3>(3, 3) = J;
  return out;
}

double rotation_geodesic_distance(const RigidTransform& a, const RigidTransform& b) {
  const Eigen::Matrix3d R = a.rotation.transpose() * b.rotation;
  const double c = std::clamp((R.trace() - 1.0) * 0.5, -1.0, 1.0);
  return std::acos(c);
}

}  // namespace poseref
