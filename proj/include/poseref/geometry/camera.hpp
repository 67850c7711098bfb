#pragma once

#include <Eigen/Core>
#include <optional>

#include "poseref/geometry/se3.hpp"

namespace poseref {

// Degeneracy cut-offs. Points beyond these are masked out, never clamped.
inline constexpr double kMinDepth = 1e-6;         // meters
inline constexpr double kMinInverseDepth = 1e-8;  // 1/meters

/// Pinhole intrinsics. Continuous pixel coordinates place the center of
/// pixel (row r, col c) at (c + 0.5, r + 0.5).
struct Intrinsics {
  double fx = 0, fy = 0;
  double cx = 0, cy = 0;
  int width = 0, height = 0;

  bool valid() const { return fx > 0 && fy > 0 && width > 0 && height > 0; }

  Eigen::Vector2d normalize(const Eigen::Vector2d& pixel) const {
    return {(pixel.x() - cx) / fx, (pixel.y() - cy) / fy};
  }
  Eigen::Vector2d denormalize(const Eigen::Vector2d& xy) const {
    return {fx * xy.x() + cx, fy * xy.y() + cy};
  }

  /// Intrinsics of the grid obtained by keeping every stride-th pixel
  /// (subsampling at pixel (stride*r, stride*c)), under the same
  /// center-of-pixel convention.
  Intrinsics downsample(int stride) const {
    Intrinsics out;
    out.fx = fx / stride;
    out.fy = fy / stride;
    out.cx = cx / stride + 0.5 * (1.0 - 1.0 / stride);
    out.cy = cy / stride + 0.5 * (1.0 - 1.0 / stride);
    out.width = width / stride;
    out.height = height / stride;
    return out;
  }
};

/// Point in depth-augmented normalized image coordinates: (x, y) = (X/Z, Y/Z)
/// and d = 1/Z. Valid iff d > 0.
struct AugmentedPoint {
  double x = 0, y = 0;
  double d = -1;  // inverse depth; <= 0 marks an invalid point

  AugmentedPoint() = default;
  AugmentedPoint(double x_, double y_, double d_) : x(x_), y(y_), d(d_) {}
  explicit AugmentedPoint(const Eigen::Vector3d& v) : x(v.x()), y(v.y()), d(v.z()) {}

  bool valid() const { return d > kMinInverseDepth; }
  Eigen::Vector3d vec() const { return {x, y, d}; }
  static AugmentedPoint invalid_point() { return AugmentedPoint(0, 0, -1); }
};

/// Depth-augmented pinhole projection: X -> (X/Z, Y/Z, 1/Z).
/// Z <= kMinDepth yields an invalid point.
AugmentedPoint project(const Eigen::Vector3d& X);

/// Inverse projection: (x, y, d) -> (x/d, y/d, 1/d). Empty for d <= kMinInverseDepth.
std::optional<Eigen::Vector3d> backproject(const AugmentedPoint& x);

/// d(projection)/dX at X.
Eigen::Matrix3d projection_point_jacobian(const Eigen::Vector3d& X);

/// d(exp(dxi) * p)/d(dxi) at dxi = 0, i.e. [I | -skew(p)].
Matrix36d point_twist_jacobian(const Eigen::Vector3d& p);

enum class MapDirection {
  kRenderToImage,  // target pose on the left:  proj(exp(dxi) G0 Gi^-1 q)
  kImageToRender,  // target pose inverted:     proj(Gi G0^-1 exp(-dxi) q)
};

/// Jacobian of the depth-augmented reprojection with respect to a left
/// increment dxi on G0, at dxi = 0.
///
/// kRenderToImage: pass the already transformed point p = G0 Gi^-1 q.
/// kImageToRender: pass the source point q = backproject(x0), the rotation of
/// the relative transform T = Gi G0^-1, and the transformed point p = T q.
Matrix36d projection_pose_jacobian_forward(const Eigen::Vector3d& p_transformed);
Matrix36d projection_pose_jacobian_backward(const Eigen::Vector3d& q_source,
                                            const Eigen::Matrix3d& rotation_rel,
                                            const Eigen::Vector3d& p_transformed);

}  // namespace poseref
