#pragma once

#include <Eigen/Core>
#include <optional>

#include "poseref/core/grid.hpp"
#include "poseref/geometry/camera.hpp"
#include "poseref/geometry/se3.hpp"

namespace poseref {

/// Per-pixel depth Z in meters; 0 marks "no surface". Mask is implied by Z > 0.
struct DepthMap {
  Grid<double> z;

  DepthMap() = default;
  DepthMap(int height, int width) : z(height, width, 0.0) {}

  int height() const { return z.height(); }
  int width() const { return z.width(); }
  bool valid(int r, int c) const { return z.at(r, c) > 0.0; }
  int valid_count() const;

  /// Keep every stride-th pixel; pair with Intrinsics::downsample(stride).
  DepthMap subsample(int stride) const;
};

/// Per-pixel (x, y, inverse depth) in normalized coordinates, with a validity
/// mask. Masked-out pixels are excluded from every sum built on the field.
struct CorrespondenceField {
  Grid<Eigen::Vector3d> points;
  Grid<uint8_t> mask;

  CorrespondenceField() = default;
  CorrespondenceField(int height, int width)
      : points(height, width, Eigen::Vector3d::Zero()), mask(height, width, 0) {}

  int height() const { return points.height(); }
  int width() const { return points.width(); }
  bool valid(int r, int c) const { return mask.at(r, c) != 0; }
  int valid_count() const;

  AugmentedPoint at(int r, int c) const { return AugmentedPoint(points.at(r, c)); }
  void set(int r, int c, const AugmentedPoint& p, bool valid_flag) {
    points.at(r, c) = p.vec();
    mask.at(r, c) = valid_flag ? 1 : 0;
  }
};

/// The identity field for a depth map: each pixel maps to its own normalized
/// coordinates with its own inverse depth. K must match the depth resolution.
CorrespondenceField lattice_field(const DepthMap& depth, const Intrinsics& K);

/// Maps every valid source pixel through G_dst * G_src^-1:
///   x' = proj(G_dst * G_src^-1 * backproject(x)).
/// Pixels without depth or with nonpositive transformed Z are masked out.
CorrespondenceField induce_correspondence(const RigidTransform& G_src,
                                          const RigidTransform& G_dst,
                                          const DepthMap& depth_src,
                                          const Intrinsics& K);

/// Bilinear sample of a scalar grid at continuous lattice coordinates
/// (integer coordinate = grid cell). Empty if any participating cell is
/// outside the grid or fails `valid`.
std::optional<double> bilinear_sample(const Grid<double>& grid, double x, double y,
                                      const Grid<uint8_t>* valid = nullptr);

}  // namespace poseref
