#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "poseref/core/grid.hpp"
#include "poseref/geometry/fields.hpp"

namespace poseref {

/// Dense feature map: one D-dimensional descriptor per grid cell,
/// stored as columns of a D x (height*width) matrix.
struct FeatureMap {
  int height = 0;
  int width = 0;
  Eigen::MatrixXd data;  // dim x (height*width), column index = r*width + c

  FeatureMap() = default;
  FeatureMap(int height_, int width_, int dim)
      : height(height_), width(width_), data(Eigen::MatrixXd::Zero(dim, height_ * width_)) {}

  int dim() const { return static_cast<int>(data.rows()); }
  Eigen::VectorXd feature(int r, int c) const { return data.col(r * width + c); }
  void set_feature(int r, int c, const Eigen::VectorXd& f) { data.col(r * width + c) = f; }
};

/// One level of an all-pairs correlation volume: row = source cell
/// (flattened), column = target cell (flattened at this level's resolution).
struct CorrelationVolume {
  int src_height = 0, src_width = 0;
  int dst_height = 0, dst_width = 0;
  Eigen::MatrixXd values;  // (src_h*src_w) x (dst_h*dst_w)

  double at(int src_r, int src_c, int dst_r, int dst_c) const {
    return values(src_r * src_width + src_c, dst_r * dst_width + dst_c);
  }
};

struct CorrelationPyramid {
  std::vector<CorrelationVolume> levels;

  int num_levels() const { return static_cast<int>(levels.size()); }
};

/// Level 0 holds <f1[u], f2[v]> for all cell pairs; each further level
/// 2x2-average-pools the target dimensions (trailing odd row/col dropped).
CorrelationPyramid build_correlation(const FeatureMap& f1, const FeatureMap& f2,
                                     int num_levels = 4);

/// 2x2 average pooling over the target dimensions of one volume.
CorrelationVolume pool_target(const CorrelationVolume& vol);

struct LookupOptions {
  int radius = 3;
  /// Grid cell (r, c) corresponds to lattice coordinate (c, r); samples whose
  /// bilinear support leaves the volume contribute zero.
};

/// For every valid source cell, bilinearly samples the (2r+1)^2 grid centered
/// at coords/2^level in every pyramid level and concatenates the results.
/// Output row = flattened source cell, length = num_levels*(2r+1)^2.
/// Rows of invalid source cells are zero.
Eigen::MatrixXd lookup(const CorrelationPyramid& pyramid,
                       const Grid<Eigen::Vector2d>& coords,
                       const Grid<uint8_t>& mask, int radius);

/// Converts a correspondence field (normalized coordinates) to lattice
/// coordinates of a grid with intrinsics K, then runs the lookup.
Eigen::MatrixXd lookup(const CorrelationPyramid& pyramid, const CorrespondenceField& field,
                       const Intrinsics& K, int radius);

/// Binary volume dump for cross-implementation diffing: magic "PRCV0001",
/// four little-endian int32 extents, then float32 values row-major.
void dump_volume(const CorrelationVolume& vol, const std::string& path);
CorrelationVolume read_volume_dump(const std::string& path);

}  // namespace poseref
