#include "poseref/geometry/fields.hpp"

#include <cmath>

namespace poseref {

int DepthMap::valid_count() const {
  int n = 0;
  for (double v : z)
    if (v > 0.0) ++n;
  return n;
}

DepthMap DepthMap::subsample(int stride) const {
  DepthMap out(height() / stride, width() / stride);
  for (int r = 0; r < out.height(); ++r)
    for (int c = 0; c < out.width(); ++c)
      out.z.at(r, c) = z.at(r * stride, c * stride);
  return out;
}

int CorrespondenceField::valid_count() const {
  int n = 0;
  for (uint8_t m : mask)
    if (m) ++n;
  return n;
}

CorrespondenceField lattice_field(const DepthMap& depth, const Intrinsics& K) {
  CorrespondenceField field(depth.height(), depth.width());
  for (int r = 0; r < depth.height(); ++r) {
    for (int c = 0; c < depth.width(); ++c) {
      const double z = depth.z.at(r, c);
      if (z <= 0.0) continue;
      const Eigen::Vector2d xy = K.normalize({c + 0.5, r + 0.5});
      field.set(r, c, AugmentedPoint(xy.x(), xy.y(), 1.0 / z), true);
    }
  }
  return field;
}

CorrespondenceField induce_correspondence(const RigidTransform& G_src,
                                          const RigidTransform& G_dst,
                                          const DepthMap& depth_src,
                                          const Intrinsics& K) {
  const RigidTransform rel = G_dst * G_src.inverse();
  CorrespondenceField field(depth_src.height(), depth_src.width());
  for (int r = 0; r < depth_src.height(); ++r) {
    for (int c = 0; c < depth_src.width(); ++c) {
      const double z = depth_src.z.at(r, c);
      if (z <= 0.0) continue;
      const Eigen::Vector2d xy = K.normalize({c + 0.5, r + 0.5});
      const Eigen::Vector3d X(xy.x() * z, xy.y() * z, z);
      const AugmentedPoint mapped = project(rel * X);
      if (!mapped.valid()) continue;
      field.set(r, c, mapped, true);
    }
  }
  return field;
}

std::optional<double> bilinear_sample(const Grid<double>& grid, double x, double y,
                                      const Grid<uint8_t>* valid) {
  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  const double ax = x - x0;
  const double ay = y - y0;
  double value = 0.0;
  for (int dy = 0; dy <= 1; ++dy) {
    for (int dx = 0; dx <= 1; ++dx) {
      const double w = (dx ? ax : 1.0 - ax) * (dy ? ay : 1.0 - ay);
      if (w == 0.0) continue;
      const int cx = x0 + dx;
      const int cy = y0 + dy;
      if (!grid.contains(cy, cx)) return std::nullopt;
      if (valid && !valid->at(cy, cx)) return std::nullopt;
      value += w * grid.at(cy, cx);
    }
  }
  return value;
}

}  // namespace poseref
