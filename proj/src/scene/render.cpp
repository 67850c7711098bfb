#include "poseref/scene/render.hpp"

#include <algorithm>
#include <cmath>

namespace poseref {

namespace {

struct ScreenVertex {
  double u, v;      // continuous pixel coords
  double inv_z;     // 1/Z
};

inline double edge(double ax, double ay, double bx, double by, double px, double py) {
  return (bx - ax) * (py - ay) - (by - ay) * (px - ax);
}

void rasterize_triangle(const ScreenVertex& a, const ScreenVertex& b, const ScreenVertex& c,
                        DepthMap& depth) {
  const double area = edge(a.u, a.v, b.u, b.v, c.u, c.v);
  if (area == 0.0) return;

  const int w = depth.width();
  const int h = depth.height();
  int cmin = std::max(0, static_cast<int>(std::floor(std::min({a.u, b.u, c.u}) - 0.5)));
  int cmax = std::min(w - 1, static_cast<int>(std::ceil(std::max({a.u, b.u, c.u}) - 0.5)));
  int rmin = std::max(0, static_cast<int>(std::floor(std::min({a.v, b.v, c.v}) - 0.5)));
  int rmax = std::min(h - 1, static_cast<int>(std::ceil(std::max({a.v, b.v, c.v}) - 0.5)));

  for (int r = rmin; r <= rmax; ++r) {
    const double py = r + 0.5;
    for (int col = cmin; col <= cmax; ++col) {
      const double px = col + 0.5;
      double w0 = edge(b.u, b.v, c.u, c.v, px, py);
      double w1 = edge(c.u, c.v, a.u, a.v, px, py);
      double w2 = edge(a.u, a.v, b.u, b.v, px, py);
      if (area < 0) {
        w0 = -w0;
        w1 = -w1;
        w2 = -w2;
      }
      if (w0 < 0 || w1 < 0 || w2 < 0) continue;
      const double sum = w0 + w1 + w2;
      // Inverse depth interpolates linearly in screen space.
      const double inv_z = (w0 * a.inv_z + w1 * b.inv_z + w2 * c.inv_z) / sum;
      if (inv_z <= 0.0) continue;
      const double z = 1.0 / inv_z;
      double& cell = depth.z.at(r, col);
      if (cell == 0.0 || z < cell) cell = z;
    }
  }
}

}  // namespace

DepthMap render_depth(const ObjectModel& model, const RigidTransform& G,
                      const Intrinsics& K, const RenderOptions& opts) {
  DepthMap depth(K.height, K.width);

  std::vector<Eigen::Vector3d> cam(model.vertices.size());
  for (size_t i = 0; i < model.vertices.size(); ++i) cam[i] = G * model.vertices[i];

  if (model.has_triangles()) {
    for (const auto& tri : model.triangles) {
      const Eigen::Vector3d& v0 = cam[tri[0]];
      const Eigen::Vector3d& v1 = cam[tri[1]];
      const Eigen::Vector3d& v2 = cam[tri[2]];
      if (v0.z() <= kMinDepth || v1.z() <= kMinDepth || v2.z() <= kMinDepth) continue;
      if (opts.backface_cull) {
        const Eigen::Vector3d n = (v1 - v0).cross(v2 - v0);
        if (n.dot(v0 + v1 + v2) > 0.0) continue;
      }
      auto to_screen = [&](const Eigen::Vector3d& X) {
        const Eigen::Vector2d px = K.denormalize({X.x() / X.z(), X.y() / X.z()});
        return ScreenVertex{px.x(), px.y(), 1.0 / X.z()};
      };
      rasterize_triangle(to_screen(v0), to_screen(v1), to_screen(v2), depth);
    }
  } else {
    const double rad = opts.point_radius_px;
    for (const Eigen::Vector3d& X : cam) {
      if (X.z() <= kMinDepth) continue;
      const Eigen::Vector2d px = K.denormalize({X.x() / X.z(), X.y() / X.z()});
      const int cmin = std::max(0, static_cast<int>(std::floor(px.x() - rad - 0.5)));
      const int cmax = std::min(K.width - 1, static_cast<int>(std::ceil(px.x() + rad - 0.5)));
      const int rmin = std::max(0, static_cast<int>(std::floor(px.y() - rad - 0.5)));
      const int rmax = std::min(K.height - 1, static_cast<int>(std::ceil(px.y() + rad - 0.5)));
      for (int r = rmin; r <= rmax; ++r) {
        for (int c = cmin; c <= cmax; ++c) {
          const double dx = c + 0.5 - px.x();
          const double dy = r + 0.5 - px.y();
          if (dx * dx + dy * dy > rad * rad) continue;
          double& cell = depth.z.at(r, c);
          if (cell == 0.0 || X.z() < cell) cell = X.z();
        }
      }
    }
  }
  return depth;
}

}  // namespace poseref
