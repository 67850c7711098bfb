#pragma once

// Independent reference implementations used as test oracles. Everything in
// this header is deliberately brute-force and shares no code path with the
// library routines it checks.

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <vector>

#include "poseref/correlation/correlation.hpp"
#include "poseref/geometry/se3.hpp"
#include "poseref/scene/model.hpp"

namespace oracle {

/// Matrix exponential of the 4x4 twist matrix via a 30-term power series.
inline Eigen::Matrix4d se3_exp_series(const poseref::Twist& xi) {
  Eigen::Matrix4d A = Eigen::Matrix4d::Zero();
  A.block<3, 3>(0, 0) = poseref::skew(xi.omega);
  A.block<3, 1>(0, 3) = xi.v;
  Eigen::Matrix4d result = Eigen::Matrix4d::Identity();
  Eigen::Matrix4d term = Eigen::Matrix4d::Identity();
  for (int k = 1; k <= 30; ++k) {
    term = term * A / static_cast<double>(k);
    result += term;
  }
  return result;
}

/// Central finite differences of a vector-valued function.
inline Eigen::MatrixXd central_difference(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f,
    const Eigen::VectorXd& x, double h) {
  const Eigen::VectorXd f0 = f(x);
  Eigen::MatrixXd J(f0.size(), x.size());
  for (int j = 0; j < x.size(); ++j) {
    Eigen::VectorXd xp = x, xm = x;
    xp[j] += h;
    xm[j] -= h;
    J.col(j) = (f(xp) - f(xm)) / (2.0 * h);
  }
  return J;
}

/// Quadruple-loop correlation volume.
inline Eigen::MatrixXd correlation_level0(const poseref::FeatureMap& f1,
                                          const poseref::FeatureMap& f2) {
  const int n1 = f1.height * f1.width;
  const int n2 = f2.height * f2.width;
  Eigen::MatrixXd vol(n1, n2);
  for (int r1 = 0; r1 < f1.height; ++r1)
    for (int c1 = 0; c1 < f1.width; ++c1)
      for (int r2 = 0; r2 < f2.height; ++r2)
        for (int c2 = 0; c2 < f2.width; ++c2) {
          double dot = 0.0;
          for (int d = 0; d < f1.dim(); ++d)
            dot += f1.data(d, r1 * f1.width + c1) * f2.data(d, r2 * f2.width + c2);
          vol(r1 * f1.width + c1, r2 * f2.width + c2) = dot;
        }
  return vol;
}

/// Scalar zero-padded bilinear gather from one volume level.
inline double gather_bilinear(const poseref::CorrelationVolume& vol, int src_index, double x,
                              double y) {
  auto read = [&](int cx, int cy) -> double {
    if (cx < 0 || cx >= vol.dst_width || cy < 0 || cy >= vol.dst_height) return 0.0;
    return vol.values(src_index, cy * vol.dst_width + cx);
  };
  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  const double ax = x - x0;
  const double ay = y - y0;
  return (1 - ax) * (1 - ay) * read(x0, y0) + ax * (1 - ay) * read(x0 + 1, y0) +
         (1 - ax) * ay * read(x0, y0 + 1) + ax * ay * read(x0 + 1, y0 + 1);
}

/// Moller-Trumbore ray/triangle intersection; returns t or a negative value.
inline double ray_triangle(const Eigen::Vector3d& origin, const Eigen::Vector3d& dir,
                           const Eigen::Vector3d& v0, const Eigen::Vector3d& v1,
                           const Eigen::Vector3d& v2) {
  const Eigen::Vector3d e1 = v1 - v0;
  const Eigen::Vector3d e2 = v2 - v0;
  const Eigen::Vector3d pvec = dir.cross(e2);
  const double det = e1.dot(pvec);
  if (std::abs(det) < 1e-14) return -1.0;
  const double inv_det = 1.0 / det;
  const Eigen::Vector3d tvec = origin - v0;
  const double u = tvec.dot(pvec) * inv_det;
  if (u < 0.0 || u > 1.0) return -1.0;
  const Eigen::Vector3d qvec = tvec.cross(e1);
  const double v = dir.dot(qvec) * inv_det;
  if (v < 0.0 || u + v > 1.0) return -1.0;
  return e2.dot(qvec) * inv_det;
}

/// Per-pixel ray-cast depth of a posed mesh (camera at the origin, +Z forward).
inline poseref::DepthMap raycast_depth(const poseref::ObjectModel& model,
                                       const poseref::RigidTransform& G,
                                       const poseref::Intrinsics& K) {
  std::vector<Eigen::Vector3d> cam(model.vertices.size());
  for (size_t i = 0; i < model.vertices.size(); ++i) cam[i] = G * model.vertices[i];
  poseref::DepthMap depth(K.height, K.width);
  for (int r = 0; r < K.height; ++r) {
    for (int c = 0; c < K.width; ++c) {
      const Eigen::Vector2d xy = K.normalize({c + 0.5, r + 0.5});
      const Eigen::Vector3d dir(xy.x(), xy.y(), 1.0);
      double best = 0.0;
      for (const auto& tri : model.triangles) {
        const double t =
            ray_triangle(Eigen::Vector3d::Zero(), dir, cam[tri[0]], cam[tri[1]], cam[tri[2]]);
        if (t > 0.0 && (best == 0.0 || t < best)) best = t;
      }
      depth.z.at(r, c) = best;  // dir has unit Z, so t equals depth Z
    }
  }
  return depth;
}

/// Deterministic LCG independent of the library Rng, for oracle-side draws.
class Lcg {
 public:
  explicit Lcg(uint64_t seed) : s_(seed * 2862933555777941757ULL + 3037000493ULL) {}
  double uniform() {
    s_ = s_ * 6364136223846793005ULL + 1442695040888963407ULL;
    return static_cast<double>(s_ >> 11) * 0x1.0p-53;
  }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

 private:
  uint64_t s_;
};

}  // namespace oracle
