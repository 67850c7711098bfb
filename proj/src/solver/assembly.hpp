#pragma once

// Internal residual-row assembly shared by the solver, its reverse-mode
// derivative, and the RGB-only joint solve. Not installed.

#include <algorithm>

#include "poseref/solver/bdpnp.hpp"

namespace poseref::detail {

struct RowData {
  int view = 0;
  bool forward = true;  // render -> image
  int pixel = 0;        // flattened source-grid index
  Eigen::Vector3d source;
  Eigen::Vector3d q;  // backprojected source point
  Eigen::Vector3d p;  // point in the target camera frame
  Eigen::Vector3d e;  // proj(p) - target
  Matrix36d J;        // d e / d (left increment on G0)
  Eigen::Vector3d w;  // effective weight
  Eigen::Matrix3d R_rel;  // backward rows: rotation of G_i * G_0^-1
};

inline Eigen::Vector3d effective_weight(const Eigen::Vector3d& w, const BdpnpOptions& opts) {
  Eigen::Vector3d out;
  for (int c = 0; c < 3; ++c) out[c] = std::clamp(w[c], 0.0, opts.weight_max);
  if (!opts.depth_augmented) out.z() = 0.0;
  return out;
}

/// Calls visit(RowData) for every valid residual row of the problem at G0.
/// Rows whose effective weight is entirely zero are skipped unless
/// include_zero_weight is set; rows masked out or degenerate (invalid source
/// depth, nonpositive transformed Z) are always skipped.
template <typename F>
void visit_rows(const BdpnpProblem& problem, const RigidTransform& G0,
                bool include_zero_weight, F&& visit) {
  const BdpnpOptions& opts = problem.options;
  const bool do_forward = opts.direction != DirectionMode::kImageToRender;
  const bool do_backward = opts.direction != DirectionMode::kRenderToImage;

  for (size_t vi = 0; vi < problem.views.size(); ++vi) {
    const BdpnpView& view = problem.views[vi];

    if (do_forward) {
      const RigidTransform rel = G0 * view.render_pose.inverse();
      const CorrespondenceField& src = view.render_points;
      const CorrespondenceField& tgt = view.target_to_image;
      for (int r = 0; r < src.height(); ++r) {
        for (int c = 0; c < src.width(); ++c) {
          if (!src.valid(r, c) || !tgt.valid(r, c)) continue;
          RowData row;
          row.view = static_cast<int>(vi);
          row.forward = true;
          row.pixel = r * src.width() + c;
          row.w = effective_weight(view.weight_to_image.w.at(r, c), opts);
          if (!include_zero_weight && row.w.maxCoeff() <= 0.0) continue;
          row.source = src.points.at(r, c);
          const auto q = backproject(AugmentedPoint(row.source));
          if (!q) continue;
          row.q = *q;
          row.p = rel * row.q;
          if (row.p.z() <= kMinDepth) continue;
          row.e = project(row.p).vec() - tgt.points.at(r, c);
          row.J = projection_pose_jacobian_forward(row.p);
          visit(row);
        }
      }
    }

    if (do_backward) {
      const RigidTransform rel = view.render_pose * G0.inverse();
      const CorrespondenceField& src = problem.image_points;
      const CorrespondenceField& tgt = view.target_to_render;
      for (int r = 0; r < src.height(); ++r) {
        for (int c = 0; c < src.width(); ++c) {
          if (!src.valid(r, c) || !tgt.valid(r, c)) continue;
          RowData row;
          row.view = static_cast<int>(vi);
          row.forward = false;
          row.pixel = r * src.width() + c;
          row.w = effective_weight(view.weight_to_render.w.at(r, c), opts);
          if (!include_zero_weight && row.w.maxCoeff() <= 0.0) continue;
          row.source = src.points.at(r, c);
          const auto q = backproject(AugmentedPoint(row.source));
          if (!q) continue;
          row.q = *q;
          row.R_rel = rel.rotation;
          row.p = rel * row.q;
          if (row.p.z() <= kMinDepth) continue;
          row.e = project(row.p).vec() - tgt.points.at(r, c);
          row.J = projection_pose_jacobian_backward(row.q, rel.rotation, row.p);
          visit(row);
        }
      }
    }
  }
}

/// d residual / d (image-side inverse depth) for an image->render row.
inline Eigen::Vector3d depth_column(const RowData& row) {
  // q = backproject(x0) scales as 1/d, so dq/dd = -q/d.
  const double d = row.source.z();
  return projection_point_jacobian(row.p) * (row.R_rel * (-row.q / d));
}

}  // namespace poseref::detail
