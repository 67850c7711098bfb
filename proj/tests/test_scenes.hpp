#pragma once

// Shared synthetic-scene fixtures for solver/refine/acceptance tests.

#include "poseref/refine/provider.hpp"
#include "poseref/refine/refine.hpp"
#include "poseref/scene/scene.hpp"
#include "poseref/solver/bdpnp.hpp"

namespace testbed {

using namespace poseref;

struct Setup {
  Scene scene;
  Intrinsics K_field;     // field-grid intrinsics
  DepthMap sensor_field;  // sensor depth at the field grid
};

inline Intrinsics crop_camera(int width = 64, int height = 48, double f = 80.0) {
  Intrinsics K;
  K.fx = K.fy = f;
  K.cx = width / 2.0 + 0.7;  // slightly off-center principal point
  K.cy = height / 2.0 - 0.4;
  K.width = width;
  K.height = height;
  return K;
}

inline Setup make_setup(uint64_t seed, const Intrinsics& K, int stride = 4,
                        int complexity = 2) {
  Rng rng(seed);
  const ObjectModel model = make_test_model(seed, complexity, 0.055);
  RigidTransform gt;
  gt.rotation = so3_exp(rng.gaussian3(0.8));
  gt.translation = Eigen::Vector3d(rng.uniform(-0.02, 0.02), rng.uniform(-0.02, 0.02),
                                   rng.uniform(0.3, 0.45));
  Setup s;
  s.scene = make_scene(model, gt, K);
  s.K_field = K.downsample(stride);
  s.sensor_field = s.scene.sensor_depth.subsample(stride);
  return s;
}

/// One refinement-style linearization: views around G_current, oracle
/// revisions against the ground truth, targets = induced + revision.
inline BdpnpProblem build_problem(const Setup& s, const RigidTransform& G_current,
                                  int n_views, const OracleOptions& oracle_opts,
                                  const BdpnpOptions& solver_opts, Rng& rng) {
  BdpnpProblem problem;
  problem.initial_pose = G_current;
  problem.options = solver_opts;
  problem.image_points = lattice_field(s.sensor_field, s.K_field);

  std::vector<RigidTransform> poses = perturbed_view_poses(G_current, InputMode::kRgbd);
  if (n_views > 0 && static_cast<int>(poses.size()) > n_views) poses.resize(n_views);

  for (const RigidTransform& pose : poses) {
    const DepthMap render = render_depth(s.scene.model, pose, s.K_field);
    const OracleRevisions rev =
        oracle_revisions(s.scene.gt_pose, G_current, pose, render, s.sensor_field, s.K_field,
                         oracle_opts, rng);
    BdpnpView view;
    view.render_pose = pose;
    view.render_points = lattice_field(render, s.K_field);
    view.target_to_image = apply_revisions(
        induce_correspondence(pose, G_current, render, s.K_field), rev.revision_to_image);
    view.weight_to_image = rev.weight_to_image;
    view.target_to_render = apply_revisions(
        induce_correspondence(G_current, pose, s.sensor_field, s.K_field),
        rev.revision_to_render);
    view.weight_to_render = rev.weight_to_render;
    problem.views.push_back(std::move(view));
  }
  return problem;
}

inline double rotation_error(const RigidTransform& a, const RigidTransform& b) {
  return rotation_geodesic_distance(a, b);
}

inline double translation_error(const RigidTransform& a, const RigidTransform& b) {
  return (a.translation - b.translation).norm();
}

inline double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace testbed
