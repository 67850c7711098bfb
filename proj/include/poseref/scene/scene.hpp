#pragma once

#include <cstdint>
#include <string>

#include "poseref/geometry/camera.hpp"
#include "poseref/geometry/fields.hpp"
#include "poseref/scene/model.hpp"
#include "poseref/scene/render.hpp"

namespace poseref {

/// Deterministic RNG used for every random draw in the toolkit, so results
/// are reproducible across platforms and standard libraries.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed ? seed : 0x9e3779b97f4a7c15ULL) {}

  uint64_t next_u64();
  double uniform();                      // [0, 1)
  double uniform(double lo, double hi);  // [lo, hi)
  double gaussian();                     // N(0, 1), Box-Muller
  Eigen::Vector3d gaussian3(double sigma);
  Eigen::Vector3d unit_vector();

 private:
  uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Immutable synthetic observation: one object, its ground-truth pose, the
/// camera, and the rendered "sensor" depth.
struct Scene {
  ObjectModel model;
  RigidTransform gt_pose;
  Intrinsics camera;
  DepthMap sensor_depth;
  bool empty_render = false;  // warning flag: no pixel covered

  DepthMap quarter_sensor_depth() const { return sensor_depth.subsample(4); }
  Intrinsics quarter_camera() const { return camera.downsample(4); }
};

Scene make_scene(const ObjectModel& model, const RigidTransform& gt_pose,
                 const Intrinsics& K, const RenderOptions& opts = {});

/// Random pose perturbation: rotation axis uniform on the sphere with angle
/// |N(0, sigma_rot)|, translation N(0, sigma_trans * I). Returned as a twist
/// to be applied with retract().
Twist sample_perturbation(double sigma_rot_deg, double sigma_trans_m, Rng& rng);

/// Pose with an exact rotation error (degrees, random axis) and exact
/// translation offset (meters, random direction) relative to G.
RigidTransform perturb_pose_exact(const RigidTransform& G, double rot_deg,
                                  double trans_m, Rng& rng);

// --- Scene bundle directory -------------------------------------------------
// {model.ply, symmetries.json, camera.json, gt_poses.json, depth.f32}
// depth.f32 is raw little-endian float32, row-major.

void save_scene(const Scene& scene, const std::string& dir);
Scene load_scene(const std::string& dir);

void save_intrinsics_json(const Intrinsics& K, const std::string& path);
Intrinsics load_intrinsics_json(const std::string& path);

void save_poses_json(const std::vector<RigidTransform>& poses, const std::string& path);
std::vector<RigidTransform> load_poses_json(const std::string& path);

void save_depth_f32(const DepthMap& depth, const std::string& path);
DepthMap load_depth_f32(const std::string& path, int height, int width);

/// Procedural test meshes (deterministic): a bumpy convex solid with
/// irregular faces. `complexity` scales the subdivision count.
ObjectModel make_test_model(uint64_t seed, int complexity = 2, double radius = 0.05);

}  // namespace poseref
