#pragma once

#include "poseref/geometry/camera.hpp"
#include "poseref/geometry/fields.hpp"
#include "poseref/scene/model.hpp"

namespace poseref {

struct RenderOptions {
  double point_radius_px = 1.0;  // splat radius for point-cloud models
  bool backface_cull = false;    // only sound for closed meshes
};

/// Depth-only z-buffer render of the model posed at G (camera frame =
/// G * model frame). Pixels are sampled at their centers; triangles use
/// perspective-correct depth interpolation, point clouds splat a disc at
/// constant depth. An object fully behind the camera yields an empty map.
DepthMap render_depth(const ObjectModel& model, const RigidTransform& G,
                      const Intrinsics& K, const RenderOptions& opts = {});

}  // namespace poseref
