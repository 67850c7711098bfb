#pragma once

#include <vector>

#include "poseref/refine/provider.hpp"
#include "poseref/scene/scene.hpp"
#include "poseref/solver/bdpnp.hpp"

namespace poseref {

enum class InputMode { kRgbd, kRgb };

struct RefinementConfig {
  int inner_iterations = 40;
  int outer_loops = 1;     // 4 in final-results mode
  int gn_iterations = 10;  // per inner step; 3 in training mode
  InputMode mode = InputMode::kRgbd;
  double perturb_angle_deg = 22.5;
  int max_views = 0;  // 0 selects the per-mode count (7 rgbd / 13 rgb); 1 = single render
  int field_stride = 4;  // fields live at 1/stride of the camera resolution
  int lookup_radius = 3;
  int pyramid_levels = 4;
  int feature_dim = 12;
  bool discard_depth_update = true;  // RGB mode only
  BdpnpOptions solver;
  bool record_trace = true;

  void validate() const;
};

/// The render viewpoints around a pose estimate: the pose itself plus
/// +/- angle about each object-frame axis; RGB mode appends +/- 2*angle.
/// 7 poses for RGB-D, 13 for RGB at the default 22.5 degrees.
std::vector<RigidTransform> perturbed_view_poses(const RigidTransform& G, InputMode mode,
                                                 double angle_deg = 22.5);

/// Per-pixel inverse-depth residual of a correspondence field against the
/// other side's depth: x.d - bilinear(1/Z_target at x's coordinates).
ScalarField depth_residuals(const DepthMap& target_depth, const CorrespondenceField& x,
                            const Intrinsics& K);

/// x_t - x'_{t-1}: how far the solver left last iteration's revised targets.
/// Pass a default-constructed previous field on the first iteration to get zeros.
CorrespondenceField solver_residual_features(const CorrespondenceField& x_t,
                                             const CorrespondenceField& x_prev_revised);

struct RefineIterationRecord {
  int outer = 0;
  int inner = 0;
  RigidTransform pose;
  double objective = 0.0;
  double step_norm = 0.0;
  double rotation_error_rad = -1.0;   // vs scene ground truth
  double translation_error_m = -1.0;
};

struct RefineResult {
  RigidTransform pose;
  std::vector<RefineIterationRecord> trace;
  bool rank_deficient = false;
  bool aborted_mask_collapse = false;
};

/// The coupled loop: each outer loop re-renders the view set at the current
/// estimate; each inner iteration induces bidirectional correspondence
/// fields, gathers provider inputs (correlation lookups on demand), applies
/// the provider's revisions, and runs a BD-PnP solve.
RefineResult refine_pose(const Scene& scene, const RigidTransform& G_init,
                         RevisionProvider& provider, const RefinementConfig& cfg);

}  // namespace poseref
