#pragma once

#include <functional>
#include <vector>

#include "poseref/geometry/fields.hpp"
#include "poseref/geometry/se3.hpp"

namespace poseref {

/// Per-pixel nonnegative weights for the (x, y, inverse-depth) residual
/// channels; diag(w) is the Mahalanobis matrix of one residual block.
struct ConfidenceField {
  Grid<Eigen::Vector3d> w;

  ConfidenceField() = default;
  ConfidenceField(int height, int width, const Eigen::Vector3d& fill = Eigen::Vector3d::Ones())
      : w(height, width, fill) {}

  static ConfidenceField constant(int height, int width, double value) {
    return ConfidenceField(height, width, Eigen::Vector3d::Constant(value));
  }
};

/// Per-pixel additive corrections to a correspondence field. Masked pixels
/// carry zero revision and zero weight.
struct RevisionField {
  Grid<Eigen::Vector3d> r;
  Grid<uint8_t> mask;

  RevisionField() = default;
  RevisionField(int height, int width)
      : r(height, width, Eigen::Vector3d::Zero()), mask(height, width, 1) {}
};

/// x' = x + r, masks intersected.
CorrespondenceField apply_revisions(const CorrespondenceField& x, const RevisionField& r);

enum class DirectionMode { kBidirectional, kRenderToImage, kImageToRender };

struct BdpnpOptions {
  int iterations = 10;        // 10 at inference, 3 in training mode
  double damping = 1e-4;      // Levenberg lambda_0; escalated x10 on singular systems
  bool depth_augmented = true;
  DirectionMode direction = DirectionMode::kBidirectional;
  bool adaptive_damping = false;  // retry a step with larger lambda if the objective rises
  double weight_max = 1.0;
  double early_exit_step_norm = 0.0;  // 0 keeps the fixed iteration count
  bool record_trace = true;
};

/// One render view paired with the image: fixed render pose, the source
/// points on each side's grid, and revised targets + confidences for both
/// mapping directions.
struct BdpnpView {
  RigidTransform render_pose;            // G_i
  CorrespondenceField render_points;     // x_i: render lattice coords + render inverse depth
  CorrespondenceField target_to_image;   // x'_{i->0}
  ConfidenceField weight_to_image;
  CorrespondenceField target_to_render;  // x'_{0->i}
  ConfidenceField weight_to_render;
};

struct BdpnpProblem {
  RigidTransform initial_pose;        // G_0 start value (the only variable)
  CorrespondenceField image_points;   // x_0: image lattice coords + image inverse depth
  std::vector<BdpnpView> views;
  BdpnpOptions options;

  /// Throws std::invalid_argument when the problem has no view or fewer than
  /// six effective residual rows at the initial pose. Returns the number of
  /// weights that will be clamped into [0, weight_max].
  long validate() const;
};

struct IterationRecord {
  RigidTransform pose_before;
  Twist step;
  double objective_before = 0.0;
  double step_norm = 0.0;
  double damping = 0.0;   // lambda actually used
  bool rank_deficient = false;
  int outer_loop = -1;    // set by the refinement loop; -1 for a bare solve
};

struct SolveTrace {
  std::vector<IterationRecord> iterations;
  RigidTransform final_pose;
  bool rank_deficient = false;
  bool adaptive = false;
};

struct SolveResult {
  RigidTransform pose;
  SolveTrace trace;
};

/// E(G0): both directional sums of weighted squared reprojection residuals.
double objective(const BdpnpProblem& problem, const RigidTransform& G0);

struct StepResult {
  Twist step;
  RigidTransform pose;
  double damping_used = 0.0;
  bool rank_deficient = false;
};

/// One damped Gauss-Newton update of Eq-style normal equations stacked over
/// both directions: (J^T W J + lambda diag(J^T W J)) dxi = -J^T W e.
StepResult gauss_newton_step(const BdpnpProblem& problem, const RigidTransform& G0,
                             double lambda);

/// Runs `iterations` Gauss-Newton updates from problem.initial_pose.
SolveResult solve(const BdpnpProblem& problem);
SolveResult solve(const BdpnpProblem& problem, int iterations);

struct RgbSolveOptions {
  int iterations = 10;
  bool discard_depth_update = true;  // re-render depth from the updated pose each step
};

/// RGB-only variant: the image-side inverse depth comes from rendering at the
/// current pose and is optimized jointly with the pose via a Schur complement
/// over the per-pixel depth block. Only the pose update is applied (unless
/// discard_depth_update is false, which applies the depth updates and stops
/// re-rendering, for ablation).
SolveResult solve_rgb(const BdpnpProblem& problem,
                      const std::function<DepthMap(const RigidTransform&)>& render_depth_fn,
                      const Intrinsics& K_grid, const RgbSolveOptions& rgb_opts);

/// Diagnostic / test surface: the linearized residual rows at G0.
struct LinearizedRow {
  int view = 0;
  bool render_to_image = true;
  int pixel = 0;                 // flattened grid index on the source side
  Eigen::Vector3d residual;      // proj(...) - target
  Matrix36d pose_jacobian;
  Eigen::Vector3d weight;        // effective weights (clamped, direction/depth masks applied)
  Eigen::Vector3d depth_jacobian;  // d residual / d image inverse depth (image->render rows)
};

std::vector<LinearizedRow> linearize(const BdpnpProblem& problem, const RigidTransform& G0,
                                     bool include_zero_weight = false);

}  // namespace poseref
