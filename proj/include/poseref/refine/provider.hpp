#pragma once

#include <Eigen/Core>
#include <memory>
#include <vector>

#include "poseref/correlation/correlation.hpp"
#include "poseref/geometry/fields.hpp"
#include "poseref/scene/scene.hpp"
#include "poseref/solver/bdpnp.hpp"

namespace poseref {

/// Scalar per-pixel field with validity mask.
struct ScalarField {
  Grid<double> v;
  Grid<uint8_t> mask;

  ScalarField() = default;
  ScalarField(int height, int width) : v(height, width, 0.0), mask(height, width, 0) {}
};

/// One rendered viewpoint available to the refinement loop.
struct ViewContext {
  RigidTransform render_pose;
  DepthMap render_depth;  // at the field grid resolution
};

/// Everything fixed for the duration of one outer loop.
struct ViewSet {
  std::vector<ViewContext> views;
  Intrinsics camera;     // intrinsics of the field grid
  DepthMap image_depth;  // image-side depth at the field grid (sensor or rendered)
};

/// Inputs a revision provider sees each inner iteration for one view pair —
/// the same quantities the learned update operator consumes: induced
/// correspondence fields, correlation features, depth residuals, and the
/// solver residuals from the previous iteration.
struct ProviderInputs {
  int view_index = 0;
  int inner_iteration = 0;
  int outer_loop = 0;
  const CorrespondenceField* induced_to_image = nullptr;   // x_{i->0}
  const CorrespondenceField* induced_to_render = nullptr;  // x_{0->i}
  const Eigen::MatrixXd* correlation_to_image = nullptr;   // lookup features (optional)
  const Eigen::MatrixXd* correlation_to_render = nullptr;
  const ScalarField* depth_residual_to_image = nullptr;
  const ScalarField* depth_residual_to_render = nullptr;
  const CorrespondenceField* solver_residual_to_image = nullptr;
  const CorrespondenceField* solver_residual_to_render = nullptr;
};

struct ProviderOutput {
  RevisionField revision_to_image;
  ConfidenceField weight_to_image;
  RevisionField revision_to_render;
  ConfidenceField weight_to_render;
};

/// Supplier of per-pixel correspondence revisions and confidence weights.
/// A trained update operator would implement this same interface.
class RevisionProvider {
 public:
  virtual ~RevisionProvider() = default;

  /// Whether the loop should build correlation pyramids and lookups.
  virtual bool wants_correlation() const { return false; }

  /// Called whenever the view set is (re)rendered. Also serves as the
  /// outer-loop reset hook; implementations decide what state to keep.
  virtual void begin_outer(const ViewSet& views, int outer_index) = 0;

  virtual ProviderOutput revise(const ProviderInputs& inputs) = 0;
};

struct OracleOptions {
  double noise_sigma_px = 0.0;        // Gaussian noise on x/y, field-grid pixels
  double noise_sigma_invdepth = -1.0; // on d; negative selects noise_sigma_px / fx
  double outlier_rate = 0.0;
  double outlier_weight = 0.0;        // confidence assigned to outlier pixels
  /// Per-view noise growth with render/image misalignment: sigma is scaled by
  /// (1 + gain * geodesic(render, truth)). Zero keeps the constant-noise
  /// oracle; positive values model a matcher whose accuracy degrades on
  /// poorly aligned renders.
  double noise_misalignment_gain = 0.0;
  uint64_t seed = 1;
};

/// Revision + confidence pair for both directions of one view.
struct OracleRevisions {
  RevisionField revision_to_image;
  ConfidenceField weight_to_image;
  RevisionField revision_to_render;
  ConfidenceField weight_to_render;
};

/// Ground-truth-derived revisions for one view pair:
/// revision = induce(G_true) - induce(G_current) + noise, outlier pixels get
/// uniform random targets, confidences are 1 on inliers and
/// opts.outlier_weight on outliers. Deterministic given the rng state.
OracleRevisions oracle_revisions(const RigidTransform& G_true, const RigidTransform& G_current,
                                 const RigidTransform& render_pose,
                                 const DepthMap& render_depth, const DepthMap& image_depth,
                                 const Intrinsics& K, const OracleOptions& opts, Rng& rng);

/// Stands in for the trained update operator: produces revisions that point
/// at the ground-truth-induced correspondences, with configurable noise and
/// outliers. The image-side truth uses the scene's sensor depth.
class OracleRevisionProvider : public RevisionProvider {
 public:
  OracleRevisionProvider(const Scene& scene, const OracleOptions& opts);

  void begin_outer(const ViewSet& views, int outer_index) override;
  ProviderOutput revise(const ProviderInputs& inputs) override;

  /// The oracle never reads correlation features; enable to exercise the path.
  void set_wants_correlation(bool value) { wants_correlation_ = value; }
  bool wants_correlation() const override { return wants_correlation_; }

 private:
  const Scene& scene_;
  OracleOptions opts_;
  Rng rng_;
  const ViewSet* views_ = nullptr;
  DepthMap true_image_depth_;  // sensor depth at the field grid
  bool wants_correlation_ = false;
};

/// Positional-encoding features of the object-frame surface points seen by a
/// depth map; the same physical point yields the same descriptor in every
/// view, so correlation volumes peak at true correspondences. dim is rounded
/// up to a multiple of 6.
FeatureMap positional_features(const DepthMap& depth, const Intrinsics& K,
                               const RigidTransform& pose, int dim, double frequency_scale);

/// One-shot problem assembly: renders `n_views` viewpoints around G_current
/// (field grid = camera / stride), applies oracle revisions against the scene
/// ground truth, and packages everything for a single BD-PnP solve.
BdpnpProblem build_oracle_problem(const Scene& scene, const RigidTransform& G_current,
                                  int n_views, const OracleOptions& oracle_opts,
                                  const BdpnpOptions& solver_opts, Rng& rng,
                                  int field_stride = 4);

}  // namespace poseref
