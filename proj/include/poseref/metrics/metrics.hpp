#pragma once

#include <string>
#include <vector>

#include "poseref/geometry/camera.hpp"
#include "poseref/geometry/fields.hpp"
#include "poseref/scene/model.hpp"

namespace poseref {

enum class MetricKind { kMssd, kMspd, kVsd };

std::string metric_name(MetricKind kind);

struct PoseError {
  MetricKind kind = MetricKind::kMssd;
  double value = 0.0;  // m, px, or unitless depending on kind
  int object_id = 0;
  std::vector<bool> threshold_passes;
};

/// Strictly increasing thresholds; recall counts errors strictly below each.
struct RecallSpec {
  std::vector<double> thresholds;

  /// 10 values from 5% to 50% of the diameter.
  static RecallSpec mssd(double diameter);
  /// 10 values from 5 to 50 px, scaled by `pixel_scale` (1 at 640x480).
  static RecallSpec mspd(double pixel_scale = 1.0);
  /// 10 discrepancy thresholds from 0.05 to 0.5.
  static RecallSpec vsd();
  /// 10 misalignment tolerances tau from 5% to 50% of the diameter.
  static std::vector<double> vsd_taus(double diameter);
};

/// Maximum symmetry-aware surface distance:
/// min over S in the symmetry set of max over vertices of |P_hat x - P_bar S x|.
double mssd(const RigidTransform& P_hat, const RigidTransform& P_bar, const ObjectModel& model);

/// Maximum symmetry-aware projection distance in pixels. Throws
/// std::domain_error if any vertex lands behind either camera.
double mspd(const RigidTransform& P_hat, const RigidTransform& P_bar, const ObjectModel& model,
            const Intrinsics& K);

struct VsdOptions {
  double tau = 0.02;            // depth agreement tolerance, meters
  double delta_visibility = 0.015;  // visibility tolerance vs sensor depth, meters
};

struct VsdResult {
  double value = 0.0;      // in [0, 1]
  bool empty_union = false;  // no visible pixel in either render
};

/// Visible surface discrepancy between depth renders at the predicted and
/// ground-truth poses. Pixels count as visible when rendered at most
/// delta_visibility behind the sensor depth (or the sensor has no reading).
VsdResult vsd(const DepthMap& D_hat, const DepthMap& D_bar, const DepthMap& D_sensor,
              const VsdOptions& opts);

/// Mean pass indicator over every (error, threshold) pair.
double recall(const std::vector<double>& errors, const RecallSpec& spec);

struct PoseLossOptions {
  double translation_weight = 1.0;  // rad per meter trade-off
};

/// Symmetry-min geodesic rotation angle plus weighted L1 translation distance.
double pose_loss(const RigidTransform& G, const RigidTransform& G_true,
                 const std::vector<RigidTransform>& symmetries,
                 const PoseLossOptions& opts = {});

struct FlowLossResult {
  double endpoint = 0.0;       // mean |dx| + |dy| over masked pixels
  double inverse_depth = 0.0;  // mean |dd|, reported separately
  int pixels = 0;
};

/// L1 endpoint error between two correspondence fields over the intersection
/// of their masks, optionally scaled into pixels via (scale_x, scale_y).
/// Throws std::invalid_argument when the intersection is empty.
FlowLossResult flow_loss(const CorrespondenceField& a, const CorrespondenceField& b,
                         double scale_x = 1.0, double scale_y = 1.0);

}  // namespace poseref
