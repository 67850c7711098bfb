#include "poseref/metrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace poseref {

std::string metric_name(MetricKind kind) {
  switch (kind) {
    case MetricKind::kMssd: return "MSSD";
    case MetricKind::kMspd: return "MSPD";
    case MetricKind::kVsd: return "VSD";
  }
  return "?";
}

RecallSpec RecallSpec::mssd(double diameter) {
  RecallSpec spec;
  for (int i = 1; i <= 10; ++i) spec.thresholds.push_back(0.05 * i * diameter);
  return spec;
}

RecallSpec RecallSpec::mspd(double pixel_scale) {
  RecallSpec spec;
  for (int i = 1; i <= 10; ++i) spec.thresholds.push_back(5.0 * i * pixel_scale);
  return spec;
}

RecallSpec RecallSpec::vsd() {
  RecallSpec spec;
  for (int i = 1; i <= 10; ++i) spec.thresholds.push_back(0.05 * i);
  return spec;
}

std::vector<double> RecallSpec::vsd_taus(double diameter) {
  std::vector<double> taus;
  for (int i = 1; i <= 10; ++i) taus.push_back(0.05 * i * diameter);
  return taus;
}

double mssd(const RigidTransform& P_hat, const RigidTransform& P_bar, const ObjectModel& model) {
  if (model.vertices.empty()) throw std::invalid_argument("mssd: model has no vertices");
  double best = std::numeric_limits<double>::infinity();
  for (const RigidTransform& S : model.symmetries) {
    const RigidTransform P_bar_S = P_bar * S;
    double worst = 0.0;
    for (const Eigen::Vector3d& x : model.vertices)
      worst = std::max(worst, (P_hat * x - P_bar_S * x).norm());
    best = std::min(best, worst);
  }
  return best;
}

double mspd(const RigidTransform& P_hat, const RigidTransform& P_bar, const ObjectModel& model,
            const Intrinsics& K) {
  if (model.vertices.empty()) throw std::invalid_argument("mspd: model has no vertices");
  auto project_px = [&](const Eigen::Vector3d& X) {
    if (X.z() <= kMinDepth) throw std::domain_error("mspd: vertex behind camera");
    return K.denormalize({X.x() / X.z(), X.y() / X.z()});
  };
  double best = std::numeric_limits<double>::infinity();
  for (const RigidTransform& S : model.symmetries) {
    const RigidTransform P_bar_S = P_bar * S;
    double worst = 0.0;
    for (const Eigen::Vector3d& x : model.vertices)
      worst = std::max(worst, (project_px(P_hat * x) - project_px(P_bar_S * x)).norm());
    best = std::min(best, worst);
  }
  return best;
}

VsdResult vsd(const DepthMap& D_hat, const DepthMap& D_bar, const DepthMap& D_sensor,
              const VsdOptions& opts) {
  const int h = D_hat.height();
  const int w = D_hat.width();
  if (D_bar.height() != h || D_bar.width() != w || D_sensor.height() != h ||
      D_sensor.width() != w)
    throw std::invalid_argument("vsd: depth map resolutions differ");

  auto visible = [&](const DepthMap& D, int r, int c) {
    const double z = D.z.at(r, c);
    if (z <= 0.0) return false;
    const double zs = D_sensor.z.at(r, c);
    if (zs <= 0.0) return true;  // no sensor reading contradicts the render
    return z <= zs + opts.delta_visibility;
  };

  long union_count = 0;
  long mismatch = 0;
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const bool vh = visible(D_hat, r, c);
      const bool vb = visible(D_bar, r, c);
      if (!vh && !vb) continue;
      ++union_count;
      if (vh && vb && std::abs(D_hat.z.at(r, c) - D_bar.z.at(r, c)) < opts.tau) continue;
      ++mismatch;
    }
  }

  VsdResult out;
  if (union_count == 0) {
    out.empty_union = true;  // defined as a perfect score, flagged
    out.value = 0.0;
  } else {
    out.value = static_cast<double>(mismatch) / static_cast<double>(union_count);
  }
  return out;
}

double recall(const std::vector<double>& errors, const RecallSpec& spec) {
  if (errors.empty()) throw std::invalid_argument("recall: empty error list");
  if (spec.thresholds.empty()) throw std::invalid_argument("recall: empty threshold list");
  for (size_t i = 1; i < spec.thresholds.size(); ++i)
    if (spec.thresholds[i] <= spec.thresholds[i - 1])
      throw std::invalid_argument("recall: thresholds not strictly increasing");
  long pass = 0;
  for (double e : errors)
    for (double th : spec.thresholds)
      if (e < th) ++pass;
  return static_cast<double>(pass) /
         static_cast<double>(errors.size() * spec.thresholds.size());
}

double pose_loss(const RigidTransform& G, const RigidTransform& G_true,
                 const std::vector<RigidTransform>& symmetries,
                 const PoseLossOptions& opts) {
  double best = std::numeric_limits<double>::infinity();
  for (const RigidTransform& S : symmetries) {
    const RigidTransform target = G_true * S;
    const double rot = rotation_geodesic_distance(G, target);
    const double trans = (G.translation - target.translation).lpNorm<1>();
    best = std::min(best, rot + opts.translation_weight * trans);
  }
  return best;
}

FlowLossResult flow_loss(const CorrespondenceField& a, const CorrespondenceField& b,
                         double scale_x, double scale_y) {
  if (a.height() != b.height() || a.width() != b.width())
    throw std::invalid_argument("flow_loss: field shapes differ");
  FlowLossResult out;
  double sum_xy = 0.0, sum_d = 0.0;
  for (int r = 0; r < a.height(); ++r) {
    for (int c = 0; c < a.width(); ++c) {
      if (!a.valid(r, c) || !b.valid(r, c)) continue;
      const Eigen::Vector3d d = a.points.at(r, c) - b.points.at(r, c);
      sum_xy += std::abs(d.x() * scale_x) + std::abs(d.y() * scale_y);
      sum_d += std::abs(d.z());
      ++out.pixels;
    }
  }
  if (out.pixels == 0) throw std::invalid_argument("flow_loss: empty mask intersection");
  out.endpoint = sum_xy / out.pixels;
  out.inverse_depth = sum_d / out.pixels;
  return out;
}

}  // namespace poseref
