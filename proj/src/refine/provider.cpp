#include "poseref/refine/provider.hpp"

#include <cmath>
#include <stdexcept>

#include "poseref/refine/refine.hpp"
#include "poseref/scene/render.hpp"

namespace poseref {

namespace {

struct NoiseModel {
  double sigma_x = 0, sigma_y = 0, sigma_d = 0;
  double x_lo = 0, x_hi = 0, y_lo = 0, y_hi = 0;  // outlier target box (normalized)
  double d_lo = 0, d_hi = 0;                      // outlier inverse-depth range
  double outlier_rate = 0;
  double outlier_weight = 0;
};

NoiseModel make_noise_model(const OracleOptions& opts, const Intrinsics& K,
                            const DepthMap& image_depth) {
  NoiseModel nm;
  nm.sigma_x = opts.noise_sigma_px / K.fx;
  nm.sigma_y = opts.noise_sigma_px / K.fy;
  nm.sigma_d =
      opts.noise_sigma_invdepth >= 0.0 ? opts.noise_sigma_invdepth : opts.noise_sigma_px / K.fx;
  nm.x_lo = (0.0 - K.cx) / K.fx;
  nm.x_hi = (K.width - K.cx) / K.fx;
  nm.y_lo = (0.0 - K.cy) / K.fy;
  nm.y_hi = (K.height - K.cy) / K.fy;
  double z_min = 0.0, z_max = 0.0;
  for (double z : image_depth.z) {
    if (z <= 0.0) continue;
    if (z_min == 0.0 || z < z_min) z_min = z;
    if (z > z_max) z_max = z;
  }
  nm.d_hi = z_min > 0.0 ? 2.0 / z_min : 5.0;
  nm.d_lo = z_max > 0.0 ? 0.5 / z_max : 0.2;
  nm.outlier_rate = opts.outlier_rate;
  nm.outlier_weight = opts.outlier_weight;
  return nm;
}

// revision = truth - current (+ noise); outliers get uniform random targets.
void make_direction(const CorrespondenceField& truth, const CorrespondenceField& current,
                    const NoiseModel& nm, Rng& rng, RevisionField* rev,
                    ConfidenceField* conf) {
  *rev = RevisionField(current.height(), current.width());
  *conf = ConfidenceField(current.height(), current.width(), Eigen::Vector3d::Zero());
  for (int r = 0; r < current.height(); ++r) {
    for (int c = 0; c < current.width(); ++c) {
      if (!current.valid(r, c) || !truth.valid(r, c)) {
        rev->mask.at(r, c) = 0;
        continue;
      }
      const bool outlier = nm.outlier_rate > 0.0 && rng.uniform() < nm.outlier_rate;
      Eigen::Vector3d target;
      if (outlier) {
        target = {rng.uniform(nm.x_lo, nm.x_hi), rng.uniform(nm.y_lo, nm.y_hi),
                  rng.uniform(nm.d_lo, nm.d_hi)};
        conf->w.at(r, c).setConstant(nm.outlier_weight);
      } else {
        target = truth.points.at(r, c);
        if (nm.sigma_x > 0.0 || nm.sigma_d > 0.0) {
          target.x() += nm.sigma_x * rng.gaussian();
          target.y() += nm.sigma_y * rng.gaussian();
          target.z() += nm.sigma_d * rng.gaussian();
        }
        conf->w.at(r, c).setOnes();
      }
      rev->r.at(r, c) = target - current.points.at(r, c);
    }
  }
}

}  // namespace

OracleRevisions oracle_revisions(const RigidTransform& G_true, const RigidTransform& G_current,
                                 const RigidTransform& render_pose,
                                 const DepthMap& render_depth, const DepthMap& image_depth,
                                 const Intrinsics& K, const OracleOptions& opts, Rng& rng) {
  const NoiseModel nm = make_noise_model(opts, K, image_depth);
  OracleRevisions out;
  make_direction(induce_correspondence(render_pose, G_true, render_depth, K),
                 induce_correspondence(render_pose, G_current, render_depth, K), nm, rng,
                 &out.revision_to_image, &out.weight_to_image);
  make_direction(induce_correspondence(G_true, render_pose, image_depth, K),
                 induce_correspondence(G_current, render_pose, image_depth, K), nm, rng,
                 &out.revision_to_render, &out.weight_to_render);
  return out;
}

OracleRevisionProvider::OracleRevisionProvider(const Scene& scene, const OracleOptions& opts)
    : scene_(scene), opts_(opts), rng_(opts.seed) {}

void OracleRevisionProvider::begin_outer(const ViewSet& views, int /*outer_index*/) {
  views_ = &views;
  const int stride = scene_.camera.height / views.camera.height;
  true_image_depth_ = stride > 1 ? scene_.sensor_depth.subsample(stride) : scene_.sensor_depth;
}

ProviderOutput OracleRevisionProvider::revise(const ProviderInputs& in) {
  if (!views_) throw std::logic_error("OracleRevisionProvider: begin_outer not called");
  if (!in.induced_to_image || !in.induced_to_render)
    throw std::invalid_argument("OracleRevisionProvider: induced fields are required");
  const ViewContext& view = views_->views.at(in.view_index);
  const Intrinsics& K = views_->camera;

  // The interface deliberately does not expose the current pose; the oracle
  // differences the truth-induced fields against the induced fields it is
  // handed. The image-side truth always uses the sensor depth, also in RGB
  // mode where the loop's image depth is a render.
  const CorrespondenceField true_fwd =
      induce_correspondence(view.render_pose, scene_.gt_pose, view.render_depth, K);
  const CorrespondenceField true_bwd =
      induce_correspondence(scene_.gt_pose, view.render_pose, true_image_depth_, K);

  const NoiseModel nm = make_noise_model(opts_, K, views_->image_depth);
  ProviderOutput out;
  make_direction(true_fwd, *in.induced_to_image, nm, rng_, &out.revision_to_image,
                 &out.weight_to_image);
  make_direction(true_bwd, *in.induced_to_render, nm, rng_, &out.revision_to_render,
                 &out.weight_to_render);
  return out;
}

BdpnpProblem build_oracle_problem(const Scene& scene, const RigidTransform& G_current,
                                  int n_views, const OracleOptions& oracle_opts,
                                  const BdpnpOptions& solver_opts, Rng& rng,
                                  int field_stride) {
  const Intrinsics K = scene.camera.downsample(field_stride);
  const DepthMap sensor =
      field_stride > 1 ? scene.sensor_depth.subsample(field_stride) : scene.sensor_depth;

  BdpnpProblem problem;
  problem.initial_pose = G_current;
  problem.options = solver_opts;
  problem.image_points = lattice_field(sensor, K);

  std::vector<RigidTransform> poses = perturbed_view_poses(G_current, InputMode::kRgbd);
  if (n_views > 0 && static_cast<int>(poses.size()) > n_views) poses.resize(n_views);

  for (const RigidTransform& pose : poses) {
    const DepthMap render = render_depth(scene.model, pose, K);
    const OracleRevisions rev = oracle_revisions(scene.gt_pose, G_current, pose, render,
                                                 sensor, K, oracle_opts, rng);
    BdpnpView view;
    view.render_pose = pose;
    view.render_points = lattice_field(render, K);
    view.target_to_image = apply_revisions(
        induce_correspondence(pose, G_current, render, K), rev.revision_to_image);
    view.weight_to_image = rev.weight_to_image;
    view.target_to_render = apply_revisions(
        induce_correspondence(G_current, pose, sensor, K), rev.revision_to_render);
    view.weight_to_render = rev.weight_to_render;
    problem.views.push_back(std::move(view));
  }
  return problem;
}

FeatureMap positional_features(const DepthMap& depth, const Intrinsics& K,
                               const RigidTransform& pose, int dim, double frequency_scale) {
  dim = ((dim + 5) / 6) * 6;
  FeatureMap fm(depth.height(), depth.width(), dim);
  const RigidTransform inv = pose.inverse();
  Eigen::VectorXd f(dim);
  for (int r = 0; r < depth.height(); ++r) {
    for (int c = 0; c < depth.width(); ++c) {
      const double z = depth.z.at(r, c);
      if (z <= 0.0) continue;
      const Eigen::Vector2d xy = K.normalize({c + 0.5, r + 0.5});
      const Eigen::Vector3d obj = inv * Eigen::Vector3d(xy.x() * z, xy.y() * z, z);
      for (int j = 0; j < dim; ++j) {
        const int axis = j % 3;
        const int octave = j / 6;
        const double phase = std::ldexp(frequency_scale, octave) * obj[axis];
        f[j] = ((j / 3) % 2) ? std::sin(phase) : std::cos(phase);
      }
      fm.set_feature(r, c, f);
    }
  }
  return fm;
}

}  // namespace poseref
