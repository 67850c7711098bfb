#include "poseref/refine/refine.hpp"

#include <cmath>
#include <stdexcept>

#include "poseref/scene/render.hpp"

namespace poseref {

void RefinementConfig::validate() const {
  if (inner_iterations < 1 || outer_loops < 1 || gn_iterations < 1)
    throw std::invalid_argument("RefinementConfig: iteration counts must be >= 1");
  if (!(perturb_angle_deg > 0.0 && perturb_angle_deg < 90.0))
    throw std::invalid_argument("RefinementConfig: perturbation angle must be in (0, 90)");
  if (field_stride < 1) throw std::invalid_argument("RefinementConfig: field_stride < 1");
  if (max_views < 0) throw std::invalid_argument("RefinementConfig: max_views < 0");
}

std::vector<RigidTransform> perturbed_view_poses(const RigidTransform& G, InputMode mode,
                                                 double angle_deg) {
  std::vector<RigidTransform> poses{G};
  auto add_ring = [&](double deg) {
    const double angle = deg * M_PI / 180.0;
    for (int axis = 0; axis < 3; ++axis) {
      for (double sign : {1.0, -1.0}) {
        // Object-frame axis rotation: orientation changes, position stays.
        const Eigen::Matrix3d R = so3_exp(sign * angle * Eigen::Vector3d::Unit(axis));
        poses.emplace_back(G.rotation * R, G.translation);
      }
    }
  };
  add_ring(angle_deg);
  if (mode == InputMode::kRgb) add_ring(2.0 * angle_deg);
  return poses;
}

ScalarField depth_residuals(const DepthMap& target_depth, const CorrespondenceField& x,
                            const Intrinsics& K) {
  Grid<double> inv_z(target_depth.height(), target_depth.width(), 0.0);
  Grid<uint8_t> inv_mask(target_depth.height(), target_depth.width(), 0);
  for (int r = 0; r < target_depth.height(); ++r) {
    for (int c = 0; c < target_depth.width(); ++c) {
      const double z = target_depth.z.at(r, c);
      if (z <= 0.0) continue;
      inv_z.at(r, c) = 1.0 / z;
      inv_mask.at(r, c) = 1;
    }
  }

  ScalarField out(x.height(), x.width());
  for (int r = 0; r < x.height(); ++r) {
    for (int c = 0; c < x.width(); ++c) {
      if (!x.valid(r, c)) continue;
      const Eigen::Vector3d& p = x.points.at(r, c);
      const Eigen::Vector2d px = K.denormalize({p.x(), p.y()});
      const auto sample = bilinear_sample(inv_z, px.x() - 0.5, px.y() - 0.5, &inv_mask);
      if (!sample) continue;
      out.v.at(r, c) = p.z() - *sample;
      out.mask.at(r, c) = 1;
    }
  }
  return out;
}

CorrespondenceField solver_residual_features(const CorrespondenceField& x_t,
                                             const CorrespondenceField& x_prev_revised) {
  CorrespondenceField out(x_t.height(), x_t.width());
  const bool have_prev =
      x_prev_revised.height() == x_t.height() && x_prev_revised.width() == x_t.width();
  for (int r = 0; r < x_t.height(); ++r) {
    for (int c = 0; c < x_t.width(); ++c) {
      if (!x_t.valid(r, c)) continue;
      if (!have_prev) {
        out.set(r, c, AugmentedPoint(0, 0, 0), true);  // defined initial value
      } else if (x_prev_revised.valid(r, c)) {
        out.points.at(r, c) = x_t.points.at(r, c) - x_prev_revised.points.at(r, c);
        out.mask.at(r, c) = 1;
      }
    }
  }
  return out;
}

RefineResult refine_pose(const Scene& scene, const RigidTransform& G_init,
                         RevisionProvider& provider, const RefinementConfig& cfg) {
  cfg.validate();
  const Intrinsics K_field = scene.camera.downsample(cfg.field_stride);
  const DepthMap sensor_field = cfg.field_stride > 1
                                    ? scene.sensor_depth.subsample(cfg.field_stride)
                                    : scene.sensor_depth;
  const bool rgb = cfg.mode == InputMode::kRgb;
  const bool correlate = provider.wants_correlation();
  const double feature_freq = scene.model.diameter > 0 ? 2.0 * M_PI / scene.model.diameter : 1.0;

  RefineResult result;
  RigidTransform G = G_init;

  for (int outer = 0; outer < cfg.outer_loops; ++outer) {
    ViewSet vs;
    vs.camera = K_field;
    std::vector<RigidTransform> poses = perturbed_view_poses(G, cfg.mode, cfg.perturb_angle_deg);
    if (cfg.max_views > 0 && static_cast<int>(poses.size()) > cfg.max_views)
      poses.resize(cfg.max_views);
    for (const RigidTransform& pose : poses)
      vs.views.push_back({pose, render_depth(scene.model, pose, K_field)});
    vs.image_depth = rgb ? render_depth(scene.model, G, K_field) : sensor_field;
    provider.begin_outer(vs, outer);

    const int nviews = static_cast<int>(vs.views.size());
    std::vector<CorrespondenceField> render_points(nviews);
    for (int v = 0; v < nviews; ++v)
      render_points[v] = lattice_field(vs.views[v].render_depth, K_field);

    // Correlation pyramids are fixed per outer loop in RGB-D mode; the image
    // features use the scene's sensor geometry (stand-in for a learned encoder).
    std::vector<CorrelationPyramid> pyr_fwd(nviews), pyr_bwd(nviews);
    FeatureMap image_features;
    if (correlate) {
      image_features = positional_features(rgb ? vs.image_depth : sensor_field, K_field,
                                           scene.gt_pose, cfg.feature_dim, feature_freq);
      for (int v = 0; v < nviews; ++v) {
        const FeatureMap rf = positional_features(vs.views[v].render_depth, K_field,
                                                  vs.views[v].render_pose, cfg.feature_dim,
                                                  feature_freq);
        pyr_fwd[v] = build_correlation(rf, image_features, cfg.pyramid_levels);
        pyr_bwd[v] = build_correlation(image_features, rf, cfg.pyramid_levels);
      }
    }

    std::vector<CorrespondenceField> prev_revised_fwd(nviews), prev_revised_bwd(nviews);

    for (int inner = 0; inner < cfg.inner_iterations; ++inner) {
      if (rgb && inner > 0) vs.image_depth = render_depth(scene.model, G, K_field);

      BdpnpProblem problem;
      problem.initial_pose = G;
      problem.options = cfg.solver;
      problem.options.iterations = cfg.gn_iterations;
      problem.image_points = lattice_field(vs.image_depth, K_field);
      problem.views.reserve(nviews);

      for (int v = 0; v < nviews; ++v) {
        const ViewContext& view = vs.views[v];
        CorrespondenceField induced_fwd =
            induce_correspondence(view.render_pose, G, view.render_depth, K_field);
        CorrespondenceField induced_bwd =
            induce_correspondence(G, view.render_pose, vs.image_depth, K_field);
        const ScalarField dres_fwd = depth_residuals(vs.image_depth, induced_fwd, K_field);
        const ScalarField dres_bwd = depth_residuals(view.render_depth, induced_bwd, K_field);
        const CorrespondenceField sres_fwd =
            solver_residual_features(induced_fwd, prev_revised_fwd[v]);
        const CorrespondenceField sres_bwd =
            solver_residual_features(induced_bwd, prev_revised_bwd[v]);

        Eigen::MatrixXd corr_fwd, corr_bwd;
        if (correlate) {
          corr_fwd = lookup(pyr_fwd[v], induced_fwd, K_field, cfg.lookup_radius);
          corr_bwd = lookup(pyr_bwd[v], induced_bwd, K_field, cfg.lookup_radius);
        }

        ProviderInputs inputs;
        inputs.view_index = v;
        inputs.inner_iteration = inner;
        inputs.outer_loop = outer;
        inputs.induced_to_image = &induced_fwd;
        inputs.induced_to_render = &induced_bwd;
        inputs.correlation_to_image = correlate ? &corr_fwd : nullptr;
        inputs.correlation_to_render = correlate ? &corr_bwd : nullptr;
        inputs.depth_residual_to_image = &dres_fwd;
        inputs.depth_residual_to_render = &dres_bwd;
        inputs.solver_residual_to_image = &sres_fwd;
        inputs.solver_residual_to_render = &sres_bwd;
        ProviderOutput rev = provider.revise(inputs);

        BdpnpView term;
        term.render_pose = view.render_pose;
        term.render_points = render_points[v];
        term.target_to_image = apply_revisions(induced_fwd, rev.revision_to_image);
        term.weight_to_image = std::move(rev.weight_to_image);
        term.target_to_render = apply_revisions(induced_bwd, rev.revision_to_render);
        term.weight_to_render = std::move(rev.weight_to_render);
        problem.views.push_back(std::move(term));

        prev_revised_fwd[v] = problem.views.back().target_to_image;
        prev_revised_bwd[v] = problem.views.back().target_to_render;
      }

      SolveResult solved;
      try {
        if (rgb) {
          RgbSolveOptions rgb_opts;
          rgb_opts.iterations = cfg.gn_iterations;
          rgb_opts.discard_depth_update = cfg.discard_depth_update;
          solved = solve_rgb(problem,
                             [&](const RigidTransform& pose) {
                               return render_depth(scene.model, pose, K_field);
                             },
                             K_field, rgb_opts);
        } else {
          solved = solve(problem);
        }
      } catch (const std::invalid_argument&) {
        result.aborted_mask_collapse = true;
        result.pose = G;
        return result;
      }
      if (solved.trace.rank_deficient) result.rank_deficient = true;
      G = solved.pose;

      if (cfg.record_trace) {
        RefineIterationRecord rec;
        rec.outer = outer;
        rec.inner = inner;
        rec.pose = G;
        rec.objective = objective(problem, G);
        for (const auto& it : solved.trace.iterations) rec.step_norm += it.step_norm;
        rec.rotation_error_rad = rotation_geodesic_distance(G, scene.gt_pose);
        rec.translation_error_m = (G.translation - scene.gt_pose.translation).norm();
        result.trace.push_back(rec);
      }
    }
  }

  result.pose = G;
  return result;
}

}  // namespace poseref
