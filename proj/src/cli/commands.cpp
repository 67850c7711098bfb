#include <algorithm>
#include <chrono>
#include <iostream>
#include <mutex>

#include "cli_util.hpp"
#include "poseref/metrics/metrics.hpp"
#include "poseref/refine/refine.hpp"
#include "poseref/scene/render.hpp"
#include "poseref/solver/serialize.hpp"
#include "poseref/solver/vjp.hpp"

namespace poseref::cli {

using nlohmann::json;
namespace fs = std::filesystem;

OracleOptions make_oracle_options(double noise_px, double outlier_rate, double outlier_weight,
                                  uint64_t seed) {
  OracleOptions opts;
  opts.noise_sigma_px = noise_px;
  opts.outlier_rate = outlier_rate;
  opts.outlier_weight = outlier_weight;
  opts.seed = seed;
  return opts;
}

Scene bootstrap_scene(const SceneSource& src, uint64_t seed, int index) {
  const uint64_t object_seed = seed + static_cast<uint64_t>(index);
  if (!src.scene_dir.empty()) return load_scene(src.scene_dir);

  ObjectModel model;
  if (!src.model_path.empty()) {
    LoadModelOptions opts;
    opts.unit_scale = src.unit_scale;
    opts.symmetries_path = src.symmetries_path;
    model = load_model(src.model_path, opts);
  } else {
    model = make_test_model(object_seed, 2, 0.055);
  }

  Intrinsics K;
  K.fx = K.fy = src.focal;
  K.cx = src.width / 2.0;
  K.cy = src.height / 2.0;
  K.width = src.width;
  K.height = src.height;

  // Place the object so its projection spans about a third of the image.
  Rng rng(object_seed ^ 0xa5a5a5a5ULL);
  const double span = std::min(src.width, src.height) / 3.0;
  const double z = std::max(0.05, model.diameter * src.focal / span);
  RigidTransform gt;
  gt.rotation = so3_exp(rng.gaussian3(0.8));
  gt.translation = Eigen::Vector3d(rng.uniform(-0.02, 0.02) * z, rng.uniform(-0.02, 0.02) * z,
                                   z * rng.uniform(0.95, 1.1));
  return make_scene(model, gt, K);
}

namespace {

DirectionMode parse_direction(const std::string& name) {
  if (name == "bidirectional") return DirectionMode::kBidirectional;
  if (name == "render-to-image") return DirectionMode::kRenderToImage;
  if (name == "image-to-render") return DirectionMode::kImageToRender;
  throw std::runtime_error("unknown direction '" + name + "'");
}

InputMode parse_mode(const std::string& name) {
  if (name == "rgbd") return InputMode::kRgbd;
  if (name == "rgb") return InputMode::kRgb;
  throw std::runtime_error("unknown mode '" + name + "' (expected rgbd or rgb)");
}

}  // namespace

int cmd_solve(const SolveConfig& cfg) {
  const Scene scene = bootstrap_scene(cfg.source, cfg.seed, 0);
  Rng rng(cfg.seed * 31 + 7);
  const RigidTransform init =
      perturb_pose_exact(scene.gt_pose, cfg.init_rot_deg, cfg.init_trans_m, rng);

  BdpnpOptions opts;
  opts.iterations = cfg.gn_iters;
  opts.direction = parse_direction(cfg.direction);
  opts.depth_augmented = cfg.depth_augmented;

  Rng oracle_rng(cfg.seed * 101 + 13);
  const OracleOptions oracle =
      make_oracle_options(cfg.noise_px, cfg.outlier_rate, cfg.outlier_weight, cfg.seed);
  BdpnpProblem problem =
      build_oracle_problem(scene, init, cfg.views, oracle, opts, oracle_rng);

  SolveResult result;
  if (parse_mode(cfg.mode) == InputMode::kRgb) {
    const Intrinsics K_field = scene.camera.downsample(4);
    RgbSolveOptions rgb;
    rgb.iterations = cfg.gn_iters;
    result = solve_rgb(problem,
                       [&](const RigidTransform& pose) {
                         return render_depth(scene.model, pose, K_field);
                       },
                       K_field, rgb);
  } else {
    result = solve(problem);
  }

  json out{{"schema", "poseref/solve/1"},
           {"seed", cfg.seed},
           {"initial_pose", to_json(init)},
           {"pose", to_json(result.pose)},
           {"objective", objective(problem, result.pose)},
           {"rank_deficient", result.trace.rank_deficient}};
  out.update(error_json(result.pose, scene.gt_pose));
  write_json_file(out, fs::path(cfg.out_dir) / "pose.json");
  if (cfg.write_trace)
    write_json_file(to_json(result.trace), fs::path(cfg.out_dir) / "trace.json");

  std::cout << "solve: rotation error " << out["rotation_error_rad"].get<double>()
            << " rad, translation error " << out["translation_error_m"].get<double>()
            << " m\n";
  return result.trace.rank_deficient ? kExitNumericalFailure : kExitOk;
}

namespace {

struct RefineJobResult {
  RefineResult refine;
  RigidTransform init;
  double mssd_value = 0.0;
};

RefineJobResult run_refine_job(const RefineConfig& cfg, const Scene& scene, int index,
                               double init_rot_deg) {
  Rng rng(cfg.seed + static_cast<uint64_t>(index));
  const RigidTransform init =
      perturb_pose_exact(scene.gt_pose, init_rot_deg, cfg.init_trans_m, rng);

  OracleOptions oracle = make_oracle_options(cfg.noise_px, cfg.outlier_rate,
                                             cfg.outlier_weight,
                                             cfg.seed + static_cast<uint64_t>(index) * 7919);
  OracleRevisionProvider provider(scene, oracle);

  RefinementConfig rc;
  rc.inner_iterations = cfg.inner;
  rc.outer_loops = cfg.outer;
  rc.gn_iterations = cfg.gn_iters;
  rc.mode = parse_mode(cfg.mode);
  rc.max_views = cfg.views;
  rc.record_trace = cfg.write_trace;

  RefineJobResult out;
  out.init = init;
  out.refine = refine_pose(scene, init, provider, rc);
  out.mssd_value = mssd(out.refine.pose, scene.gt_pose, scene.model);
  return out;
}

json refine_record(const RefineIterationRecord& rec) {
  return json{{"outer", rec.outer},
              {"inner", rec.inner},
              {"pose", to_json(rec.pose)},
              {"objective", rec.objective},
              {"step_norm", rec.step_norm},
              {"rotation_error_rad", rec.rotation_error_rad},
              {"translation_error_m", rec.translation_error_m}};
}

double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  return v.size() % 2 ? v[v.size() / 2] : 0.5 * (v[v.size() / 2 - 1] + v[v.size() / 2]);
}

}  // namespace

int cmd_refine(const RefineConfig& cfg) {
  if (cfg.sweep_rot_deg.empty()) {
    const Scene scene = bootstrap_scene(cfg.source, cfg.seed, 0);
    const RefineJobResult job = run_refine_job(cfg, scene, 0, cfg.init_rot_deg);

    json out{{"schema", "poseref/refine/1"},
             {"seed", cfg.seed},
             {"initial_pose", to_json(job.init)},
             {"pose", to_json(job.refine.pose)},
             {"inner", cfg.inner},
             {"outer", cfg.outer},
             {"mssd", job.mssd_value},
             {"rank_deficient", job.refine.rank_deficient},
             {"aborted_mask_collapse", job.refine.aborted_mask_collapse}};
    out.update(error_json(job.refine.pose, scene.gt_pose));
    write_json_file(out, fs::path(cfg.out_dir) / "refined.json");

    if (cfg.write_trace) {
      fs::create_directories(cfg.out_dir);
      std::ofstream trace(fs::path(cfg.out_dir) / "trace.jsonl");
      for (const auto& rec : job.refine.trace) trace << refine_record(rec).dump() << "\n";
    }
    std::cout << "refine: rotation error " << out["rotation_error_rad"].get<double>()
              << " rad after " << cfg.outer << "x" << cfg.inner << " iterations\n";
    if (job.refine.aborted_mask_collapse) return kExitNumericalFailure;
    return job.refine.rank_deficient ? kExitNumericalFailure : kExitOk;
  }

  // Sweep mode: initial-rotation grid, cfg.scenes objects per grid point.
  json rows = json::array();
  for (double rot : cfg.sweep_rot_deg) {
    std::vector<double> rot_err(cfg.scenes), trans_err(cfg.scenes), mssd_val(cfg.scenes);
    std::vector<Scene> scenes(cfg.scenes);
    for (int i = 0; i < cfg.scenes; ++i) scenes[i] = bootstrap_scene(cfg.source, cfg.seed, i);
    parallel_for(cfg.scenes, cfg.jobs, [&](int i) {
      const RefineJobResult job = run_refine_job(cfg, scenes[i], i, rot);
      rot_err[i] = rotation_geodesic_distance(job.refine.pose, scenes[i].gt_pose);
      trans_err[i] = (job.refine.pose.translation - scenes[i].gt_pose.translation).norm();
      mssd_val[i] = job.mssd_value;
    });
    rows.push_back(json{{"initial_rotation_deg", rot},
                        {"median_rotation_error_rad", median_of(rot_err)},
                        {"median_translation_error_m", median_of(trans_err)},
                        {"median_mssd_m", median_of(mssd_val)},
                        {"scenes", cfg.scenes}});
    std::cout << "sweep rot " << rot << " deg -> median rotation error "
              << median_of(rot_err) << " rad\n";
  }
  write_json_file(json{{"schema", "poseref/refine-sweep/1"}, {"seed", cfg.seed},
                       {"rows", rows}},
                  fs::path(cfg.out_dir) / "sweep.json");
  return kExitOk;
}

int cmd_eval(const EvalConfig& cfg) {
  const auto pred = load_poses_json(cfg.pred_path);
  const auto gt = load_poses_json(cfg.gt_path);
  if (pred.size() != gt.size())
    throw std::runtime_error("eval: prediction and ground-truth counts differ");
  if (pred.empty()) throw std::runtime_error("eval: no poses");

  LoadModelOptions model_opts;
  model_opts.unit_scale = cfg.unit_scale;
  if (!cfg.symmetries_path.empty()) {
    if (fs::exists(cfg.symmetries_path)) {
      model_opts.symmetries_path = cfg.symmetries_path;
    } else {
      std::cerr << "warning: symmetry file " << cfg.symmetries_path
                << " not found; assuming the identity only\n";
    }
  }
  const ObjectModel model = load_model(cfg.model_path, model_opts);
  const Intrinsics K = load_intrinsics_json(cfg.camera_path);

  VsdOptions vsd_opts;
  vsd_opts.delta_visibility = cfg.vsd_delta;

  fs::create_directories(cfg.out_dir);
  std::ofstream csv(fs::path(cfg.out_dir) / "metrics.csv");
  csv << "image,object,metric,value\n";

  std::vector<double> mssd_errors, mspd_errors;
  std::vector<double> vsd_recalls;
  const RecallSpec vsd_spec = RecallSpec::vsd();
  const auto taus = RecallSpec::vsd_taus(model.diameter);

  for (size_t i = 0; i < pred.size(); ++i) {
    const double e_mssd = mssd(pred[i], gt[i], model);
    const double e_mspd = mspd(pred[i], gt[i], model, K);
    mssd_errors.push_back(e_mssd);
    mspd_errors.push_back(e_mspd);
    csv << "0," << i << ",MSSD," << e_mssd << "\n";
    csv << "0," << i << ",MSPD," << e_mspd << "\n";

    // VSD: render prediction and ground truth; the ground-truth render stands
    // in for the sensor depth.
    const DepthMap d_hat = render_depth(model, pred[i], K);
    const DepthMap d_bar = render_depth(model, gt[i], K);
    long pass = 0;
    for (double tau : taus) {
      VsdOptions o = vsd_opts;
      o.tau = tau;
      const VsdResult r = vsd(d_hat, d_bar, d_bar, o);
      csv << "0," << i << ",VSD@" << tau << "," << r.value << "\n";
      for (double th : vsd_spec.thresholds)
        if (r.value < th) ++pass;
    }
    vsd_recalls.push_back(static_cast<double>(pass) /
                          static_cast<double>(taus.size() * vsd_spec.thresholds.size()));
  }

  const double mssd_recall = recall(mssd_errors, RecallSpec::mssd(model.diameter));
  const double mspd_recall = recall(mspd_errors, RecallSpec::mspd(cfg.mspd_scale));
  double vsd_recall = 0.0;
  for (double v : vsd_recalls) vsd_recall += v;
  vsd_recall /= static_cast<double>(vsd_recalls.size());
  const double avg = (mssd_recall + mspd_recall + vsd_recall) / 3.0;

  const json summary{{"schema", "poseref/eval/1"},
                     {"objects", pred.size()},
                     {"Avg", avg},
                     {"MSPD", mspd_recall},
                     {"VSD", vsd_recall},
                     {"MSSD", mssd_recall}};
  write_json_file(summary, fs::path(cfg.out_dir) / "summary.json");
  std::cout << "eval: Avg " << avg << "  MSPD " << mspd_recall << "  VSD " << vsd_recall
            << "  MSSD " << mssd_recall << "\n";
  return kExitOk;
}

int cmd_gradcheck(const GradcheckConfig& cfg) {
  // One synthetic mini-problem per index; grid size follows cfg.pixels.
  const int side = std::max(3, static_cast<int>(std::lround(std::sqrt(cfg.pixels * 4))));
  struct ClassStats {
    double max_rel = 0.0;
    long compared = 0;
  };
  ClassStats by_class[4];  // rev fwd, w fwd, rev bwd, w bwd
  const char* class_names[4] = {"revision_to_image", "weight_to_image", "revision_to_render",
                                "weight_to_render"};

  for (int prob = 0; prob < cfg.problems; ++prob) {
    const uint64_t seed = cfg.seed + static_cast<uint64_t>(prob);
    Rng rng(seed);
    Intrinsics K;
    K.fx = K.fy = 30.0;
    K.cx = side * 2.0;
    K.cy = side * 1.5;
    K.width = side * 4;
    K.height = side * 3;
    const ObjectModel model = make_test_model(seed, 1, 0.055);
    RigidTransform gt;
    gt.rotation = so3_exp(rng.gaussian3(0.8));
    gt.translation = Eigen::Vector3d(0, 0, model.diameter * K.fx / side);
    const Scene scene = make_scene(model, gt, K);
    if (scene.empty_render) continue;

    BdpnpOptions opts;
    opts.iterations = cfg.gn_iters;
    OracleOptions oracle = make_oracle_options(0.4, 0.0, 0.0, seed * 5 + 3);
    Rng oracle_rng(seed * 17 + 5);
    const RigidTransform init = perturb_pose_exact(gt, 4.0, 0.01, rng);
    BdpnpProblem problem = build_oracle_problem(scene, init, 2, oracle, opts, oracle_rng);
    for (auto& view : problem.views) {
      for (auto& w : view.weight_to_image.w)
        w = Eigen::Vector3d(rng.uniform(0.2, 0.8), rng.uniform(0.2, 0.8),
                            rng.uniform(0.2, 0.8));
      for (auto& w : view.weight_to_render.w)
        w = Eigen::Vector3d(rng.uniform(0.2, 0.8), rng.uniform(0.2, 0.8),
                            rng.uniform(0.2, 0.8));
    }

    const SolveResult base = solve(problem);
    if (base.trace.rank_deficient) continue;
    Vector6d upstream;
    for (int i = 0; i < 6; ++i) upstream[i] = rng.uniform(-1, 1);
    const BdpnpGradients grads = solver_vjp(problem, base.trace, upstream);

    double gmax = 0.0;
    for (const auto& vg : grads.views)
      for (const auto* grid : {&vg.revision_to_image, &vg.weight_to_image,
                               &vg.revision_to_render, &vg.weight_to_render})
        for (const auto& v : *grid) gmax = std::max(gmax, v.cwiseAbs().maxCoeff());
    if (gmax == 0.0) continue;
    const double floor = gmax * 1e-3;
    const double h = 1e-5;

    auto loss = [&](const BdpnpProblem& p) {
      return upstream.dot(se3_log(solve(p).pose * base.pose.inverse()).vec());
    };
    Rng pick(seed * 23 + 11);
    for (size_t vi = 0; vi < grads.views.size(); ++vi) {
      for (int cls = 0; cls < 4; ++cls) {
        const auto& grid = cls == 0   ? grads.views[vi].revision_to_image
                           : cls == 1 ? grads.views[vi].weight_to_image
                           : cls == 2 ? grads.views[vi].revision_to_render
                                      : grads.views[vi].weight_to_render;
        for (size_t pix = 0; pix < grid.size(); ++pix) {
          for (int ch = 0; ch < 3; ++ch) {
            const double analytic = grid[pix][ch];
            if (std::abs(analytic) < floor) continue;
            if (pick.uniform() > 6.0 / cfg.pixels / cfg.problems * 2.0 &&
                by_class[cls].compared > 50)
              continue;  // cap FD work once a class has coverage
            BdpnpProblem work = problem;
            auto& target = cls == 0   ? work.views[vi].target_to_image.points
                           : cls == 1 ? work.views[vi].weight_to_image.w
                           : cls == 2 ? work.views[vi].target_to_render.points
                                      : work.views[vi].weight_to_render.w;
            target[pix][ch] += h;
            const double up = loss(work);
            target[pix][ch] -= 2 * h;
            const double down = loss(work);
            const double numeric = (up - down) / (2 * h);
            const double rel = std::abs(analytic - numeric) /
                               std::max(std::abs(analytic), std::abs(numeric));
            by_class[cls].max_rel = std::max(by_class[cls].max_rel, rel);
            ++by_class[cls].compared;
          }
        }
      }
    }
  }

  json report{{"schema", "poseref/gradcheck/1"},
              {"seed", cfg.seed},
              {"problems", cfg.problems},
              {"pixels", cfg.pixels},
              {"gn_iters", cfg.gn_iters},
              {"tolerance", cfg.tolerance}};
  double overall = 0.0;
  bool any = false;
  for (int cls = 0; cls < 4; ++cls) {
    report[class_names[cls]] =
        json{{"max_rel_error", by_class[cls].max_rel}, {"compared", by_class[cls].compared}};
    std::cout << "gradcheck " << class_names[cls] << ": max rel error "
              << by_class[cls].max_rel << " over " << by_class[cls].compared << " entries\n";
    overall = std::max(overall, by_class[cls].max_rel);
    any = any || by_class[cls].compared > 0;
  }
  report["max_rel_error"] = overall;
  const bool pass = any && overall < cfg.tolerance;
  report["pass"] = pass;
  write_json_file(report, fs::path(cfg.out_dir) / "gradcheck.json");
  return pass ? kExitOk : kExitNumericalFailure;
}

int cmd_bench(const BenchConfig& cfg) {
  std::vector<Scene> scenes(cfg.scenes);
  for (int i = 0; i < cfg.scenes; ++i) scenes[i] = bootstrap_scene(cfg.source, cfg.seed, i);

  json rows = json::array();
  json timing_rows = json::array();
  for (int outer : cfg.outer_grid) {
    for (int inner : cfg.inner_grid) {
      std::vector<double> rot_err(cfg.scenes), wall_ms(cfg.scenes);
      parallel_for(cfg.scenes, cfg.jobs, [&](int i) {
        RefineConfig rc;
        rc.seed = cfg.seed;
        rc.inner = inner;
        rc.outer = outer;
        rc.gn_iters = cfg.gn_iters;
        rc.noise_px = cfg.noise_px;
        rc.outlier_rate = cfg.outlier_rate;
        rc.init_rot_deg = cfg.init_rot_deg;
        rc.init_trans_m = cfg.init_trans_m;
        rc.write_trace = false;
        const auto start = std::chrono::steady_clock::now();
        const RefineJobResult job = run_refine_job(rc, scenes[i], i, cfg.init_rot_deg);
        wall_ms[i] = std::chrono::duration<double, std::milli>(
                         std::chrono::steady_clock::now() - start)
                         .count();
        rot_err[i] = rotation_geodesic_distance(job.refine.pose, scenes[i].gt_pose);
      });
      rows.push_back(json{{"outer", outer},
                          {"inner", inner},
                          {"median_rotation_error_rad", median_of(rot_err)},
                          {"scenes", cfg.scenes}});
      timing_rows.push_back(json{{"outer", outer},
                                 {"inner", inner},
                                 {"median_wall_ms", median_of(wall_ms)}});
      std::cout << "bench outer=" << outer << " inner=" << inner << ": median rot err "
                << median_of(rot_err) << " rad, median wall " << median_of(wall_ms)
                << " ms\n";
    }
  }
  // Accuracy rows are deterministic under a fixed seed; wall-clock timings are
  // not and live in a separate artifact.
  write_json_file(json{{"schema", "poseref/bench/1"}, {"seed", cfg.seed}, {"rows", rows}},
                  fs::path(cfg.out_dir) / "bench.json");
  write_json_file(json{{"schema", "poseref/bench-timing/1"}, {"rows", timing_rows}},
                  fs::path(cfg.out_dir) / "bench_timing.json");
  return kExitOk;
}

}  // namespace poseref::cli
