#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <json.hpp>

#include "cli.hpp"

namespace poseref::cli {

namespace {

using nlohmann::json;

// Applies --config JSON values as new defaults; explicit flags still win
// because CLI11 parses them afterwards. Unknown keys are rejected.
class ConfigBinder {
 public:
  void bind(const std::string& key, double* v) { doubles_[key] = v; }
  void bind(const std::string& key, int* v) { ints_[key] = v; }
  void bind(const std::string& key, uint64_t* v) { u64s_[key] = v; }
  void bind(const std::string& key, bool* v) { bools_[key] = v; }
  void bind(const std::string& key, std::string* v) { strings_[key] = v; }
  void bind(const std::string& key, std::vector<double>* v) { dlists_[key] = v; }
  void bind(const std::string& key, std::vector<int>* v) { ilists_[key] = v; }

  void apply(const std::string& path) const {
    std::ifstream in(path);
    if (!in) throw CLI::ValidationError("--config", "cannot open " + path);
    json j;
    try {
      in >> j;
    } catch (const std::exception& e) {
      throw CLI::ValidationError("--config", std::string("parse error: ") + e.what());
    }
    for (const auto& [key, value] : j.items()) {
      if (key == "schema") continue;
      if (auto it = doubles_.find(key); it != doubles_.end()) *it->second = value.get<double>();
      else if (auto it2 = ints_.find(key); it2 != ints_.end()) *it2->second = value.get<int>();
      else if (auto it3 = u64s_.find(key); it3 != u64s_.end())
        *it3->second = value.get<uint64_t>();
      else if (auto it4 = bools_.find(key); it4 != bools_.end())
        *it4->second = value.get<bool>();
      else if (auto it5 = strings_.find(key); it5 != strings_.end())
        *it5->second = value.get<std::string>();
      else if (auto it6 = dlists_.find(key); it6 != dlists_.end())
        *it6->second = value.get<std::vector<double>>();
      else if (auto it7 = ilists_.find(key); it7 != ilists_.end())
        *it7->second = value.get<std::vector<int>>();
      else
        throw CLI::ValidationError("--config", "unknown key '" + key + "'");
    }
  }

 private:
  std::map<std::string, double*> doubles_;
  std::map<std::string, int*> ints_;
  std::map<std::string, uint64_t*> u64s_;
  std::map<std::string, bool*> bools_;
  std::map<std::string, std::string*> strings_;
  std::map<std::string, std::vector<double>*> dlists_;
  std::map<std::string, std::vector<int>*> ilists_;
};

void add_source_flags(CLI::App* app, SceneSource* src, ConfigBinder* binder) {
  app->add_option("--scene", src->scene_dir, "Scene bundle directory");
  app->add_option("--model", src->model_path, "PLY model (synthetic scene is generated)");
  app->add_option("--symmetries", src->symmetries_path, "Symmetry sidecar JSON");
  app->add_option("--unit-scale", src->unit_scale, "Model unit scale (1e-3 for mm)");
  app->add_option("--width", src->width, "Synthetic camera width");
  app->add_option("--height", src->height, "Synthetic camera height");
  app->add_option("--focal", src->focal, "Synthetic focal length, px");
  binder->bind("scene", &src->scene_dir);
  binder->bind("model", &src->model_path);
  binder->bind("symmetries", &src->symmetries_path);
  binder->bind("unit_scale", &src->unit_scale);
  binder->bind("width", &src->width);
  binder->bind("height", &src->height);
  binder->bind("focal", &src->focal);
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"Geometric 6D pose refinement toolkit"};
  app.require_subcommand(1);

  std::string config_path;

  SolveConfig solve_cfg;
  RefineConfig refine_cfg;
  EvalConfig eval_cfg;
  GradcheckConfig grad_cfg;
  BenchConfig bench_cfg;
  ConfigBinder solve_binder, refine_binder, eval_binder, grad_binder, bench_binder;

  // --- solve -----------------------------------------------------------------
  CLI::App* solve = app.add_subcommand("solve", "One BD-PnP solve with oracle revisions");
  solve->add_option("--config", config_path, "JSON config file (flags override)");
  add_source_flags(solve, &solve_cfg.source, &solve_binder);
  solve->add_option("--seed", solve_cfg.seed, "Root seed");
  solve->add_option("--out", solve_cfg.out_dir, "Output directory");
  solve->add_option("--gn-iters", solve_cfg.gn_iters, "Gauss-Newton iterations")
      ->check(CLI::PositiveNumber);
  solve->add_option("--views", solve_cfg.views, "Render view count")->check(CLI::PositiveNumber);
  solve->add_option("--mode", solve_cfg.mode, "rgbd | rgb");
  solve->add_option("--direction", solve_cfg.direction,
                    "bidirectional | render-to-image | image-to-render");
  solve->add_flag("!--no-depth-aug", solve_cfg.depth_augmented, "Disable depth augmentation");
  solve->add_option("--init-rot", solve_cfg.init_rot_deg, "Initial rotation error, deg");
  solve->add_option("--init-trans", solve_cfg.init_trans_m, "Initial translation error, m");
  solve->add_option("--noise", solve_cfg.noise_px, "Oracle noise sigma, px");
  solve->add_option("--outliers", solve_cfg.outlier_rate, "Oracle outlier fraction");
  solve->add_option("--outlier-weight", solve_cfg.outlier_weight, "Confidence on outliers");
  solve->add_flag("--trace", solve_cfg.write_trace, "Write trace.json");
  solve_binder.bind("seed", &solve_cfg.seed);
  solve_binder.bind("out", &solve_cfg.out_dir);
  solve_binder.bind("gn_iters", &solve_cfg.gn_iters);
  solve_binder.bind("views", &solve_cfg.views);
  solve_binder.bind("mode", &solve_cfg.mode);
  solve_binder.bind("direction", &solve_cfg.direction);
  solve_binder.bind("noise", &solve_cfg.noise_px);
  solve_binder.bind("outliers", &solve_cfg.outlier_rate);
  solve_binder.bind("outlier_weight", &solve_cfg.outlier_weight);
  solve_binder.bind("init_rot", &solve_cfg.init_rot_deg);
  solve_binder.bind("init_trans", &solve_cfg.init_trans_m);

  // --- refine ----------------------------------------------------------------
  CLI::App* refine = app.add_subcommand("refine", "Coupled inner/outer refinement loop");
  refine->add_option("--config", config_path, "JSON config file (flags override)");
  add_source_flags(refine, &refine_cfg.source, &refine_binder);
  refine->add_option("--seed", refine_cfg.seed, "Root seed");
  refine->add_option("--out", refine_cfg.out_dir, "Output directory");
  refine->add_option("--inner", refine_cfg.inner, "Inner iterations")
      ->check(CLI::PositiveNumber);
  refine->add_option("--outer", refine_cfg.outer, "Outer loops")->check(CLI::PositiveNumber);
  refine->add_option("--gn-iters", refine_cfg.gn_iters, "GN iterations per inner step")
      ->check(CLI::PositiveNumber);
  refine->add_option("--views", refine_cfg.views, "View count override (0 = per mode)");
  refine->add_option("--mode", refine_cfg.mode, "rgbd | rgb");
  refine->add_option("--init-rot", refine_cfg.init_rot_deg, "Initial rotation error, deg");
  refine->add_option("--init-trans", refine_cfg.init_trans_m, "Initial translation error, m");
  refine->add_option("--noise", refine_cfg.noise_px, "Oracle noise sigma, px");
  refine->add_option("--outliers", refine_cfg.outlier_rate, "Oracle outlier fraction");
  refine->add_option("--outlier-weight", refine_cfg.outlier_weight, "Confidence on outliers");
  refine->add_option("--sweep-rot", refine_cfg.sweep_rot_deg,
                     "Initial-rotation sweep grid, deg")->delimiter(',');
  refine->add_option("--scenes", refine_cfg.scenes, "Objects per sweep point")
      ->check(CLI::PositiveNumber);
  refine->add_option("--jobs", refine_cfg.jobs, "Worker threads (0 = hardware)");
  refine->add_flag("!--no-trace", refine_cfg.write_trace, "Skip trace.jsonl");
  refine_binder.bind("seed", &refine_cfg.seed);
  refine_binder.bind("out", &refine_cfg.out_dir);
  refine_binder.bind("inner", &refine_cfg.inner);
  refine_binder.bind("outer", &refine_cfg.outer);
  refine_binder.bind("gn_iters", &refine_cfg.gn_iters);
  refine_binder.bind("views", &refine_cfg.views);
  refine_binder.bind("mode", &refine_cfg.mode);
  refine_binder.bind("noise", &refine_cfg.noise_px);
  refine_binder.bind("outliers", &refine_cfg.outlier_rate);
  refine_binder.bind("outlier_weight", &refine_cfg.outlier_weight);
  refine_binder.bind("init_rot", &refine_cfg.init_rot_deg);
  refine_binder.bind("init_trans", &refine_cfg.init_trans_m);
  refine_binder.bind("sweep_rot", &refine_cfg.sweep_rot_deg);
  refine_binder.bind("scenes", &refine_cfg.scenes);
  refine_binder.bind("jobs", &refine_cfg.jobs);

  // --- eval ------------------------------------------------------------------
  CLI::App* eval = app.add_subcommand("eval", "Symmetry-aware pose metrics and recall");
  eval->add_option("--config", config_path, "JSON config file (flags override)");
  eval->add_option("--pred", eval_cfg.pred_path, "Predicted poses JSON")->required();
  eval->add_option("--gt", eval_cfg.gt_path, "Ground-truth poses JSON")->required();
  eval->add_option("--model", eval_cfg.model_path, "PLY model")->required();
  eval->add_option("--symmetries", eval_cfg.symmetries_path, "Symmetry sidecar JSON");
  eval->add_option("--camera", eval_cfg.camera_path, "Camera intrinsics JSON")->required();
  eval->add_option("--unit-scale", eval_cfg.unit_scale, "Model unit scale");
  eval->add_option("--mspd-scale", eval_cfg.mspd_scale, "MSPD pixel-threshold scale");
  eval->add_option("--vsd-delta", eval_cfg.vsd_delta, "VSD visibility tolerance, m");
  eval->add_option("--out", eval_cfg.out_dir, "Output directory");
  eval_binder.bind("mspd_scale", &eval_cfg.mspd_scale);
  eval_binder.bind("vsd_delta", &eval_cfg.vsd_delta);
  eval_binder.bind("unit_scale", &eval_cfg.unit_scale);
  eval_binder.bind("out", &eval_cfg.out_dir);

  // --- gradcheck ---------------------------------------------------------------
  CLI::App* grad = app.add_subcommand("gradcheck", "Solver reverse-mode derivative check");
  grad->add_option("--config", config_path, "JSON config file (flags override)");
  grad->add_option("--seed", grad_cfg.seed, "Root seed");
  grad->add_option("--problems", grad_cfg.problems, "Problem count")
      ->check(CLI::PositiveNumber);
  grad->add_option("--pixels", grad_cfg.pixels, "Approx. pixels per problem")
      ->check(CLI::PositiveNumber);
  grad->add_option("--gn-iters", grad_cfg.gn_iters, "GN iterations")
      ->check(CLI::PositiveNumber);
  grad->add_option("--tolerance", grad_cfg.tolerance, "Max relative error");
  grad->add_option("--out", grad_cfg.out_dir, "Output directory");
  grad_binder.bind("seed", &grad_cfg.seed);
  grad_binder.bind("problems", &grad_cfg.problems);
  grad_binder.bind("pixels", &grad_cfg.pixels);
  grad_binder.bind("gn_iters", &grad_cfg.gn_iters);
  grad_binder.bind("tolerance", &grad_cfg.tolerance);
  grad_binder.bind("out", &grad_cfg.out_dir);

  // --- bench -------------------------------------------------------------------
  CLI::App* bench = app.add_subcommand("bench", "Accuracy vs runtime across loop grids");
  bench->add_option("--config", config_path, "JSON config file (flags override)");
  add_source_flags(bench, &bench_cfg.source, &bench_binder);
  bench->add_option("--seed", bench_cfg.seed, "Root seed");
  bench->add_option("--out", bench_cfg.out_dir, "Output directory");
  bench->add_option("--inner-grid", bench_cfg.inner_grid, "Inner iteration grid")->delimiter(',');
  bench->add_option("--outer-grid", bench_cfg.outer_grid, "Outer loop grid")->delimiter(',');
  bench->add_option("--scenes", bench_cfg.scenes, "Scenes per configuration")
      ->check(CLI::PositiveNumber);
  bench->add_option("--gn-iters", bench_cfg.gn_iters, "GN iterations per inner step");
  bench->add_option("--noise", bench_cfg.noise_px, "Oracle noise sigma, px");
  bench->add_option("--outliers", bench_cfg.outlier_rate, "Oracle outlier fraction");
  bench->add_option("--jobs", bench_cfg.jobs, "Worker threads");
  bench_binder.bind("seed", &bench_cfg.seed);
  bench_binder.bind("out", &bench_cfg.out_dir);
  bench_binder.bind("inner_grid", &bench_cfg.inner_grid);
  bench_binder.bind("outer_grid", &bench_cfg.outer_grid);
  bench_binder.bind("scenes", &bench_cfg.scenes);
  bench_binder.bind("gn_iters", &bench_cfg.gn_iters);
  bench_binder.bind("noise", &bench_cfg.noise_px);
  bench_binder.bind("outliers", &bench_cfg.outlier_rate);
  bench_binder.bind("jobs", &bench_cfg.jobs);

  // Pre-scan for --config so its values act as defaults under the final parse.
  for (int i = 1; i + 1 < argc; ++i) {
    if (std::string(argv[i]) == "--config") {
      config_path = argv[i + 1];
      break;
    }
  }

  try {
    if (!config_path.empty()) {
      // The subcommand name is argv[1] when present.
      const std::string sub = argc > 1 ? argv[1] : "";
      if (sub == "solve") solve_binder.apply(config_path);
      else if (sub == "refine") refine_binder.apply(config_path);
      else if (sub == "eval") eval_binder.apply(config_path);
      else if (sub == "gradcheck") grad_binder.apply(config_path);
      else if (sub == "bench") bench_binder.apply(config_path);
    }
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInputError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInputError;
  }

  try {
    if (solve->parsed()) return cmd_solve(solve_cfg);
    if (refine->parsed()) return cmd_refine(refine_cfg);
    if (eval->parsed()) return cmd_eval(eval_cfg);
    if (grad->parsed()) return cmd_gradcheck(grad_cfg);
    if (bench->parsed()) return cmd_bench(bench_cfg);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInputError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInputError;
  }
  return kExitInputError;
}

}  // namespace poseref::cli
