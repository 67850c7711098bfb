#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "poseref/refine/refine.hpp"
#include "poseref/scene/scene.hpp"

namespace poseref::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInputError = 1;
inline constexpr int kExitNumericalFailure = 2;

/// Options shared by the compute subcommands. Scenes come from a bundle
/// directory, a PLY model, or (default) a procedural test mesh.
struct SceneSource {
  std::string scene_dir;
  std::string model_path;
  std::string symmetries_path;
  double unit_scale = 1.0;
  int width = 320;
  int height = 240;
  double focal = 280.0;
};

/// Builds the scene for object `index` under root seed `seed` (the per-object
/// seed is seed + index).
Scene bootstrap_scene(const SceneSource& src, uint64_t seed, int index);

struct SolveConfig {
  SceneSource source;
  uint64_t seed = 1;
  std::string out_dir = "out";
  int gn_iters = 10;
  int views = 7;
  std::string mode = "rgbd";  // rgbd | rgb
  std::string direction = "bidirectional";
  bool depth_augmented = true;
  double init_rot_deg = 15.0;
  double init_trans_m = 0.05;
  double noise_px = 0.0;
  double outlier_rate = 0.0;
  double outlier_weight = 0.0;
  bool write_trace = false;
};

struct RefineConfig {
  SceneSource source;
  uint64_t seed = 1;
  std::string out_dir = "out";
  int inner = 40;
  int outer = 1;
  int gn_iters = 10;
  int views = 0;  // 0 = per-mode default
  std::string mode = "rgbd";
  double init_rot_deg = 15.0;
  double init_trans_m = 0.05;
  double noise_px = 0.0;
  double outlier_rate = 0.0;
  double outlier_weight = 0.0;
  std::vector<double> sweep_rot_deg;  // non-empty switches to sweep mode
  int scenes = 1;                     // objects per configuration in sweep mode
  int jobs = 0;                       // worker threads; 0 = hardware
  bool write_trace = true;
};

struct EvalConfig {
  std::string pred_path;
  std::string gt_path;
  std::string model_path;
  std::string symmetries_path;
  std::string camera_path;
  double unit_scale = 1.0;
  double mspd_scale = 1.0;   // pixel-threshold scaling (1 at 640x480)
  double vsd_delta = 0.015;  // visibility tolerance, meters
  std::string out_dir = "out";
};

struct GradcheckConfig {
  uint64_t seed = 1;
  int problems = 20;
  int pixels = 5;  // approximate pixel count per problem
  int gn_iters = 1;
  double tolerance = 1e-3;
  std::string out_dir = "out";
};

struct BenchConfig {
  SceneSource source;
  uint64_t seed = 1;
  std::string out_dir = "out";
  std::vector<int> inner_grid{10, 40};
  std::vector<int> outer_grid{1, 2};
  int scenes = 5;
  int gn_iters = 3;
  double init_rot_deg = 15.0;
  double init_trans_m = 0.05;
  double noise_px = 0.0;
  double outlier_rate = 0.0;
  int jobs = 0;
};

int cmd_solve(const SolveConfig& cfg);
int cmd_refine(const RefineConfig& cfg);
int cmd_eval(const EvalConfig& cfg);
int cmd_gradcheck(const GradcheckConfig& cfg);
int cmd_bench(const BenchConfig& cfg);

/// Full argv-level entry point (CLI11 parsing, config file merge, dispatch).
int run_cli(int argc, const char* const* argv);

}  // namespace poseref::cli
