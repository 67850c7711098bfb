#pragma once

// Internal helpers for the command-line layer. Not installed.

#include <atomic>
#include <filesystem>
#include <fstream>
#include <functional>
#include <json.hpp>
#include <thread>

#include "cli.hpp"
#include "poseref/refine/provider.hpp"

namespace poseref::cli {

/// Runs fn(0..n-1) on a bounded worker pool; jobs <= 1 executes serially.
/// Work items are independent; callers collect results by index.
inline void parallel_for(int n, int jobs, const std::function<void(int)>& fn) {
  if (jobs <= 0) jobs = static_cast<int>(std::thread::hardware_concurrency());
  if (jobs <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> workers;
  const int count = std::min(jobs, n);
  workers.reserve(count);
  for (int w = 0; w < count; ++w) {
    workers.emplace_back([&] {
      for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
    });
  }
  for (auto& t : workers) t.join();
}

inline void write_json_file(const nlohmann::json& j, const std::filesystem::path& path) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  out << j.dump(2) << "\n";
}

/// Pose errors against a known ground truth.
inline nlohmann::json error_json(const RigidTransform& pose, const RigidTransform& gt) {
  return nlohmann::json{
      {"rotation_error_rad", rotation_geodesic_distance(pose, gt)},
      {"translation_error_m", (pose.translation - gt.translation).norm()}};
}

OracleOptions make_oracle_options(double noise_px, double outlier_rate, double outlier_weight,
                                  uint64_t seed);

}  // namespace poseref::cli
