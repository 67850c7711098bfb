#pragma once

#include <Eigen/Core>
#include <array>
#include <string>
#include <vector>

#include "poseref/geometry/se3.hpp"

namespace poseref {

/// Vertex set in meters with optional triangles and a discretized symmetry
/// set (identity always included).
struct ObjectModel {
  std::vector<Eigen::Vector3d> vertices;
  std::vector<std::array<int, 3>> triangles;
  std::vector<RigidTransform> symmetries{RigidTransform::identity()};
  double diameter = 0.0;  // max pairwise vertex distance

  bool has_triangles() const { return !triangles.empty(); }

  /// Brute-force max pairwise distance.
  void update_diameter();
};

struct LoadModelOptions {
  double unit_scale = 1.0;       // e.g. 1e-3 for millimeter meshes
  std::string symmetries_path;   // optional sidecar JSON with 4x4 row-major matrices
};

/// Reads an ASCII or binary little-endian PLY with float/double vertex
/// positions and optional triangular faces. Parse failures throw
/// std::runtime_error naming the byte offset.
ObjectModel load_model(const std::string& path, const LoadModelOptions& opts = {});

/// Writes vertices (+faces) as binary little-endian PLY, float64 positions.
void save_model_ply(const ObjectModel& model, const std::string& path);

/// Symmetry sidecar JSON: {"schema": ..., "symmetries": [16 numbers each, row-major]}.
std::vector<RigidTransform> load_symmetries(const std::string& path);
void save_symmetries(const std::vector<RigidTransform>& symmetries, const std::string& path);

}  // namespace poseref
