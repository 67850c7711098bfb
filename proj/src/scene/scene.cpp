#include "poseref/scene/scene.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <stdexcept>

#include <json.hpp>

namespace poseref {

uint64_t Rng::next_u64() {
  // splitmix64
  state_ += 0x9e3779b97f4a7c15ULL;
  uint64_t z = state_;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double Rng::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double Rng::gaussian() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  const double mag = std::sqrt(-2.0 * std::log(u1));
  spare_ = mag * std::sin(2.0 * M_PI * u2);
  has_spare_ = true;
  return mag * std::cos(2.0 * M_PI * u2);
}

Eigen::Vector3d Rng::gaussian3(double sigma) {
  return {sigma * gaussian(), sigma * gaussian(), sigma * gaussian()};
}

Eigen::Vector3d Rng::unit_vector() {
  while (true) {
    const Eigen::Vector3d v = gaussian3(1.0);
    const double n = v.norm();
    if (n > 1e-12) return v / n;
  }
}

Scene make_scene(const ObjectModel& model, const RigidTransform& gt_pose,
                 const Intrinsics& K, const RenderOptions& opts) {
  Scene scene;
  scene.model = model;
  scene.gt_pose = gt_pose;
  scene.camera = K;
  scene.sensor_depth = render_depth(model, gt_pose, K, opts);
  scene.empty_render = scene.sensor_depth.valid_count() == 0;
  return scene;
}

Twist sample_perturbation(double sigma_rot_deg, double sigma_trans_m, Rng& rng) {
  Twist xi;
  xi.v = rng.gaussian3(sigma_trans_m);
  if (sigma_rot_deg > 0.0) {
    const double angle = std::abs(rng.gaussian()) * sigma_rot_deg * M_PI / 180.0;
    xi.omega = angle * rng.unit_vector();
  }
  return xi;
}

RigidTransform perturb_pose_exact(const RigidTransform& G, double rot_deg,
                                  double trans_m, Rng& rng) {
  const double angle = rot_deg * M_PI / 180.0;
  RigidTransform out;
  out.rotation = so3_exp(angle * rng.unit_vector()) * G.rotation;
  out.translation = G.translation + trans_m * rng.unit_vector();
  return out;
}

// --- bundle IO ---------------------------------------------------------------

void save_intrinsics_json(const Intrinsics& K, const std::string& path) {
  nlohmann::json j{{"schema", "poseref/camera/1"}, {"fx", K.fx}, {"fy", K.fy},
                   {"cx", K.cx}, {"cy", K.cy}, {"width", K.width}, {"height", K.height}};
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_intrinsics_json: cannot open " + path);
  out << j.dump(2) << "\n";
}

Intrinsics load_intrinsics_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_intrinsics_json: cannot open " + path);
  nlohmann::json j;
  in >> j;
  Intrinsics K;
  K.fx = j.at("fx").get<double>();
  K.fy = j.at("fy").get<double>();
  K.cx = j.at("cx").get<double>();
  K.cy = j.at("cy").get<double>();
  K.width = j.at("width").get<int>();
  K.height = j.at("height").get<int>();
  if (!K.valid()) throw std::runtime_error("load_intrinsics_json: invalid camera in " + path);
  return K;
}

void save_poses_json(const std::vector<RigidTransform>& poses, const std::string& path) {
  nlohmann::json list = nlohmann::json::array();
  for (const auto& G : poses) {
    const Eigen::Matrix4d T = G.matrix();
    nlohmann::json m = nlohmann::json::array();
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 4; ++c) m.push_back(T(r, c));
    list.push_back(m);
  }
  nlohmann::json j{{"schema", "poseref/poses/1"}, {"poses", list}};
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_poses_json: cannot open " + path);
  out << j.dump(2) << "\n";
}

std::vector<RigidTransform> load_poses_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_poses_json: cannot open " + path);
  nlohmann::json j;
  in >> j;
  const auto& list = j.contains("poses") ? j.at("poses") : j;
  std::vector<RigidTransform> out;
  for (const auto& item : list) {
    if (item.size() != 16)
      throw std::runtime_error("load_poses_json: expected 16 entries per pose");
    Eigen::Matrix4d T;
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 4; ++c) T(r, c) = item.at(r * 4 + c).get<double>();
    out.push_back(RigidTransform::from_matrix(T));
  }
  return out;
}

void save_depth_f32(const DepthMap& depth, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_depth_f32: cannot open " + path);
  for (double v : depth.z) {
    const float f = static_cast<float>(v);
    out.write(reinterpret_cast<const char*>(&f), sizeof(f));
  }
}

DepthMap load_depth_f32(const std::string& path, int height, int width) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_depth_f32: cannot open " + path);
  DepthMap depth(height, width);
  for (size_t i = 0; i < depth.z.size(); ++i) {
    float f;
    in.read(reinterpret_cast<char*>(&f), sizeof(f));
    if (!in) throw std::runtime_error("load_depth_f32: truncated file " + path);
    depth.z[i] = f;
  }
  return depth;
}

void save_scene(const Scene& scene, const std::string& dir) {
  std::filesystem::create_directories(dir);
  const std::filesystem::path base(dir);
  save_model_ply(scene.model, (base / "model.ply").string());
  save_symmetries(scene.model.symmetries, (base / "symmetries.json").string());
  save_intrinsics_json(scene.camera, (base / "camera.json").string());
  save_poses_json({scene.gt_pose}, (base / "gt_poses.json").string());
  save_depth_f32(scene.sensor_depth, (base / "depth.f32").string());
}

Scene load_scene(const std::string& dir) {
  const std::filesystem::path base(dir);
  Scene scene;
  LoadModelOptions opts;
  opts.symmetries_path = (base / "symmetries.json").string();
  if (!std::filesystem::exists(opts.symmetries_path)) opts.symmetries_path.clear();
  scene.model = load_model((base / "model.ply").string(), opts);
  scene.camera = load_intrinsics_json((base / "camera.json").string());
  const auto poses = load_poses_json((base / "gt_poses.json").string());
  if (poses.empty()) throw std::runtime_error("load_scene: gt_poses.json is empty");
  scene.gt_pose = poses.front();
  scene.sensor_depth =
      load_depth_f32((base / "depth.f32").string(), scene.camera.height, scene.camera.width);
  scene.empty_render = scene.sensor_depth.valid_count() == 0;
  return scene;
}

// --- procedural test meshes --------------------------------------------------

ObjectModel make_test_model(uint64_t seed, int complexity, double radius) {
  // Icosahedron, subdivided, with a seeded radial bump per vertex. The bumps
  // break all rotational symmetry so pose recovery is well-posed.
  const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Eigen::Vector3d> verts = {
      {-1, phi, 0}, {1, phi, 0}, {-1, -phi, 0}, {1, -phi, 0},
      {0, -1, phi}, {0, 1, phi}, {0, -1, -phi}, {0, 1, -phi},
      {phi, 0, -1}, {phi, 0, 1}, {-phi, 0, -1}, {-phi, 0, 1}};
  for (auto& v : verts) v.normalize();
  std::vector<std::array<int, 3>> faces = {
      {0, 11, 5}, {0, 5, 1}, {0, 1, 7}, {0, 7, 10}, {0, 10, 11},
      {1, 5, 9}, {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
      {3, 9, 4}, {3, 4, 2}, {3, 2, 6}, {3, 6, 8}, {3, 8, 9},
      {4, 9, 5}, {2, 4, 11}, {6, 2, 10}, {8, 6, 7}, {9, 8, 1}};

  for (int level = 0; level < complexity; ++level) {
    std::map<std::pair<int, int>, int> midpoint;
    auto mid = [&](int a, int b) {
      const auto key = std::minmax(a, b);
      auto it = midpoint.find(key);
      if (it != midpoint.end()) return it->second;
      const int idx = static_cast<int>(verts.size());
      verts.push_back(((verts[a] + verts[b]) * 0.5).normalized());
      midpoint[key] = idx;
      return idx;
    };
    std::vector<std::array<int, 3>> next;
    next.reserve(faces.size() * 4);
    for (const auto& f : faces) {
      const int ab = mid(f[0], f[1]);
      const int bc = mid(f[1], f[2]);
      const int ca = mid(f[2], f[0]);
      next.push_back({f[0], ab, ca});
      next.push_back({f[1], bc, ab});
      next.push_back({f[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    faces = std::move(next);
  }

  Rng rng(seed);
  ObjectModel model;
  model.vertices.reserve(verts.size());
  for (const auto& v : verts) {
    const double bump = 1.0 + 0.25 * (rng.uniform() - 0.5);
    model.vertices.push_back(radius * bump * v);
  }
  model.triangles = faces;
  model.update_diameter();
  return model;
}

}  // namespace poseref
