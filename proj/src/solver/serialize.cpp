#include "poseref/solver/serialize.hpp"

#include <fstream>
#include <stdexcept>

namespace poseref {

using nlohmann::json;

json to_json(const RigidTransform& G) {
  const Eigen::Matrix4d T = G.matrix();
  json out = json::array();
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) out.push_back(T(r, c));
  return out;
}

RigidTransform pose_from_json(const json& j) {
  if (j.size() != 16) throw std::runtime_error("pose_from_json: expected 16 entries");
  Eigen::Matrix4d T;
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) T(r, c) = j.at(r * 4 + c).get<double>();
  return RigidTransform::from_matrix(T);
}

json to_json(const BdpnpOptions& opts) {
  const char* dir = opts.direction == DirectionMode::kBidirectional ? "bidirectional"
                    : opts.direction == DirectionMode::kRenderToImage ? "render_to_image"
                                                                      : "image_to_render";
  return json{{"iterations", opts.iterations},
              {"damping", opts.damping},
              {"depth_augmented", opts.depth_augmented},
              {"direction", dir},
              {"adaptive_damping", opts.adaptive_damping},
              {"weight_max", opts.weight_max},
              {"early_exit_step_norm", opts.early_exit_step_norm}};
}

BdpnpOptions options_from_json(const json& j) {
  BdpnpOptions opts;
  opts.iterations = j.value("iterations", opts.iterations);
  opts.damping = j.value("damping", opts.damping);
  opts.depth_augmented = j.value("depth_augmented", opts.depth_augmented);
  opts.adaptive_damping = j.value("adaptive_damping", opts.adaptive_damping);
  opts.weight_max = j.value("weight_max", opts.weight_max);
  opts.early_exit_step_norm = j.value("early_exit_step_norm", opts.early_exit_step_norm);
  const std::string dir = j.value("direction", "bidirectional");
  if (dir == "bidirectional") opts.direction = DirectionMode::kBidirectional;
  else if (dir == "render_to_image") opts.direction = DirectionMode::kRenderToImage;
  else if (dir == "image_to_render") opts.direction = DirectionMode::kImageToRender;
  else throw std::runtime_error("options_from_json: unknown direction '" + dir + "'");
  return opts;
}

namespace {

json field_to_json(const CorrespondenceField& f) {
  json points = json::array();
  json mask = json::array();
  for (size_t i = 0; i < f.points.size(); ++i) {
    points.push_back(f.points[i].x());
    points.push_back(f.points[i].y());
    points.push_back(f.points[i].z());
    mask.push_back(static_cast<int>(f.mask[i]));
  }
  return json{{"height", f.height()}, {"width", f.width()}, {"points", points}, {"mask", mask}};
}

CorrespondenceField field_from_json(const json& j) {
  CorrespondenceField f(j.at("height").get<int>(), j.at("width").get<int>());
  const auto& points = j.at("points");
  const auto& mask = j.at("mask");
  if (points.size() != f.points.size() * 3 || mask.size() != f.mask.size())
    throw std::runtime_error("field_from_json: size mismatch");
  for (size_t i = 0; i < f.points.size(); ++i) {
    f.points[i] = Eigen::Vector3d(points.at(3 * i).get<double>(),
                                  points.at(3 * i + 1).get<double>(),
                                  points.at(3 * i + 2).get<double>());
    f.mask[i] = mask.at(i).get<int>() ? 1 : 0;
  }
  return f;
}

json weights_to_json(const ConfidenceField& f) {
  json w = json::array();
  for (const auto& v : f.w) {
    w.push_back(v.x());
    w.push_back(v.y());
    w.push_back(v.z());
  }
  return json{{"height", f.w.height()}, {"width", f.w.width()}, {"w", w}};
}

ConfidenceField weights_from_json(const json& j) {
  ConfidenceField f(j.at("height").get<int>(), j.at("width").get<int>());
  const auto& w = j.at("w");
  if (w.size() != f.w.size() * 3) throw std::runtime_error("weights_from_json: size mismatch");
  for (size_t i = 0; i < f.w.size(); ++i)
    f.w[i] = Eigen::Vector3d(w.at(3 * i).get<double>(), w.at(3 * i + 1).get<double>(),
                             w.at(3 * i + 2).get<double>());
  return f;
}

}  // namespace

json to_json(const BdpnpProblem& problem) {
  json views = json::array();
  for (const auto& v : problem.views) {
    views.push_back(json{{"render_pose", to_json(v.render_pose)},
                         {"render_points", field_to_json(v.render_points)},
                         {"target_to_image", field_to_json(v.target_to_image)},
                         {"weight_to_image", weights_to_json(v.weight_to_image)},
                         {"target_to_render", field_to_json(v.target_to_render)},
                         {"weight_to_render", weights_to_json(v.weight_to_render)}});
  }
  return json{{"schema", "poseref/problem/1"},
              {"initial_pose", to_json(problem.initial_pose)},
              {"image_points", field_to_json(problem.image_points)},
              {"options", to_json(problem.options)},
              {"views", views}};
}

BdpnpProblem problem_from_json(const json& j) {
  BdpnpProblem p;
  p.initial_pose = pose_from_json(j.at("initial_pose"));
  p.image_points = field_from_json(j.at("image_points"));
  if (j.contains("options")) p.options = options_from_json(j.at("options"));
  for (const auto& v : j.at("views")) {
    BdpnpView view;
    view.render_pose = pose_from_json(v.at("render_pose"));
    view.render_points = field_from_json(v.at("render_points"));
    view.target_to_image = field_from_json(v.at("target_to_image"));
    view.weight_to_image = weights_from_json(v.at("weight_to_image"));
    view.target_to_render = field_from_json(v.at("target_to_render"));
    view.weight_to_render = weights_from_json(v.at("weight_to_render"));
    p.views.push_back(std::move(view));
  }
  return p;
}

json to_json(const SolveTrace& trace) {
  json iters = json::array();
  for (const auto& it : trace.iterations) {
    iters.push_back(json{{"pose_before", to_json(it.pose_before)},
                         {"step", {it.step.v.x(), it.step.v.y(), it.step.v.z(),
                                   it.step.omega.x(), it.step.omega.y(), it.step.omega.z()}},
                         {"objective_before", it.objective_before},
                         {"step_norm", it.step_norm},
                         {"damping", it.damping},
                         {"rank_deficient", it.rank_deficient}});
  }
  return json{{"schema", "poseref/trace/1"},
              {"iterations", iters},
              {"final_pose", to_json(trace.final_pose)},
              {"rank_deficient", trace.rank_deficient},
              {"adaptive", trace.adaptive}};
}

void save_problem_json(const BdpnpProblem& problem, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_problem_json: cannot open " + path);
  out << to_json(problem).dump() << "\n";
}

BdpnpProblem load_problem_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_problem_json: cannot open " + path);
  json j;
  in >> j;
  return problem_from_json(j);
}

}  // namespace poseref
