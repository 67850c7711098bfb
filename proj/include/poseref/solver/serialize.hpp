#pragma once

#include <json.hpp>

#include "poseref/solver/bdpnp.hpp"

namespace poseref {

// JSON serialization for solver inputs and outputs. Poses are row-major 4x4
// arrays; fields are flat row-major arrays with explicit masks.

nlohmann::json to_json(const RigidTransform& G);
RigidTransform pose_from_json(const nlohmann::json& j);

nlohmann::json to_json(const BdpnpOptions& opts);
BdpnpOptions options_from_json(const nlohmann::json& j);

nlohmann::json to_json(const BdpnpProblem& problem);
BdpnpProblem problem_from_json(const nlohmann::json& j);

nlohmann::json to_json(const SolveTrace& trace);

void save_problem_json(const BdpnpProblem& problem, const std::string& path);
BdpnpProblem load_problem_json(const std::string& path);

}  // namespace poseref
