#pragma once

#include "poseref/solver/bdpnp.hpp"

namespace poseref {

/// Gradients of a scalar loss with respect to the per-pixel revisions and
/// confidence weights of every view, in both directions. Revision gradients
/// equal target-field gradients since targets are x + r with x fixed.
struct BdpnpGradients {
  struct ViewGrads {
    Grid<Eigen::Vector3d> revision_to_image;
    Grid<Eigen::Vector3d> weight_to_image;
    Grid<Eigen::Vector3d> revision_to_render;
    Grid<Eigen::Vector3d> weight_to_render;
  };
  std::vector<ViewGrads> views;
};

/// Reverse-mode derivative of solve(): backpropagates `upstream` — the loss
/// gradient with respect to a left increment on the final pose, i.e.
/// d L(exp(eta) * G_final) / d eta at eta = 0 — through every recorded
/// Gauss-Newton iteration, including the retraction Jacobian and the
/// dependence of the residual Jacobians on the linearization pose.
///
/// Requires a trace from a plain (non-adaptive) solve with no rank-deficient
/// iterations; throws std::invalid_argument otherwise.
BdpnpGradients solver_vjp(const BdpnpProblem& problem, const SolveTrace& trace,
                          const Vector6d& upstream);

}  // namespace poseref
