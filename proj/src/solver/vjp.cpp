#include "poseref/solver/vjp.hpp"

#include <Eigen/Cholesky>
#include <stdexcept>

#include "assembly.hpp"

namespace poseref {

namespace {

// d(projection_point_jacobian)/d p_m.
Eigen::Matrix3d d_projection_jacobian(const Eigen::Vector3d& p, int m) {
  const double z = p.z();
  const double inv_z2 = 1.0 / (z * z);
  const double inv_z3 = inv_z2 / z;
  Eigen::Matrix3d d = Eigen::Matrix3d::Zero();
  if (m == 0) {
    d(0, 2) = -inv_z2;
  } else if (m == 1) {
    d(1, 2) = -inv_z2;
  } else {
    d(0, 0) = -inv_z2;
    d(1, 1) = -inv_z2;
    d(0, 2) = 2.0 * p.x() * inv_z3;
    d(1, 2) = 2.0 * p.y() * inv_z3;
    d(2, 2) = 2.0 * inv_z3;
  }
  return d;
}

inline double frobenius_dot(const Matrix36d& a, const Matrix36d& b) {
  return (a.array() * b.array()).sum();
}

}  // namespace

BdpnpGradients solver_vjp(const BdpnpProblem& problem, const SolveTrace& trace,
                          const Vector6d& upstream) {
  if (trace.iterations.empty())
    throw std::invalid_argument("solver_vjp: missing trace (run solve with record_trace)");
  if (trace.adaptive)
    throw std::invalid_argument("solver_vjp: adaptive damping traces are not differentiable");
  if (trace.rank_deficient)
    throw std::invalid_argument("solver_vjp: trace contains a rank-deficient iteration");

  BdpnpGradients grads;
  grads.views.resize(problem.views.size());
  for (size_t vi = 0; vi < problem.views.size(); ++vi) {
    const BdpnpView& view = problem.views[vi];
    auto& g = grads.views[vi];
    g.revision_to_image = Grid<Eigen::Vector3d>(view.render_points.height(),
                                                view.render_points.width(),
                                                Eigen::Vector3d::Zero());
    g.weight_to_image = g.revision_to_image;
    g.revision_to_render = Grid<Eigen::Vector3d>(problem.image_points.height(),
                                                 problem.image_points.width(),
                                                 Eigen::Vector3d::Zero());
    g.weight_to_render = g.revision_to_render;
  }

  Vector6d pose_bar = upstream;

  for (int t = static_cast<int>(trace.iterations.size()) - 1; t >= 0; --t) {
    const IterationRecord& rec = trace.iterations[t];
    const RigidTransform& G = rec.pose_before;
    const double lambda = rec.damping;

    std::vector<detail::RowData> rows;
    detail::visit_rows(problem, G, /*include_zero_weight=*/true,
                       [&](const detail::RowData& row) { rows.push_back(row); });

    Matrix6d H = Matrix6d::Zero();
    Vector6d b = Vector6d::Zero();
    for (const auto& row : rows) {
      for (int c = 0; c < 3; ++c) {
        if (row.w[c] <= 0.0) continue;
        const Vector6d a = row.J.row(c).transpose();
        H.noalias() += row.w[c] * (a * a.transpose());
        b.noalias() += (row.w[c] * row.e[c]) * a;
      }
    }
    Matrix6d A = H;
    A.diagonal() += lambda * H.diagonal();

    // Retraction chain: G_{t+1} = exp(dxi) * G_t.
    const Vector6d dxi = rec.step.vec();
    const Vector6d u = se3_left_jacobian(rec.step).transpose() * pose_bar;
    Vector6d pose_bar_next = adjoint(se3_exp(rec.step)).transpose() * pose_bar;

    // Adjoint of the damped linear solve A * dxi = -b.
    const Vector6d y = A.ldlt().solve(u);
    const Vector6d b_bar = -y;
    Matrix6d A_bar = -y * dxi.transpose();
    Matrix6d H_bar = A_bar;
    H_bar.diagonal() += lambda * A_bar.diagonal();

    for (const auto& row : rows) {
      Eigen::Vector3d e_bar = Eigen::Vector3d::Zero();
      Eigen::Vector3d w_bar = Eigen::Vector3d::Zero();
      Matrix36d J_bar = Matrix36d::Zero();

      for (int c = 0; c < 3; ++c) {
        const Vector6d a = row.J.row(c).transpose();
        const double a_dot_bbar = a.dot(b_bar);
        // b = sum w_c e_c a_c
        e_bar[c] += row.w[c] * a_dot_bbar;
        w_bar[c] += row.e[c] * a_dot_bbar;
        J_bar.row(c) += (row.w[c] * row.e[c]) * b_bar.transpose();
        // H = sum w_c a_c a_c^T
        w_bar[c] += a.dot(H_bar * a);
        J_bar.row(c) += row.w[c] * ((H_bar + H_bar.transpose()) * a).transpose();
      }

      // Residual: e = proj(...) - target, target = x + r.
      auto& g = grads.views[row.view];
      const int r_idx = row.pixel;
      Eigen::Vector3d& rev_grad = row.forward ? g.revision_to_image[r_idx]
                                              : g.revision_to_render[r_idx];
      rev_grad -= e_bar;

      // Weight gradient, mapped through the clamp and the depth-augmentation mask.
      const ConfidenceField& wf = row.forward ? problem.views[row.view].weight_to_image
                                              : problem.views[row.view].weight_to_render;
      const Eigen::Vector3d w_raw = wf.w[r_idx];
      Eigen::Vector3d& w_grad = row.forward ? g.weight_to_image[r_idx]
                                            : g.weight_to_render[r_idx];
      for (int c = 0; c < 3; ++c) {
        if (!problem.options.depth_augmented && c == 2) continue;
        if (w_raw[c] < 0.0 || w_raw[c] > problem.options.weight_max) continue;
        w_grad[c] += w_bar[c];
      }

      // Pose paths: d e / d eta = J, plus the dependence of J on the
      // linearization pose.
      pose_bar_next.noalias() += row.J.transpose() * e_bar;

      const Eigen::Matrix3d Jp = projection_point_jacobian(row.p);
      if (row.forward) {
        const Matrix36d B = point_twist_jacobian(row.p);
        Eigen::Vector3d g_p;
        for (int m = 0; m < 3; ++m) {
          Matrix36d dJ = d_projection_jacobian(row.p, m) * B;
          Matrix36d dB = Matrix36d::Zero();
          dB.block<3, 3>(0, 3) = -skew(Eigen::Vector3d::Unit(m));
          dJ += Jp * dB;
          g_p[m] = frobenius_dot(J_bar, dJ);
        }
        pose_bar_next.noalias() += B.transpose() * g_p;
      } else {
        const Matrix36d Q = point_twist_jacobian(row.q);
        const Matrix36d RQ = row.R_rel * Q;
        Eigen::Vector3d g_p;
        for (int m = 0; m < 3; ++m)
          g_p[m] = frobenius_dot(J_bar, -(d_projection_jacobian(row.p, m) * RQ));
        pose_bar_next.noalias() += (-RQ).transpose() * g_p;
        const Eigen::Matrix3d JpR = Jp * row.R_rel;
        for (int a = 0; a < 3; ++a)
          pose_bar_next[3 + a] +=
              frobenius_dot(J_bar, JpR * skew(Eigen::Vector3d::Unit(a)) * Q);
      }
    }

    pose_bar = pose_bar_next;
  }

  return grads;
}

}  // namespace poseref
