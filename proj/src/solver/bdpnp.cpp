#include "poseref/solver/bdpnp.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <stdexcept>
#include <unordered_map>

#include "assembly.hpp"

namespace poseref {

CorrespondenceField apply_revisions(const CorrespondenceField& x, const RevisionField& rev) {
  if (x.height() != rev.r.height() || x.width() != rev.r.width())
    throw std::invalid_argument("apply_revisions: shape mismatch");
  CorrespondenceField out = x;
  for (int r = 0; r < x.height(); ++r) {
    for (int c = 0; c < x.width(); ++c) {
      out.points.at(r, c) = x.points.at(r, c) + rev.r.at(r, c);
      out.mask.at(r, c) = x.mask.at(r, c) && rev.mask.at(r, c);
    }
  }
  return out;
}

long BdpnpProblem::validate() const {
  if (views.empty()) throw std::invalid_argument("BdpnpProblem: no views");
  long clamped = 0;
  auto count_clamped = [&](const ConfidenceField& field) {
    for (const auto& w : field.w)
      for (int c = 0; c < 3; ++c)
        if (w[c] < 0.0 || w[c] > options.weight_max) ++clamped;
  };
  for (const auto& v : views) {
    count_clamped(v.weight_to_image);
    count_clamped(v.weight_to_render);
  }

  long effective_rows = 0;
  detail::visit_rows(*this, initial_pose, /*include_zero_weight=*/false,
                     [&](const detail::RowData& row) {
                       for (int c = 0; c < 3; ++c)
                         if (row.w[c] > 0.0) ++effective_rows;
                     });
  if (effective_rows < 6)
    throw std::invalid_argument("BdpnpProblem: underdetermined (fewer than 6 effective rows)");
  return clamped;
}

double objective(const BdpnpProblem& problem, const RigidTransform& G0) {
  double E = 0.0;
  detail::visit_rows(problem, G0, /*include_zero_weight=*/false,
                     [&](const detail::RowData& row) {
                       E += row.w.dot(row.e.cwiseAbs2());
                     });
  return E;
}

namespace {

struct NormalEquations {
  Matrix6d H = Matrix6d::Zero();
  Vector6d b = Vector6d::Zero();
};

NormalEquations accumulate(const BdpnpProblem& problem, const RigidTransform& G0) {
  NormalEquations ne;
  detail::visit_rows(problem, G0, /*include_zero_weight=*/false,
                     [&](const detail::RowData& row) {
                       for (int c = 0; c < 3; ++c) {
                         if (row.w[c] <= 0.0) continue;
                         const Vector6d a = row.J.row(c).transpose();
                         ne.H.noalias() += row.w[c] * (a * a.transpose());
                         ne.b.noalias() += (row.w[c] * row.e[c]) * a;
                       }
                     });
  return ne;
}

// Damped solve with x10 escalation; returns false when still unusable.
bool solve_damped(const NormalEquations& ne, double lambda0, Twist* step,
                  double* lambda_used) {
  if (!(ne.H.diagonal().maxCoeff() > 0.0)) return false;
  double lambda = lambda0;
  for (int attempt = 0; attempt <= 3; ++attempt, lambda *= 10.0) {
    Matrix6d A = ne.H;
    A.diagonal() += lambda * ne.H.diagonal();
    const Vector6d dxi = A.ldlt().solve(-ne.b);
    if (!dxi.allFinite()) continue;
    const double rel = (A * dxi + ne.b).norm() / (ne.b.norm() + 1e-30);
    if (rel > 1e-6) continue;
    *step = Twist(dxi);
    *lambda_used = lambda;
    return true;
  }
  return false;
}

}  // namespace

StepResult gauss_newton_step(const BdpnpProblem& problem, const RigidTransform& G0,
                             double lambda) {
  const NormalEquations ne = accumulate(problem, G0);
  StepResult out;
  out.damping_used = lambda;
  if (!solve_damped(ne, lambda, &out.step, &out.damping_used)) {
    out.step = Twist();
    out.rank_deficient = true;
    out.pose = G0;
    return out;
  }
  out.pose = retract(G0, out.step);
  return out;
}

SolveResult solve(const BdpnpProblem& problem) { return solve(problem, problem.options.iterations); }

SolveResult solve(const BdpnpProblem& problem, int iterations) {
  if (iterations < 1) throw std::invalid_argument("solve: iterations < 1");
  problem.validate();

  const BdpnpOptions& opts = problem.options;
  SolveResult result;
  result.trace.adaptive = opts.adaptive_damping;
  RigidTransform G = problem.initial_pose;
  double lambda = opts.damping;

  for (int it = 0; it < iterations; ++it) {
    IterationRecord rec;
    rec.pose_before = G;
    rec.objective_before = objective(problem, G);

    StepResult step = gauss_newton_step(problem, G, lambda);
    if (opts.adaptive_damping && !step.rank_deficient) {
      double trial_lambda = step.damping_used;
      for (int retry = 0; retry < 8; ++retry) {
        if (objective(problem, step.pose) <= rec.objective_before + 1e-12) break;
        trial_lambda *= 10.0;
        step = gauss_newton_step(problem, G, trial_lambda);
        if (step.rank_deficient) break;
        if (retry == 7) {  // keep the pose; a zero step never raises E
          step.step = Twist();
          step.pose = G;
        }
      }
      lambda = std::max(opts.damping, step.damping_used / 10.0);
    }

    rec.step = step.step;
    rec.step_norm = step.step.norm();
    rec.damping = step.damping_used;
    rec.rank_deficient = step.rank_deficient;
    if (step.rank_deficient) result.trace.rank_deficient = true;
    G = step.pose;
    if (opts.record_trace) result.trace.iterations.push_back(rec);

    if (opts.early_exit_step_norm > 0.0 && rec.step_norm < opts.early_exit_step_norm) break;
  }

  result.pose = G;
  result.trace.final_pose = G;
  return result;
}

std::vector<LinearizedRow> linearize(const BdpnpProblem& problem, const RigidTransform& G0,
                                     bool include_zero_weight) {
  std::vector<LinearizedRow> rows;
  detail::visit_rows(problem, G0, include_zero_weight, [&](const detail::RowData& row) {
    LinearizedRow out;
    out.view = row.view;
    out.render_to_image = row.forward;
    out.pixel = row.pixel;
    out.residual = row.e;
    out.pose_jacobian = row.J;
    out.weight = row.w;
    out.depth_jacobian = row.forward ? Eigen::Vector3d::Zero() : detail::depth_column(row);
    rows.push_back(out);
  });
  return rows;
}

SolveResult solve_rgb(const BdpnpProblem& problem,
                      const std::function<DepthMap(const RigidTransform&)>& render_depth_fn,
                      const Intrinsics& K_grid, const RgbSolveOptions& rgb_opts) {
  if (rgb_opts.iterations < 1) throw std::invalid_argument("solve_rgb: iterations < 1");
  if (!render_depth_fn) throw std::invalid_argument("solve_rgb: missing depth renderer");

  BdpnpProblem work = problem;
  RigidTransform G = problem.initial_pose;
  SolveResult result;

  // Depth estimate for the image side; refreshed from the renderer unless the
  // ablation variant applies the solver's depth updates instead.
  DepthMap depth = render_depth_fn(G);
  work.image_points = lattice_field(depth, K_grid);

  const int npix = work.image_points.height() * work.image_points.width();
  std::vector<double> h_dd(npix), g_d(npix);
  std::vector<Vector6d> c_xd(npix);

  for (int it = 0; it < rgb_opts.iterations; ++it) {
    if (rgb_opts.discard_depth_update && it > 0) {
      depth = render_depth_fn(G);
      work.image_points = lattice_field(depth, K_grid);
    }
    work.initial_pose = G;

    IterationRecord rec;
    rec.pose_before = G;
    rec.objective_before = objective(work, G);

    Matrix6d H = Matrix6d::Zero();
    Vector6d b = Vector6d::Zero();
    std::fill(h_dd.begin(), h_dd.end(), 0.0);
    std::fill(g_d.begin(), g_d.end(), 0.0);
    std::fill(c_xd.begin(), c_xd.end(), Vector6d::Zero());

    detail::visit_rows(work, G, /*include_zero_weight=*/false,
                       [&](const detail::RowData& row) {
                         const Eigen::Vector3d jd =
                             row.forward ? Eigen::Vector3d::Zero() : detail::depth_column(row);
                         for (int c = 0; c < 3; ++c) {
                           if (row.w[c] <= 0.0) continue;
                           const Vector6d a = row.J.row(c).transpose();
                           H.noalias() += row.w[c] * (a * a.transpose());
                           b.noalias() += (row.w[c] * row.e[c]) * a;
                           if (!row.forward) {
                             h_dd[row.pixel] += row.w[c] * jd[c] * jd[c];
                             g_d[row.pixel] += row.w[c] * jd[c] * row.e[c];
                             c_xd[row.pixel] += (row.w[c] * jd[c]) * a;
                           }
                         }
                       });

    double lambda = work.options.damping;
    bool ok = false;
    Twist dxi;
    std::vector<double> a_dd(npix);
    for (int attempt = 0; attempt <= 3 && !ok; ++attempt, lambda *= 10.0) {
      Matrix6d S = H;
      S.diagonal() += lambda * H.diagonal();
      Vector6d rhs = -b;
      for (int k = 0; k < npix; ++k) {
        a_dd[k] = h_dd[k] * (1.0 + lambda);
        if (a_dd[k] <= 1e-300) continue;  // depth of this pixel stays fixed
        S.noalias() -= (c_xd[k] * c_xd[k].transpose()) / a_dd[k];
        rhs += c_xd[k] * (g_d[k] / a_dd[k]);
      }
      if (!(S.diagonal().maxCoeff() > 0.0)) break;
      const Vector6d sol = S.ldlt().solve(rhs);
      if (!sol.allFinite()) continue;
      if ((S * sol - rhs).norm() > 1e-6 * (rhs.norm() + 1e-30)) continue;
      dxi = Twist(sol);
      ok = true;
      rec.damping = lambda;
    }

    if (!ok) {
      rec.rank_deficient = true;
      result.trace.rank_deficient = true;
      rec.step = Twist();
    } else {
      rec.step = dxi;
      rec.step_norm = dxi.norm();
      if (!rgb_opts.discard_depth_update) {
        // Ablation: apply the per-pixel depth updates and keep this depth.
        for (int k = 0; k < npix; ++k) {
          if (a_dd[k] <= 1e-300) continue;
          const double dd = -(g_d[k] + c_xd[k].dot(dxi.vec())) / a_dd[k];
          const int r = k / work.image_points.width();
          const int c = k % work.image_points.width();
          if (!work.image_points.valid(r, c)) continue;
          Eigen::Vector3d& pt = work.image_points.points.at(r, c);
          pt.z() += dd;
          if (pt.z() <= kMinInverseDepth) work.image_points.mask.at(r, c) = 0;
        }
      }
      G = retract(G, dxi);
    }
    result.trace.iterations.push_back(rec);
  }

  result.pose = G;
  result.trace.final_pose = G;
  return result;
}

}  // namespace poseref
