#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oracles.hpp"
#include "poseref/solver/vjp.hpp"
#include "test_scenes.hpp"

using namespace poseref;

namespace {

// Small dense problem on a coarse grid so finite differences stay cheap.
struct VjpCase {
  BdpnpProblem problem;
  Vector6d upstream;
};

VjpCase make_case(uint64_t seed, int gn_iterations, int n_views = 2) {
  Rng rng(seed);
  const Intrinsics K = testbed::crop_camera(24, 18, 30.0);
  const testbed::Setup s = testbed::make_setup(seed, K, 4, 1);

  OracleOptions oracle;
  oracle.noise_sigma_px = 0.4;
  oracle.seed = seed * 3 + 1;
  BdpnpOptions opts;
  opts.iterations = gn_iterations;

  const RigidTransform init = perturb_pose_exact(s.scene.gt_pose, 4.0, 0.01, rng);
  VjpCase out{testbed::build_problem(s, init, n_views, oracle, opts, rng), Vector6d::Zero()};

  // interior weights keep the clamp inactive under the FD perturbation
  for (auto& view : out.problem.views) {
    for (auto& w : view.weight_to_image.w)
      w = Eigen::Vector3d(rng.uniform(0.2, 0.8), rng.uniform(0.2, 0.8), rng.uniform(0.2, 0.8));
    for (auto& w : view.weight_to_render.w)
      w = Eigen::Vector3d(rng.uniform(0.2, 0.8), rng.uniform(0.2, 0.8), rng.uniform(0.2, 0.8));
  }
  for (int i = 0; i < 6; ++i) out.upstream[i] = rng.uniform(-1, 1);
  return out;
}

// Loss used by the finite-difference oracle: L(G) = <u, log(G * G_base^-1)>.
// Its left-trivialized gradient at G_base is exactly u.
double fd_loss(const BdpnpProblem& p, const Vector6d& u, const RigidTransform& base) {
  const SolveResult result = solve(p);
  return u.dot(se3_log(result.pose * base.inverse()).vec());
}

struct FdStats {
  double max_rel_err = 0.0;
  int compared = 0;
};

// Compares analytic revision/weight gradients against central differences on
// every pixel whose gradient is not negligibly small.
FdStats check_case(const VjpCase& vc, double h, double rel_tol) {
  const SolveResult base = solve(vc.problem);
  REQUIRE_FALSE(base.trace.rank_deficient);
  const BdpnpGradients grads = solver_vjp(vc.problem, base.trace, vc.upstream);

  FdStats stats;
  double gmax = 0.0;
  for (const auto& vg : grads.views)
    for (const auto& grid : {&vg.revision_to_image, &vg.weight_to_image,
                             &vg.revision_to_render, &vg.weight_to_render})
      for (const auto& v : *grid) gmax = std::max(gmax, v.cwiseAbs().maxCoeff());
  REQUIRE(gmax > 0.0);
  const double floor = gmax * 1e-3;  // skip near-zero entries (relative error unstable)

  auto fd_entry = [&](BdpnpProblem work, bool weight, int view, bool fwd, int pixel,
                      int channel) {
    auto& grid = weight ? (fwd ? work.views[view].weight_to_image.w
                               : work.views[view].weight_to_render.w)
                        : (fwd ? work.views[view].target_to_image.points
                               : work.views[view].target_to_render.points);
    grid[pixel][channel] += h;
    const double up = fd_loss(work, vc.upstream, base.pose);
    grid[pixel][channel] -= 2 * h;
    const double down = fd_loss(work, vc.upstream, base.pose);
    return (up - down) / (2 * h);
  };

  oracle::Lcg pick(99);
  for (size_t view = 0; view < grads.views.size(); ++view) {
    const auto& vg = grads.views[view];
    auto run = [&](const Grid<Eigen::Vector3d>& g, bool weight, bool fwd) {
      for (size_t pix = 0; pix < g.size(); ++pix) {
        for (int ch = 0; ch < 3; ++ch) {
          const double analytic = g[pix][ch];
          if (std::abs(analytic) < floor) continue;
          if (pick.uniform() > 0.9) continue;  // light subsample
          const double numeric =
              fd_entry(vc.problem, weight, static_cast<int>(view), fwd,
                       static_cast<int>(pix), ch);
          const double rel = std::abs(analytic - numeric) /
                             std::max(std::abs(numeric), std::abs(analytic));
          stats.max_rel_err = std::max(stats.max_rel_err, rel);
          ++stats.compared;
        }
      }
    };
    run(vg.revision_to_image, false, true);
    run(vg.weight_to_image, true, true);
    run(vg.revision_to_render, false, false);
    run(vg.weight_to_render, true, false);
  }
  CHECK(stats.compared > 20);
  CHECK(stats.max_rel_err < rel_tol);
  return stats;
}

}  // namespace

TEST_CASE("zero upstream gradient yields zero field gradients") {
  VjpCase vc = make_case(11, 2);
  const SolveResult base = solve(vc.problem);
  const BdpnpGradients grads = solver_vjp(vc.problem, base.trace, Vector6d::Zero());
  for (const auto& vg : grads.views)
    for (const auto& grid : {&vg.revision_to_image, &vg.weight_to_image,
                             &vg.revision_to_render, &vg.weight_to_render})
      for (const auto& v : *grid) CHECK(v.norm() == 0.0);
}

TEST_CASE("zero-weight pixels have zero revision gradient") {
  VjpCase vc = make_case(13, 2);
  // zero out a handful of weights
  auto& w = vc.problem.views[0].weight_to_image.w;
  std::vector<int> zeroed;
  for (size_t i = 0; i < w.size() && zeroed.size() < 5; i += 7) {
    w[i].setZero();
    zeroed.push_back(static_cast<int>(i));
  }
  const SolveResult base = solve(vc.problem);
  const BdpnpGradients grads = solver_vjp(vc.problem, base.trace, vc.upstream);
  for (int pix : zeroed)
    CHECK(grads.views[0].revision_to_image[pix].norm() == 0.0);
}

TEST_CASE("missing trace is rejected") {
  VjpCase vc = make_case(17, 1);
  SolveTrace empty;
  CHECK_THROWS_AS(solver_vjp(vc.problem, empty, vc.upstream), std::invalid_argument);
}

TEST_CASE("vjp matches central finite differences, 1 GN iteration") {
  const FdStats s1 = check_case(make_case(21, 1), 1e-5, 1e-4);
  const FdStats s2 = check_case(make_case(22, 1, 1), 1e-5, 1e-4);
  INFO("compared ", s1.compared + s2.compared, " entries");
}

TEST_CASE("vjp matches central finite differences, 3 GN iterations") {
  const FdStats s = check_case(make_case(31, 3), 1e-5, 1e-3);
  INFO("max rel err ", s.max_rel_err);
}

TEST_CASE("vjp matches finite differences in unidirectional and no-depth modes") {
  VjpCase fwd_only = make_case(41, 2);
  fwd_only.problem.options.direction = DirectionMode::kRenderToImage;
  check_case(fwd_only, 1e-5, 1e-3);

  VjpCase no_depth = make_case(43, 2);
  no_depth.problem.options.depth_augmented = false;
  check_case(no_depth, 1e-5, 1e-3);
}
