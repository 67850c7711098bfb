#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "poseref/geometry/camera.hpp"
#include "poseref/geometry/fields.hpp"
#include "poseref/geometry/se3.hpp"
#include "poseref/scene/scene.hpp"

using namespace poseref;

namespace {

Twist random_twist(Rng& rng, double max_angle = M_PI - 1e-3, double trans_scale = 1.0) {
  Twist xi;
  xi.v = rng.gaussian3(trans_scale);
  xi.omega = rng.uniform(0.0, max_angle) * rng.unit_vector();
  return xi;
}

RigidTransform random_pose(Rng& rng) {
  return se3_exp(random_twist(rng, 3.0, 0.5));
}

}  // namespace

TEST_CASE("se3_exp identity and axis cases") {
  CHECK((se3_exp(Twist()).matrix() - Eigen::Matrix4d::Identity()).norm() == 0.0);

  Twist xi;
  xi.omega = Eigen::Vector3d(0, 0, M_PI / 2);
  const RigidTransform G = se3_exp(xi);
  const Eigen::Vector3d mapped = G * Eigen::Vector3d(1, 0, 0);
  CHECK((mapped - Eigen::Vector3d(0, 1, 0)).norm() < 1e-12);
  CHECK(G.translation.norm() == 0.0);
}

TEST_CASE("se3_exp matches the 30-term matrix-exponential series") {
  Rng rng(7);
  for (int i = 0; i < 200; ++i) {
    const Twist xi = random_twist(rng);
    const Eigen::Matrix4d expected = oracle::se3_exp_series(xi);
    CHECK((se3_exp(xi).matrix() - expected).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("exp/log round trip on 1000 random transforms") {
  Rng rng(11);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const Twist xi = random_twist(rng);
    const Twist back = se3_log(se3_exp(xi));
    worst = std::max(worst, (back.vec() - xi.vec()).norm());
  }
  CHECK(worst < 1e-9);
}

TEST_CASE("se3_log basics and diagnostics") {
  CHECK(se3_log(RigidTransform::identity()).vec().norm() == 0.0);

  Twist xi;
  xi.omega = Eigen::Vector3d(0, 0, M_PI / 2);
  CHECK((se3_log(se3_exp(xi)).omega - xi.omega).norm() < 1e-12);

  // angle ~ pi exercises the stable axis-extraction branch
  Twist near_pi;
  near_pi.omega = (M_PI - 1e-9) * Eigen::Vector3d(1, 2, 2).normalized();
  LogDiagnostics diag;
  const Twist back = se3_log(se3_exp(near_pi), &diag);
  CHECK(diag.so3_branch == LogBranch::kNearPi);
  CHECK(diag.angle == doctest::Approx(M_PI).epsilon(1e-6));
  CHECK((back.omega - near_pi.omega).norm() < 1e-6);
  CHECK(std::abs(back.omega.norm() - diag.angle) < 1e-9);  // angle in [0, pi]
}

TEST_CASE("rotation invariants hold for exp") {
  Rng rng(13);
  for (int i = 0; i < 100; ++i) {
    const RigidTransform G = se3_exp(random_twist(rng));
    CHECK(G.orthonormality_error() < 1e-9);
    const RigidTransform round = G * G.inverse();
    CHECK((round.matrix() - Eigen::Matrix4d::Identity()).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("retract identities") {
  Rng rng(17);
  const RigidTransform G = random_pose(rng);
  CHECK((retract(G, Twist()).matrix() - G.matrix()).norm() == 0.0);

  const Twist xi = random_twist(rng);
  CHECK((retract(RigidTransform::identity(), xi).matrix() - se3_exp(xi).matrix()).norm() <
        1e-12);

  // undo a step through the log of its exp
  for (int i = 0; i < 50; ++i) {
    const RigidTransform base = random_pose(rng);
    const Twist step = random_twist(rng, 2.5);
    const Twist undo = se3_log(se3_exp(step));
    const RigidTransform back = retract(retract(base, step), -undo);
    CHECK((back.matrix() - base.matrix()).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("se3 left jacobian matches finite differences of exp") {
  Rng rng(19);
  for (int i = 0; i < 50; ++i) {
    const Twist xi = random_twist(rng, 2.8);
    const Matrix6d J = se3_left_jacobian(xi);
    const Eigen::MatrixXd J_fd = oracle::central_difference(
        [&](const Eigen::VectorXd& d) -> Eigen::VectorXd {
          const Twist shifted(Vector6d(xi.vec() + d));
          // left-trivialized difference: log(exp(xi+d) * exp(xi)^-1)
          return se3_log(se3_exp(shifted) * se3_exp(xi).inverse()).vec();
        },
        Vector6d::Zero(), 1e-6);
    CHECK((J - J_fd).cwiseAbs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("adjoint identity: exp(Ad_G xi) = G exp(xi) G^-1") {
  Rng rng(23);
  for (int i = 0; i < 50; ++i) {
    const RigidTransform G = random_pose(rng);
    const Twist xi = random_twist(rng, 1.0);
    const RigidTransform lhs = se3_exp(Twist(Vector6d(adjoint(G) * xi.vec())));
    const RigidTransform rhs = G * se3_exp(xi) * G.inverse();
    CHECK((lhs.matrix() - rhs.matrix()).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("project/backproject basics") {
  const AugmentedPoint p = project({1, 2, 2});
  CHECK(p.x == doctest::Approx(0.5));
  CHECK(p.y == doctest::Approx(1.0));
  CHECK(p.d == doctest::Approx(0.5));

  const auto X = backproject(AugmentedPoint(0.5, 1.0, 0.5));
  REQUIRE(X.has_value());
  CHECK((*X - Eigen::Vector3d(1, 2, 2)).norm() < 1e-15);

  CHECK_FALSE(project({0, 0, 1e-9}).valid());
  CHECK_FALSE(backproject(AugmentedPoint(0.1, 0.2, 0.0)).has_value());
}

TEST_CASE("projection inverse pair over Z in [0.1, 10]") {
  Rng rng(29);
  for (int i = 0; i < 1000; ++i) {
    const double z = rng.uniform(0.1, 10.0);
    const Eigen::Vector3d X(rng.uniform(-2, 2) * z, rng.uniform(-2, 2) * z, z);
    const auto back = backproject(project(X));
    REQUIRE(back.has_value());
    CHECK((*back - X).norm() < 1e-10 * X.norm());

    const AugmentedPoint x(rng.uniform(-2, 2), rng.uniform(-2, 2), 1.0 / z);
    const AugmentedPoint round = project(*backproject(x));
    CHECK((round.vec() - x.vec()).norm() < 1e-12);
  }
}

TEST_CASE("forward pose jacobian: analytic entries and finite differences") {
  // translation columns of the x-row at X = (0,0,1)
  const Matrix36d J = projection_pose_jacobian_forward({0, 0, 1});
  CHECK(J(0, 0) == doctest::Approx(1.0));
  CHECK(J(0, 1) == doctest::Approx(0.0));
  CHECK(J(0, 2) == doctest::Approx(0.0));
  // inverse-depth row has no in-plane translation response
  CHECK(J(2, 0) == 0.0);
  CHECK(J(2, 1) == 0.0);

  Rng rng(31);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double z = rng.uniform(0.3, 5.0);
    const Eigen::Vector3d p(rng.uniform(-1, 1) * z, rng.uniform(-1, 1) * z, z);
    const Matrix36d analytic = projection_pose_jacobian_forward(p);
    const Eigen::MatrixXd fd = oracle::central_difference(
        [&](const Eigen::VectorXd& d) -> Eigen::VectorXd {
          const RigidTransform inc = se3_exp(Twist(Vector6d(d)));
          return project(inc * p).vec();
        },
        Vector6d::Zero(), 1e-6);
    worst = std::max(worst, ((analytic - fd).cwiseAbs() /
                             std::max(1.0, analytic.cwiseAbs().maxCoeff()))
                                .maxCoeff());
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("backward pose jacobian matches finite differences") {
  Rng rng(37);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const RigidTransform G0 = random_pose(rng);
    const RigidTransform Gi = random_pose(rng);
    const double z = rng.uniform(0.5, 4.0);
    const Eigen::Vector3d q(rng.uniform(-0.8, 0.8) * z, rng.uniform(-0.8, 0.8) * z, z);
    const RigidTransform rel = Gi * G0.inverse();
    const Eigen::Vector3d p = rel * q;
    if (p.z() < 0.2) continue;
    const Matrix36d analytic = projection_pose_jacobian_backward(q, rel.rotation, p);
    const Eigen::MatrixXd fd = oracle::central_difference(
        [&](const Eigen::VectorXd& d) -> Eigen::VectorXd {
          const RigidTransform G0_new = retract(G0, Twist(Vector6d(d)));
          return project(Gi * G0_new.inverse() * q).vec();
        },
        Vector6d::Zero(), 1e-6);
    const double scale = std::max(1.0, analytic.cwiseAbs().maxCoeff());
    worst = std::max(worst, (analytic - fd).cwiseAbs().maxCoeff() / scale);
  }
  CHECK(worst < 1e-5);
}

TEST_CASE("induce_correspondence identity and translation cases") {
  Intrinsics K{100, 100, 8, 6, 16, 12};
  DepthMap depth(12, 16);
  Rng rng(41);
  for (double& z : depth.z) z = rng.uniform(1.0, 3.0);

  SUBCASE("same pose gives the identity field") {
    const RigidTransform G = random_pose(rng);
    const CorrespondenceField field = induce_correspondence(G, G, depth, K);
    const CorrespondenceField expect = lattice_field(depth, K);
    for (int r = 0; r < 12; ++r)
      for (int c = 0; c < 16; ++c) {
        REQUIRE(field.valid(r, c));
        CHECK((field.points.at(r, c) - expect.points.at(r, c)).norm() < 1e-12);
      }
  }

  SUBCASE("halving depth doubles normalized coordinates and inverse depth") {
    for (double& z : depth.z) z = 2.0;
    const RigidTransform src;  // identity
    RigidTransform dst;
    dst.translation = Eigen::Vector3d(0, 0, -1);  // Z: 2 -> 1
    const CorrespondenceField field = induce_correspondence(src, dst, depth, K);
    const CorrespondenceField base = lattice_field(depth, K);
    for (int r = 0; r < 12; ++r)
      for (int c = 0; c < 16; ++c) {
        REQUIRE(field.valid(r, c));
        const Eigen::Vector3d expect = 2.0 * base.points.at(r, c);
        CHECK((field.points.at(r, c) - expect).norm() < 1e-12);
      }
  }
}

TEST_CASE("induce_correspondence matches a scalar per-pixel oracle") {
  Intrinsics K{60, 55, 2, 2, 4, 4};
  DepthMap depth(4, 4);
  Rng rng(43);
  for (double& z : depth.z) z = rng.uniform(0.8, 2.5);
  const RigidTransform G_src = random_pose(rng);
  const RigidTransform G_dst = se3_exp(random_twist(rng, 0.3, 0.1)) * G_src;

  const CorrespondenceField field = induce_correspondence(G_src, G_dst, depth, K);
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) {
      // scalar re-implementation
      const double z = depth.z.at(r, c);
      const double xn = (c + 0.5 - K.cx) / K.fx;
      const double yn = (r + 0.5 - K.cy) / K.fy;
      const Eigen::Vector3d X(xn * z, yn * z, z);
      const Eigen::Vector3d Y =
          G_dst.rotation * (G_src.rotation.transpose() * (X - G_src.translation)) +
          G_dst.translation;
      if (Y.z() <= 1e-6) {
        CHECK_FALSE(field.valid(r, c));
        continue;
      }
      REQUIRE(field.valid(r, c));
      const Eigen::Vector3d expect(Y.x() / Y.z(), Y.y() / Y.z(), 1.0 / Y.z());
      CHECK((field.points.at(r, c) - expect).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
}

TEST_CASE("correspondence composition returns to the start") {
  Intrinsics K{80, 80, 10, 8, 20, 16};
  Rng rng(47);
  DepthMap depth(16, 20);
  for (double& z : depth.z) z = rng.uniform(1.0, 2.0);
  const RigidTransform Ga = random_pose(rng);
  const RigidTransform Gb = se3_exp(random_twist(rng, 0.2, 0.05)) * Ga;

  const CorrespondenceField ab = induce_correspondence(Ga, Gb, depth, K);
  // Build the transformed depth seen from b by resampling ab at its own grid:
  // evaluate the mapping per pixel and invert its depth channel.
  for (int r = 0; r < 16; ++r) {
    for (int c = 0; c < 20; ++c) {
      if (!ab.valid(r, c)) continue;
      const Eigen::Vector3d p = ab.points.at(r, c);
      // map the landed point straight back through the inverse relative pose
      const Eigen::Vector3d X(p.x() / p.z(), p.y() / p.z(), 1.0 / p.z());
      const Eigen::Vector3d back = Ga * (Gb.inverse() * X);
      const Eigen::Vector2d px = K.denormalize({back.x() / back.z(), back.y() / back.z()});
      CHECK(std::abs(px.x() - (c + 0.5)) < 1e-8);
      CHECK(std::abs(px.y() - (r + 0.5)) < 1e-8);
    }
  }
}

TEST_CASE("intrinsics downsample keeps subsampled pixel centers aligned") {
  Intrinsics K{340, 340, 161.2, 119.7, 320, 240};
  const Intrinsics Kq = K.downsample(4);
  CHECK(Kq.width == 80);
  CHECK(Kq.height == 60);
  // full pixel (4r, 4c) center maps to quarter pixel (r, c) center
  for (int r : {0, 7, 59}) {
    for (int c : {0, 13, 79}) {
      const Eigen::Vector2d norm = K.normalize({4.0 * c + 0.5, 4.0 * r + 0.5});
      const Eigen::Vector2d q = Kq.denormalize(norm);
      CHECK(q.x() == doctest::Approx(c + 0.5).epsilon(1e-12));
      CHECK(q.y() == doctest::Approx(r + 0.5).epsilon(1e-12));
    }
  }
}

TEST_CASE("bilinear_sample midpoint and validity") {
  Grid<double> g(2, 2, 0.0);
  g.at(0, 0) = 1.0;
  g.at(0, 1) = 3.0;
  const auto mid = bilinear_sample(g, 0.5, 0.0);
  REQUIRE(mid.has_value());
  CHECK(*mid == doctest::Approx(2.0));
  CHECK_FALSE(bilinear_sample(g, -0.5, 0.0).has_value());
  Grid<uint8_t> mask(2, 2, 1);
  mask.at(0, 1) = 0;
  CHECK_FALSE(bilinear_sample(g, 0.5, 0.0, &mask).has_value());
}
