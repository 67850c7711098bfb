#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oracles.hpp"
#include "poseref/metrics/metrics.hpp"
#include "poseref/scene/render.hpp"
#include "test_scenes.hpp"

using namespace poseref;

namespace {

ObjectModel asym_model(uint64_t seed) { return make_test_model(seed, 1, 0.05); }

RigidTransform pose_at(double z) {
  RigidTransform G;
  G.translation = Eigen::Vector3d(0, 0, z);
  return G;
}

}  // namespace

TEST_CASE("mssd basics") {
  const ObjectModel model = asym_model(3);
  const RigidTransform P = pose_at(0.4);
  CHECK(mssd(P, P, model) == 0.0);

  SUBCASE("pure translation gives exactly the offset norm") {
    Rng rng(5);
    for (int i = 0; i < 20; ++i) {
      const Eigen::Vector3d t = rng.gaussian3(0.1);
      RigidTransform Q = P;
      Q.translation += t;
      CHECK(mssd(Q, P, model) == doctest::Approx(t.norm()).epsilon(1e-12));
    }
  }

  SUBCASE("a modeled symmetry absorbs the error") {
    ObjectModel sym = model;
    // force the vertex set to be exactly 180-degree symmetric about z
    const size_t n = sym.vertices.size();
    for (size_t i = 0; i < n; ++i) {
      Eigen::Vector3d v = sym.vertices[i];
      sym.vertices.push_back({-v.x(), -v.y(), v.z()});
    }
    RigidTransform flip;
    flip.rotation = so3_exp(Eigen::Vector3d(0, 0, M_PI));
    sym.symmetries.push_back(flip);
    const RigidTransform P_hat = P * flip;
    CHECK(mssd(P_hat, P, sym) < 1e-12);
    // without the symmetry the same error is large
    ObjectModel no_sym = sym;
    no_sym.symmetries = {RigidTransform::identity()};
    CHECK(mssd(P_hat, P, no_sym) > 0.01);
  }
}

TEST_CASE("mssd/mspd invariance and monotonicity properties") {
  const ObjectModel model = asym_model(7);
  const Intrinsics K = testbed::crop_camera(640, 480, 520.0);
  Rng rng(9);
  for (int i = 0; i < 10; ++i) {
    const RigidTransform A = perturb_pose_exact(pose_at(0.5), rng.uniform(0, 20), 0.01, rng);
    const RigidTransform B = perturb_pose_exact(pose_at(0.5), rng.uniform(0, 20), 0.01, rng);
    // symmetric under swap when S = {I}
    CHECK(mssd(A, B, model) == doctest::Approx(mssd(B, A, model)).epsilon(1e-12));
    CHECK(mspd(A, B, model, K) == doctest::Approx(mspd(B, A, model, K)).epsilon(1e-9));
  }
  // translation scaling scales MSSD exactly
  const RigidTransform P = pose_at(0.5);
  RigidTransform Q = P;
  const Eigen::Vector3d t(0.01, -0.02, 0.015);
  Q.translation += t;
  const double base = mssd(Q, P, model);
  RigidTransform Q3 = P;
  Q3.translation += 3.0 * t;
  CHECK(mssd(Q3, P, model) == doctest::Approx(3.0 * base).epsilon(1e-12));

  // min-over-symmetries is bounded by any single symmetry's max distance
  ObjectModel sym = model;
  RigidTransform half_turn;
  half_turn.rotation = so3_exp(Eigen::Vector3d(0, 0, M_PI / 2));
  sym.symmetries.push_back(half_turn);
  Rng rng2(11);
  for (int i = 0; i < 10; ++i) {
    const RigidTransform hat = perturb_pose_exact(P, rng2.uniform(0, 30), 0.02, rng2);
    const double value = mssd(hat, P, sym);
    for (const auto& S : sym.symmetries) {
      const RigidTransform target = P * S;
      double worst = 0.0;
      for (const auto& x : sym.vertices)
        worst = std::max(worst, (hat * x - target * x).norm());
      CHECK(value <= worst + 1e-12);
    }
  }
}

TEST_CASE("mspd matches a per-vertex brute-force oracle") {
  const ObjectModel model = asym_model(13);
  const Intrinsics K = testbed::crop_camera(640, 480, 520.0);
  Rng rng(15);

  SUBCASE("in-plane rotation about the principal axis") {
    const RigidTransform P = pose_at(0.6);
    const double theta = 0.2;
    RigidTransform hat = P;
    hat.rotation = so3_exp(Eigen::Vector3d(0, 0, theta)) * P.rotation;
    const double value = mspd(hat, P, model, K);
    double expect = 0.0;
    for (const auto& x : model.vertices) {
      const Eigen::Vector3d a = hat * x;
      const Eigen::Vector3d b = P * x;
      const Eigen::Vector2d pa = K.denormalize({a.x() / a.z(), a.y() / a.z()});
      const Eigen::Vector2d pb = K.denormalize({b.x() / b.z(), b.y() / b.z()});
      expect = std::max(expect, (pa - pb).norm());
    }
    CHECK(value == doctest::Approx(expect).epsilon(1e-12));
  }

  SUBCASE("vertex behind the camera is a reported error") {
    const RigidTransform P = pose_at(0.6);
    CHECK_THROWS_AS(mspd(pose_at(-0.6), P, model, K), std::domain_error);
  }

  SUBCASE("symmetry-equivalent prediction scores zero") {
    ObjectModel sym = model;
    const size_t n = sym.vertices.size();
    for (size_t i = 0; i < n; ++i) {
      Eigen::Vector3d v = sym.vertices[i];
      sym.vertices.push_back({-v.x(), -v.y(), v.z()});
    }
    RigidTransform flip;
    flip.rotation = so3_exp(Eigen::Vector3d(0, 0, M_PI));
    sym.symmetries.push_back(flip);
    const RigidTransform P = pose_at(0.6);
    CHECK(mspd(P * flip, P, sym, K) < 1e-9);
  }
}

TEST_CASE("vsd basics and oracle equivalence") {
  const Intrinsics K = testbed::crop_camera(32, 24, 40.0);
  const ObjectModel model = asym_model(17);

  SUBCASE("identical renders score zero for any positive tau") {
    const DepthMap D = render_depth(model, pose_at(0.4), K);
    VsdOptions opts;
    opts.tau = 1e-6;
    const VsdResult r = vsd(D, D, D, opts);
    CHECK(r.value == 0.0);
    CHECK_FALSE(r.empty_union);
  }

  SUBCASE("disjoint visible sets score one") {
    DepthMap a(4, 4), b(4, 4), sensor(4, 4);
    a.z.at(0, 0) = 1.0;
    b.z.at(3, 3) = 1.0;
    const VsdResult r = vsd(a, b, sensor, {});
    CHECK(r.value == 1.0);
  }

  SUBCASE("empty union is flagged and scores zero") {
    DepthMap empty(4, 4);
    const VsdResult r = vsd(empty, empty, empty, {});
    CHECK(r.value == 0.0);
    CHECK(r.empty_union);
  }

  SUBCASE("random maps match a per-pixel scalar oracle exactly") {
    oracle::Lcg lcg(23);
    for (int trial = 0; trial < 20; ++trial) {
      DepthMap hat(6, 8), bar(6, 8), sensor(6, 8);
      for (int i = 0; i < 48; ++i) {
        hat.z[i] = lcg.uniform() < 0.6 ? lcg.uniform(0.5, 1.5) : 0.0;
        bar.z[i] = lcg.uniform() < 0.6 ? lcg.uniform(0.5, 1.5) : 0.0;
        sensor.z[i] = lcg.uniform() < 0.8 ? lcg.uniform(0.5, 1.5) : 0.0;
      }
      VsdOptions opts;
      opts.tau = lcg.uniform(0.01, 0.3);
      opts.delta_visibility = lcg.uniform(0.0, 0.2);
      const VsdResult got = vsd(hat, bar, sensor, opts);

      // independent scalar evaluation
      int uni = 0, bad = 0;
      for (int i = 0; i < 48; ++i) {
        auto vis = [&](double z) {
          if (z <= 0.0) return false;
          if (sensor.z[i] <= 0.0) return true;
          return z <= sensor.z[i] + opts.delta_visibility;
        };
        const bool vh = vis(hat.z[i]), vb = vis(bar.z[i]);
        if (!vh && !vb) continue;
        ++uni;
        if (!(vh && vb && std::abs(hat.z[i] - bar.z[i]) < opts.tau)) ++bad;
      }
      if (uni == 0) {
        CHECK(got.empty_union);
      } else {
        CHECK(got.value == doctest::Approx(double(bad) / uni).epsilon(1e-15));
        CHECK(got.value >= 0.0);
        CHECK(got.value <= 1.0);
      }
    }
  }
}

TEST_CASE("recall") {
  RecallSpec spec = RecallSpec::mssd(1.0);  // thresholds 0.05..0.50
  REQUIRE(spec.thresholds.size() == 10);
  CHECK(spec.thresholds.front() == doctest::Approx(0.05));
  CHECK(spec.thresholds.back() == doctest::Approx(0.50));

  SUBCASE("all zero errors give 1.0") {
    CHECK(recall({0.0, 0.0, 0.0}, spec) == 1.0);
  }
  SUBCASE("errors above the top threshold give 0.0") {
    CHECK(recall({0.6, 9.0}, spec) == 0.0);
  }
  SUBCASE("an error between thresholds 3 and 4 passes the 7 larger ones") {
    CHECK(recall({0.175}, spec) == doctest::Approx(0.7));
  }
  SUBCASE("counting oracle on random errors") {
    oracle::Lcg lcg(29);
    std::vector<double> errors;
    for (int i = 0; i < 57; ++i) errors.push_back(lcg.uniform(0.0, 0.7));
    long pass = 0;
    for (double e : errors)
      for (double t : spec.thresholds)
        if (e < t) ++pass;
    CHECK(recall(errors, spec) == doctest::Approx(double(pass) / (57.0 * 10.0)));
  }
  SUBCASE("recall never increases when errors grow") {
    oracle::Lcg lcg(31);
    std::vector<double> errors;
    for (int i = 0; i < 30; ++i) errors.push_back(lcg.uniform(0.0, 0.6));
    const double base = recall(errors, spec);
    for (double& e : errors) e += 0.07;
    CHECK(recall(errors, spec) <= base);
  }
  SUBCASE("input validation") {
    CHECK_THROWS_AS(recall({}, spec), std::invalid_argument);
    RecallSpec bad;
    bad.thresholds = {0.2, 0.1};
    CHECK_THROWS_AS(recall({0.1}, bad), std::invalid_argument);
  }
}

TEST_CASE("pose_loss") {
  const std::vector<RigidTransform> identity_only{RigidTransform::identity()};
  const RigidTransform G = pose_at(0.5);
  CHECK(pose_loss(G, G, identity_only) == 0.0);

  SUBCASE("pure rotation gives the geodesic angle") {
    RigidTransform hat = G;
    hat.rotation = so3_exp(Eigen::Vector3d(0, M_PI / 6, 0)) * G.rotation;
    CHECK(pose_loss(hat, G, identity_only) == doctest::Approx(M_PI / 6).epsilon(1e-12));
  }
  SUBCASE("translation term uses the weighted L1 distance") {
    RigidTransform hat = G;
    hat.translation += Eigen::Vector3d(0.01, -0.02, 0.03);
    PoseLossOptions opts;
    opts.translation_weight = 2.0;
    CHECK(pose_loss(hat, G, identity_only, opts) == doctest::Approx(2.0 * 0.06).epsilon(1e-12));
  }
  SUBCASE("symmetry-equivalent pose scores zero") {
    RigidTransform flip;
    flip.rotation = so3_exp(Eigen::Vector3d(0, 0, M_PI));
    CHECK(pose_loss(G * flip, G, {RigidTransform::identity(), flip}) < 1e-12);
  }
}

TEST_CASE("flow_loss") {
  CorrespondenceField a(4, 6), b(4, 6);
  Rng rng(33);
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 6; ++c) {
      const AugmentedPoint p(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(0.5, 2));
      a.set(r, c, p, true);
      b.set(r, c, p, true);
    }

  SUBCASE("identical fields give zero") {
    const FlowLossResult r = flow_loss(a, b);
    CHECK(r.endpoint == 0.0);
    CHECK(r.inverse_depth == 0.0);
  }
  SUBCASE("a uniform one-pixel offset gives exactly 1") {
    const Intrinsics K = testbed::crop_camera(64, 48, 100.0);
    CorrespondenceField shifted = b;
    for (auto& p : shifted.points) p.x() += 1.0 / K.fx;  // one pixel in x
    const FlowLossResult r = flow_loss(a, shifted, K.fx, K.fy);
    CHECK(r.endpoint == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("random fields match a scalar oracle; depth channel reported separately") {
    CorrespondenceField c2 = b;
    Rng rng2(35);
    for (auto& p : c2.points)
      p += Eigen::Vector3d(rng2.uniform(-0.1, 0.1), rng2.uniform(-0.1, 0.1),
                           rng2.uniform(-0.05, 0.05));
    for (size_t i = 0; i < c2.mask.size(); ++i) c2.mask[i] = rng2.uniform() < 0.8;
    const FlowLossResult r = flow_loss(a, c2, 2.0, 3.0);
    double sum_xy = 0, sum_d = 0;
    int n = 0;
    for (size_t i = 0; i < a.points.size(); ++i) {
      if (!a.mask[i] || !c2.mask[i]) continue;
      const Eigen::Vector3d d = a.points[i] - c2.points[i];
      sum_xy += std::abs(d.x() * 2.0) + std::abs(d.y() * 3.0);
      sum_d += std::abs(d.z());
      ++n;
    }
    REQUIRE(n == r.pixels);
    CHECK(r.endpoint == doctest::Approx(sum_xy / n).epsilon(1e-12));
    CHECK(r.inverse_depth == doctest::Approx(sum_d / n).epsilon(1e-12));
  }
  SUBCASE("empty mask intersection throws") {
    CorrespondenceField empty(4, 6);
    CHECK_THROWS_AS(flow_loss(a, empty), std::invalid_argument);
  }
}
