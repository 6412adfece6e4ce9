#include "doctest.h"

#include <cmath>
#include <numbers>

#include "l2g/synthdata.hpp"

using namespace l2g;

namespace {

constexpr double kPi = std::numbers::pi;

ShapeSpec random_spec(Rng& rng) {
  ShapeSpec s;
  s.kind = static_cast<ShapeKind>(rng.index(3));
  s.dims = Vec3(rng.uniform(0.03, 0.075), rng.uniform(0.06, 0.15), rng.uniform(0.06, 0.15));
  s.yaw = rng.uniform(0.0, 2 * kPi);
  s.offset = Eigen::Vector2d(rng.uniform(-0.1, 0.1), rng.uniform(-0.1, 0.1));
  return s;
}

GripperSpec narrow_gripper() {
  GripperSpec g;
  g.max_opening = 0.085;
  return g;
}

}  // namespace

TEST_CASE("signed distances") {
  ShapeSpec box;
  box.dims = Vec3(0.08, 0.08, 0.08);
  const Shape b(box);
  CHECK(b.center().z() == doctest::Approx(0.04));
  CHECK(b.sdf(b.center()) == doctest::Approx(-0.04).epsilon(1e-12));

  ShapeSpec ball;
  ball.kind = ShapeKind::Sphere;
  ball.dims = Vec3(0.05, 0, 0);
  const Shape s(ball);
  CHECK(s.sdf(s.center() + Vec3(0, 0.07, 0)) == doctest::Approx(0.02).epsilon(1e-12));

  ShapeSpec bad = box;
  bad.dims.y() = 0.004;
  CHECK_THROWS_AS(Shape{bad}, Error);
  bad.dims.y() = std::nan("");
  CHECK_THROWS_AS(Shape{bad}, Error);
}

TEST_CASE("shapes rest on the ground and surface samples lie on the surface") {
  Rng rng(1);
  for (int i = 0; i < 60; ++i) {
    const Shape shape(random_spec(rng));
    double lowest = 1.0;
    for (int j = 0; j < 200; ++j) {
      const SurfacePoint p = shape.sample_surface(rng);
      CHECK(std::abs(shape.sdf(p.point)) <= 1e-9);
      CHECK(std::abs(p.normal.norm() - 1.0) <= 1e-12);
      lowest = std::min(lowest, p.point.z());
    }
    CHECK(lowest >= -1e-12);
  }
}

TEST_CASE("partial views keep only camera-facing surface") {
  ShapeSpec ball;
  ball.kind = ShapeKind::Sphere;
  ball.dims = Vec3(0.05, 0, 0);
  const Shape s(ball);
  const Vec3 view = Vec3(0.3, -0.2, -1.0).normalized();
  const PointCloud c = sample_partial_view(s, view, 400, 7);
  for (Eigen::Index i = 0; i < c.rows(); ++i) {
    CHECK(s.normal(c.row(i).transpose()).dot(-view) > 0.0);
    CHECK(s.sdf(c.row(i).transpose()) <= 1e-9);
  }

  ShapeSpec box;
  box.dims = Vec3(0.08, 0.06, 0.1);
  const Shape b(box);
  const PointCloud face = sample_partial_view(b, Vec3(-1, 0, 0), 200, 3);
  for (Eigen::Index i = 0; i < face.rows(); ++i) {
    CHECK(face(i, 0) == doctest::Approx(0.04).epsilon(1e-12));
  }

  CHECK(sample_partial_view(b, view, 50, 11) == sample_partial_view(b, view, 50, 11));
  CHECK_THROWS_AS(sample_partial_view(b, view, 0, 1), Error);
}

TEST_CASE("oracle examples") {
  const GripperSpec gripper = narrow_gripper();

  ShapeSpec small;
  small.kind = ShapeKind::Sphere;
  small.dims = Vec3(0.03, 0, 0);
  const Shape ball(small);
  const Vec3 c = ball.center();
  const Grasp7 diametral{c - Vec3(0.03, 0, 0), c + Vec3(0.03, 0, 0), kPi / 2};
  const OracleResult ok = oracle_check(ball, diametral, gripper);
  CHECK(ok.success);
  CHECK(ok.reason == OracleFailure::None);

  ShapeSpec cube;
  cube.dims = Vec3(0.08, 0.08, 0.08);
  const Shape box(cube);
  const Grasp7 adjacent{Vec3(-0.04, 0, 0.04), Vec3(0, 0, 0.08), kPi / 2};
  CHECK(oracle_check(box, adjacent, gripper).reason == OracleFailure::Friction);

  ShapeSpec wide;
  wide.dims = Vec3(0.09, 0.05, 0.05);
  const Shape w(wide);
  const Grasp7 too_wide{Vec3(-0.045, 0, 0.025), Vec3(0.045, 0, 0.025), kPi / 2};
  CHECK(oracle_check(w, too_wide, gripper).reason == OracleFailure::Width);

  const Grasp7 low{Vec3(-0.04, 0, 0.001), Vec3(0.04, 0, 0.001), kPi / 2};
  CHECK(oracle_check(box, low, gripper).reason == OracleFailure::Clearance);

  const Grasp7 off{Vec3(-0.04, 0, 0.04), Vec3(0.045, 0, 0.04), kPi / 2};
  CHECK(oracle_check(box, off, gripper).reason == OracleFailure::Contact);

  // Side approach keeps the finger tips at contact height.
  const Grasp7 side{Vec3(-0.04, 0, 0.04), Vec3(0.04, 0, 0.04), 0.0};
  CHECK(oracle_check(box, side, gripper).success);
}

TEST_CASE("annotation on a narrow box yields positive side pinches") {
  ShapeSpec spec;
  spec.dims = Vec3(0.07, 0.12, 0.1);
  const GraspSet set = annotate_grasps(Shape(spec), narrow_gripper(), 200, 4);
  const auto pos = set.positives();
  REQUIRE(!pos.empty());
  for (const auto& g : pos) CHECK(grasp_width(g) <= 0.085);
  CHECK(!set.negatives().empty());
}

TEST_CASE("a sphere wider than the opening has no positives") {
  ShapeSpec spec;
  spec.kind = ShapeKind::Sphere;
  spec.dims = Vec3(0.06, 0, 0);
  const GraspSet set = annotate_grasps(Shape(spec), narrow_gripper(), 100, 5);
  CHECK(set.grasps.size() == 100);
  CHECK(set.positives().empty());
}

TEST_CASE("annotations are self-consistent") {
  Rng rng(6);
  const GripperSpec gripper;
  std::size_t positives = 0, negatives = 0;
  for (int i = 0; i < 40; ++i) {
    const Shape shape(random_spec(rng));
    const GraspSet set = annotate_grasps(shape, gripper, 100, rng.next());
    REQUIRE(set.grasps.size() == set.reasons.size());
    for (std::size_t j = 0; j < set.grasps.size(); ++j) {
      const auto& lg = set.grasps[j];
      const OracleResult r = oracle_check(shape, lg.grasp, gripper);
      CHECK(antipodal(shape, lg.grasp, gripper.friction));
      CHECK(r.success == (lg.label == 1));
      CHECK(r.reason == set.reasons[j]);
      CHECK(lg.grasp.c1.z() <= lg.grasp.c2.z());
      if (lg.label) {
        ++positives;
      } else {
        CHECK(set.reasons[j] != OracleFailure::None);
        ++negatives;
      }
    }
  }
  CHECK(positives > 0);
  CHECK(negatives > 0);
}

TEST_CASE("annotation is deterministic") {
  ShapeSpec spec;
  spec.kind = ShapeKind::Cylinder;
  spec.dims = Vec3(0.03, 0.1, 0);
  const Shape shape(spec);
  const GraspSet a = annotate_grasps(shape, GripperSpec{}, 50, 9);
  const GraspSet b = annotate_grasps(shape, GripperSpec{}, 50, 9);
  REQUIRE(a.grasps.size() == b.grasps.size());
  for (std::size_t i = 0; i < a.grasps.size(); ++i) {
    CHECK(a.grasps[i].grasp.c1 == b.grasps[i].grasp.c1);
    CHECK(a.grasps[i].grasp.phi == b.grasps[i].grasp.phi);
  }
  CHECK_THROWS_AS(annotate_grasps(shape, GripperSpec{}, 0, 9), Error);
}
