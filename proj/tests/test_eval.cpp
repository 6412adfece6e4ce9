#include "doctest.h"

#include <cmath>
#include <numbers>

#include "l2g/eval.hpp"

using namespace l2g;

namespace {

constexpr double kPi = std::numbers::pi;

Grasp7 random_grasp(Rng& rng, double spread = 0.06) {
  const Vec3 c(rng.uniform(-spread, spread), rng.uniform(-spread, spread), rng.uniform(0.03, 0.03 + spread));
  const Vec3 d(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-0.5, 0.5));
  const Vec3 half = 0.03 * d.normalized();
  return canonicalize(Grasp7{c - half, c + half, rng.uniform(0.0, kPi)});
}

std::vector<GraspPrediction> as_predictions(const std::vector<Grasp7>& gs, Rng& rng) {
  std::vector<GraspPrediction> out;
  for (const auto& g : gs) out.push_back({g, std::round(rng.uniform(0, 10)) / 10.0});
  return out;
}

bool brute_match(const Grasp7& p, const Grasp7& g) {
  const GraspPose a = grasp7_to_pose(canonicalize(p));
  const GraspPose b = grasp7_to_pose(canonicalize(g));
  return (a.x - b.x).norm() <= 0.025 && std::acos(std::min(1.0, std::abs(a.u.coeffs().dot(b.u.coeffs())))) <= kPi / 6;
}

}  // namespace

TEST_CASE("ranking") {
  std::vector<GraspPrediction> p(3);
  p[0].score = 0.2;
  p[1].score = 0.9;
  p[2].score = 0.5;
  const RankedPredictions r = rank(p);
  CHECK(r.original_index == std::vector<std::size_t>{1, 2, 0});
  std::vector<GraspPrediction> ranked_items = r.items;
  CHECK(rank(ranked_items).original_index == std::vector<std::size_t>{0, 1, 2});

  std::vector<GraspPrediction> tie(4);
  for (auto& t : tie) t.score = 0.3;
  tie[2].score = 0.4;
  CHECK(rank(tie).original_index == std::vector<std::size_t>{2, 0, 1, 3});
}

TEST_CASE("top-k sizes round up") {
  CHECK(top_k_count(64, 10) == 7);
  CHECK(top_k_count(10, 10) == 1);
  CHECK(top_k_count(3, 10) == 1);
  CHECK(top_k_count(64, 100) == 64);
  CHECK(top_k_count(20, 30) == 6);
}

TEST_CASE("predictions taken from the positives are all successful") {
  Rng rng(1);
  std::vector<Grasp7> gt;
  for (int i = 0; i < 20; ++i) gt.push_back(random_grasp(rng));
  const RankedPredictions r = rank(as_predictions(gt, rng));
  for (double k : {10.0, 30.0, 50.0, 100.0}) CHECK(success_rate_at_k(r, gt, k) == 1.0);
  CHECK(coverage_rate_at_k(r, gt, 100) == 1.0);
  for (const auto& p : success_coverage_curve(r, gt)) CHECK(p.success == 1.0);
}

TEST_CASE("distant predictions score zero") {
  Rng rng(2);
  std::vector<Grasp7> gt, far;
  for (int i = 0; i < 10; ++i) {
    gt.push_back(random_grasp(rng));
    Grasp7 g = random_grasp(rng);
    g.c1 += Vec3(1, 0, 0);
    g.c2 += Vec3(1, 0, 0);
    far.push_back(g);
  }
  const RankedPredictions r = rank(as_predictions(far, rng));
  CHECK(success_rate_at_k(r, gt, 100) == 0.0);
  CHECK(coverage_rate_at_k(r, gt, 100) == 0.0);
}

TEST_CASE("coverage of one isolated positive out of ten") {
  std::vector<Grasp7> gt;
  for (int i = 0; i < 10; ++i) {
    const double x = 0.1 * i;
    gt.push_back({Vec3(x - 0.03, 0, 0.05), Vec3(x + 0.03, 0, 0.06), 1.0});
  }
  const RankedPredictions r = rank({{gt[4], 0.7}});
  CHECK(coverage_rate_at_k(r, gt, 100) == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(success_rate_at_k(r, gt, 10) == 1.0);
}

TEST_CASE("empty inputs are rejected") {
  Rng rng(3);
  const std::vector<Grasp7> gt{random_grasp(rng)};
  CHECK_THROWS_AS(success_rate_at_k(rank({}), gt, 10), Error);
  CHECK_THROWS_AS(coverage_rate_at_k(rank({{gt[0], 0.5}}), {}, 10), Error);
}

TEST_CASE("metrics equal brute force on random instances") {
  Rng rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    const auto m = static_cast<std::size_t>(1 + rng.index(30));
    const auto n = static_cast<std::size_t>(1 + rng.index(100));
    std::vector<Grasp7> gt, pred;
    for (std::size_t j = 0; j < n; ++j) gt.push_back(random_grasp(rng));
    for (std::size_t i = 0; i < m; ++i) {
      Grasp7 g = gt[rng.index(n)];
      g.c1 += Vec3(rng.uniform(-0.02, 0.02), rng.uniform(-0.02, 0.02), rng.uniform(-0.02, 0.02));
      g.c2 += Vec3(rng.uniform(-0.02, 0.02), rng.uniform(-0.02, 0.02), rng.uniform(-0.02, 0.02));
      g.phi = std::clamp(g.phi + rng.uniform(-0.5, 0.5), 0.0, kPi);
      if (rng.uniform() < 0.5) g = Grasp7{g.c2, g.c1, kPi - g.phi};
      pred.push_back(g);
    }
    const RankedPredictions r = rank(as_predictions(pred, rng));
    for (double k : {10.0, 30.0, 50.0, 100.0}) {
      const std::size_t top = top_k_count(m, k);
      std::size_t hits = 0, covered = 0;
      for (std::size_t i = 0; i < top; ++i) {
        bool any = false;
        for (const auto& g : gt) any = any || brute_match(r.items[i].grasp, g);
        hits += any;
      }
      for (const auto& g : gt) {
        bool any = false;
        for (std::size_t i = 0; i < top; ++i) any = any || brute_match(r.items[i].grasp, g);
        covered += any;
      }
      CHECK(success_rate_at_k(r, gt, k) == static_cast<double>(hits) / static_cast<double>(top));
      CHECK(coverage_rate_at_k(r, gt, k) == static_cast<double>(covered) / static_cast<double>(n));
    }
    CHECK(coverage_rate_at_k(r, gt, 100) >= coverage_rate_at_k(r, gt, 10));

    const auto curve = success_coverage_curve(r, gt);
    REQUIRE(curve.size() == m);
    for (std::size_t i = 1; i < curve.size(); ++i) CHECK(curve[i].coverage >= curve[i - 1].coverage);
    for (double k : {10.0, 30.0, 50.0, 100.0}) {
      const CurvePoint& p = curve[top_k_count(m, k) - 1];
      CHECK(p.success == success_rate_at_k(r, gt, k));
      CHECK(p.coverage == coverage_rate_at_k(r, gt, k));
    }
  }
}

TEST_CASE("evaluation ignores contact order") {
  Rng rng(5);
  std::vector<Grasp7> gt, pred, swapped;
  for (int i = 0; i < 30; ++i) gt.push_back(random_grasp(rng));
  for (int i = 0; i < 20; ++i) {
    Grasp7 g = gt[rng.index(30)];
    g.c2 += Vec3(0.01, 0, 0.005);
    pred.push_back(g);
    swapped.push_back({g.c2, g.c1, kPi - g.phi});
  }
  const RankedPredictions a = rank(as_predictions(pred, rng));
  RankedPredictions b = a;
  for (std::size_t i = 0; i < b.items.size(); ++i) {
    const Grasp7 g = b.items[i].grasp;
    b.items[i].grasp = {g.c2, g.c1, kPi - g.phi};
  }
  for (double k : {10.0, 50.0, 100.0}) {
    CHECK(success_rate_at_k(a, gt, k) == success_rate_at_k(b, gt, k));
    CHECK(coverage_rate_at_k(a, gt, k) == coverage_rate_at_k(b, gt, k));
  }
}

TEST_CASE("oracle success") {
  ShapeSpec spec;
  spec.dims = Vec3(0.06, 0.1, 0.08);
  const Shape shape(spec);
  GripperSpec gripper;
  const GraspSet set = annotate_grasps(shape, gripper, 100, 6);
  const auto pos = set.positives();
  REQUIRE(pos.size() >= 10);
  Rng rng(7);
  const RankedPredictions r = rank(as_predictions(pos, rng));
  CHECK(oracle_success_at_k(r, shape, gripper, 100) == 1.0);

  std::vector<GraspPrediction> mixed;
  for (const auto& lg : set.grasps) mixed.push_back({lg.grasp, rng.uniform()});
  const RankedPredictions rm = rank(mixed);
  for (double k : {10.0, 30.0, 100.0}) {
    const std::size_t top = top_k_count(rm.items.size(), k);
    std::size_t ok = 0;
    for (std::size_t i = 0; i < top; ++i) ok += oracle_check(shape, rm.items[i].grasp, gripper).success;
    CHECK(oracle_success_at_k(rm, shape, gripper, k) == static_cast<double>(ok) / static_cast<double>(top));
  }

  GripperSpec tiny = gripper;
  tiny.max_opening = 0.01;
  CHECK(oracle_success_at_k(r, shape, tiny, 100) == 0.0);
  CHECK_THROWS_AS(oracle_success_at_k(rank({}), shape, gripper, 10), Error);
}

TEST_CASE("aggregation averages per sample in id order") {
  SampleMetrics a, b, c;
  a.sample_id = "b";
  a.has_positives = true;
  a.success = {1.0};
  a.coverage = {0.5};
  a.oracle = {1.0};
  a.curve = {{1, 0.5, 1.0}};
  b = a;
  b.sample_id = "a";
  b.success = {0.0};
  b.coverage = {0.1};
  b.oracle = {0.0};
  b.curve = {{1, 0.1, 0.0}};
  c.sample_id = "c";
  c.oracle = {0.5};
  const MetricReport r = aggregate({a, b, c}, {10.0});
  CHECK(r.samples.front().sample_id == "a");
  CHECK(r.rule_samples == 2);
  CHECK(r.success[0] == 0.5);
  CHECK(r.coverage[0] == doctest::Approx(0.3));
  CHECK(r.oracle[0] == 0.5);
  const MetricReport again = aggregate({c, a, b}, {10.0});
  CHECK(again.success == r.success);
  CHECK(format_report_table(again) == format_report_table(r));
}
