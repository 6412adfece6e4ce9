#include "doctest.h"

#include <cmath>

#include "l2g/sampler.hpp"

using namespace l2g;
using namespace l2g::diff;

namespace {

Matrix rows(std::initializer_list<std::initializer_list<double>> r) {
  Matrix m(static_cast<Index>(r.size()), 3);
  Index i = 0;
  for (const auto& row : r) {
    Index j = 0;
    for (double v : row) m(i, j++) = v;
    ++i;
  }
  return m;
}

Matrix random_points(Rng& rng, Index n, double s = 0.05) {
  Matrix m(n, 3);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-s, s);
  return m;
}

}  // namespace

TEST_CASE("nearest-neighbor losses") {
  Tape t;
  const Var a = t.constant(rows({{0, 0, 0}}));
  const Var b = t.constant(rows({{1, 0, 0}}));
  const Var two = t.constant(rows({{0, 0, 0}, {2, 0, 0}}));
  CHECK(loss_nn(two, two).item() == 0.0);
  CHECK(loss_nn(a, b).item() == 1.0);
  CHECK(loss_nn(two, a).item() == 2.0);
  CHECK(loss_mn(two, two).item() == 0.0);
  CHECK(loss_mn(two, a).item() == 4.0);
  CHECK(loss_cc(two, two).item() == 0.0);
  CHECK(loss_cc(a, b).item() == 3.0);
  // Q={0}, C={0,2}: 0 + 2 + 0 = 2; swapped: 2 + 0 + 4 = 6.
  CHECK(loss_cc(a, two).item() == 2.0);
  CHECK(loss_cc(two, a).item() == 6.0);
  CHECK_THROWS_AS(loss_nn(t.constant(Matrix(0, 3)), a), Error);
}

TEST_CASE("max nearest-neighbor loss dominates the mean") {
  Rng rng(1);
  for (int i = 0; i < 100; ++i) {
    Tape t;
    Var x = t.constant(random_points(rng, 1 + static_cast<Index>(rng.index(10))));
    Var y = t.constant(random_points(rng, 1 + static_cast<Index>(rng.index(10))));
    CHECK(loss_mn(x, y).item() >= loss_nn(x, y).item());
  }
}

TEST_CASE("adding a point never increases coverage loss") {
  Rng rng(2);
  for (int i = 0; i < 100; ++i) {
    Tape t;
    const Matrix c = random_points(rng, 8);
    const Matrix q = random_points(rng, 5);
    Matrix q2(6, 3);
    q2 << q, random_points(rng, 1);
    CHECK(loss_nn(t.constant(c), t.constant(q2)).item() <= loss_nn(t.constant(c), t.constant(q)).item());
  }
}

TEST_CASE("projection and sampling losses") {
  Tape t;
  CHECK(projection_loss(t.scalar(1.0)).item() == 1.0);
  CHECK(projection_loss(t.scalar(0.5)).item() == 0.25);
  const Var a = t.constant(rows({{0, 0, 0}}));
  const Var b = t.constant(rows({{1, 0, 0}}));
  CHECK(sample_loss(a, b, t.scalar(1.0), 10.0).item() == 31.0);
  CHECK(sample_loss(a, a, t.scalar(1e-4), 10.0).item() == doctest::Approx(1e-8));
}

TEST_CASE("soft projection weights") {
  PointCloud cloud(2, 3);
  cloud << 0.01, 0, 0, 0.02, 0, 0;
  Tape t;
  const SoftProjection sp = soft_project(t, t.constant(Matrix::Zero(1, 3)), cloud, t.scalar(0.02), 2);
  const double w1 = std::exp(-0.25) / (std::exp(-0.25) + std::exp(-1.0));
  CHECK(sp.weights.value()(0, 0) == doctest::Approx(w1).epsilon(1e-12));
  CHECK(sp.weights.value()(0, 0) == doctest::Approx(0.6792).epsilon(1e-4));

  PointCloud square(4, 3);
  square << 1, 0, 0, 0, 1, 0, -1, 0, 0, 0, -1, 0;
  Tape t2;
  const SoftProjection c = soft_project(t2, t2.constant(Matrix::Zero(1, 3)), square, t2.scalar(0.7), 4);
  CHECK(c.points.value().norm() < 1e-15);

  CHECK_THROWS_AS(soft_project(t2, t2.constant(Matrix::Zero(1, 3)), square, t2.scalar(0.7), 5), Error);
}

TEST_CASE("soft projection collapses onto the nearest point at low temperature") {
  Rng rng(3);
  int kept = 0;
  while (kept < 200) {
    const PointCloud cloud = random_points(rng, 64);
    const Matrix q = random_points(rng, 1);
    const Eigen::VectorXd d = (cloud.rowwise() - q.row(0)).rowwise().norm();
    const Index nearest = hard_sample(q, cloud)[0];
    bool separated = true;
    for (Index j = 0; j < cloud.rows(); ++j) separated = separated && (j == nearest || d(j) - d(nearest) >= 1e-3);
    if (!separated) continue;
    ++kept;
    Tape t;
    const SoftProjection sp = soft_project(t, t.constant(q), cloud, t.scalar(1e-3), 10);
    CHECK((sp.points.value().row(0) - cloud.row(nearest)).norm() <= 1e-6);
    CHECK(std::abs(sp.weights.value().sum() - 1.0) <= 1e-12);
    CHECK(sp.weights.value().minCoeff() >= 0.0);
  }
}

TEST_CASE("hard sampling") {
  PointCloud cloud(3, 3);
  cloud << 0, 0, 0, 1, 0, 0, 2, 0, 0;
  Matrix q(3, 3);
  q << 1, 0, 0, 0.5, 0, 0, 1.9, 0, 0;
  CHECK(hard_sample(q, cloud) == IndexList{1, 0, 2});
}

TEST_CASE("farthest point sampling") {
  PointCloud line(4, 3);
  line << 0, 0, 0, 1, 0, 0, 2, 0, 0, 10, 0, 0;
  CHECK(fps(line, 2, 0) == IndexList{0, 3});
  CHECK(fps(line, 1, 2) == IndexList{2});
  IndexList all = fps(line, 4, 0);
  std::sort(all.begin(), all.end());
  CHECK(all == IndexList{0, 1, 2, 3});
  CHECK_THROWS_AS(fps(line, 5, 0), Error);

  PointCloud dup(5, 3);
  dup << 0, 0, 0, 0, 0, 0, 0, 0, 0, 1, 0, 0, 1, 0, 0;
  IndexList d = fps(dup, 5, 0);
  std::sort(d.begin(), d.end());
  CHECK(d == IndexList{0, 1, 2, 3, 4});
  Rng rng(4);
  const PointCloud r = random_points(rng, 100);
  CHECK(fps(r, 17, 3) == fps(r, 17, 3));
}

TEST_CASE("visible contacts") {
  PointCloud cloud(2, 3);
  cloud << 0, 0, 0, 0.1, 0, 0;
  const Grasp7 on{Vec3(0, 0, 0), Vec3(0.1, 0, 0), 1.0};
  const Grasp7 off{Vec3(0, 0, 0.05), Vec3(0.1, 0, 0.0049), 1.0};
  CHECK(visible_contacts({on}, cloud, 0.005).size() == 2);
  const auto v = visible_contacts({off}, cloud, 0.005);
  REQUIRE(v.size() == 1);
  CHECK(v[0] == off.c2);

  Rng rng(5);
  const PointCloud big = random_points(rng, 60);
  std::vector<Grasp7> gs;
  for (int i = 0; i < 40; ++i) gs.push_back({random_points(rng, 1).row(0).transpose(), random_points(rng, 1).row(0).transpose(), 0.5});
  std::size_t brute = 0;
  for (const auto& g : gs) {
    for (const Vec3* c : {&g.c1, &g.c2}) {
      bool near = false;
      for (Index i = 0; i < big.rows(); ++i) near = near || (big.row(i).transpose() - *c).norm() <= 0.005;
      brute += near;
    }
  }
  CHECK(visible_contacts(gs, big, 0.005).size() == brute);
}

TEST_CASE("generator") {
  ParameterSet ps;
  Rng rng(6);
  SamplerConfig cfg;
  cfg.num_points = 8;
  const Sampler s = init_sampler(ps, cfg, 16, rng);
  zero_layer(ps, s.generator.layers.back());
  Tape t;
  CHECK(generate(t, ps, s, t.constant(Matrix::Zero(1, 16)), Vec3::Zero()).value() == Matrix::Zero(8, 3));

  ParameterSet ps2;
  Rng rng2(7);
  const Sampler s2 = init_sampler(ps2, cfg, 16, rng2);
  Matrix g(1, 16);
  for (Index i = 0; i < 16; ++i) g(0, i) = rng2.uniform(0, 1);
  Tape t2;
  const Matrix q1 = generate(t2, ps2, s2, t2.constant(g), Vec3(0.1, 0.2, 0)).value();
  CHECK(q1 == generate(t2, ps2, s2, t2.constant(g), Vec3(0.1, 0.2, 0)).value());
  CHECK(q1.rows() == 8);

  ScalarFunction f = [&](Tape& tp, const ParameterSet& p) {
    return mean(generate(tp, p, s2, tp.constant(g), Vec3::Zero()));
  };
  CHECK(finite_difference_check(f, ps2, {1e-6, 1e-5, 1e-4}).max_rel_error <= 1e-5);
}

TEST_CASE("temperature is floored") {
  ParameterSet ps;
  Rng rng(8);
  const Sampler s = init_sampler(ps, SamplerConfig{}, 4, rng);
  CHECK(ps[s.temperature].value(0, 0) == 1.0);
  ps[s.temperature].value(0, 0) = -3.0;
  clamp_temperature(ps, s);
  CHECK(ps[s.temperature].value(0, 0) == 1e-4);
}

TEST_CASE("sampling losses match finite differences") {
  for (std::uint64_t s = 0; s < 20; ++s) {
    Rng rng(s);
    ParameterSet ps;
    ps.add("q", random_points(rng, 6));
    ps.add("c", random_points(rng, 9));
    ps.add("t", Matrix::Constant(1, 1, rng.uniform(0.1, 1.0)));
    ScalarFunction f = [](Tape& t, const ParameterSet& p) {
      return sample_loss(t.param(p, 0), t.param(p, 1), t.param(p, 2), 10.0);
    };
    CHECK(finite_difference_check(f, ps, 1e-6).max_rel_error <= 1e-5);
  }
}
