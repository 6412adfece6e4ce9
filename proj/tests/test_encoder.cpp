#include "doctest.h"

#include "l2g/encoder.hpp"

using namespace l2g;
using namespace l2g::diff;

namespace {

PointCloud random_cloud(Rng& rng, Index n) {
  PointCloud p(n, 3);
  for (Index i = 0; i < n; ++i) p.row(i) << rng.uniform(-0.1, 0.1), rng.uniform(-0.1, 0.1), rng.uniform(0.0, 0.1);
  return p;
}

struct Fixture {
  ParameterSet params;
  Encoder encoder;
  explicit Fixture(std::uint64_t seed = 1) {
    Rng rng(seed);
    encoder = init_encoder(params, EncoderConfig{}, rng);
  }
};

}  // namespace

TEST_CASE("single point global feature equals its stage-1 row") {
  Fixture f;
  Rng rng(2);
  Tape t;
  const FeatureBundle b = encode(t, f.params, f.encoder, random_cloud(rng, 1));
  CHECK(b.global.value() == b.stage1.value());
  CHECK(b.per_point.rows() == 1);
  CHECK(b.per_point.cols() == 32);
  CHECK(b.global.cols() == 64);
}

TEST_CASE("global feature is permutation invariant and per-point features are equivariant") {
  Fixture f;
  Rng rng(3);
  const PointCloud cloud = random_cloud(rng, 50);
  IndexList perm(50);
  for (Index i = 0; i < 50; ++i) perm[static_cast<std::size_t>(i)] = i;
  for (Index i = 49; i > 0; --i) std::swap(perm[static_cast<std::size_t>(i)], perm[rng.index(static_cast<std::uint64_t>(i + 1))]);
  const PointCloud shuffled = gather(cloud, perm);

  Tape t1, t2;
  const FeatureBundle a = encode(t1, f.params, f.encoder, cloud);
  const FeatureBundle b = encode(t2, f.params, f.encoder, shuffled);
  CHECK(a.global.value() == b.global.value());
  for (Index i = 0; i < 50; ++i) {
    CHECK((b.per_point.value().row(i) - a.per_point.value().row(perm[static_cast<std::size_t>(i)])).norm() <= 1e-12);
  }
}

TEST_CASE("duplicating every point leaves the global feature unchanged") {
  Fixture f;
  Rng rng(4);
  const PointCloud cloud = random_cloud(rng, 20);
  PointCloud doubled(40, 3);
  doubled << cloud, cloud;
  Tape t1, t2;
  CHECK(encode(t1, f.params, f.encoder, cloud).global.value() ==
        encode(t2, f.params, f.encoder, doubled).global.value());
}

TEST_CASE("initialization is seeded and bounded") {
  Fixture a(9), b(9), c(10);
  bool differs = false;
  for (int i = 0; i < a.params.size(); ++i) {
    CHECK(a.params[i].value == b.params[i].value);
    differs = differs || a.params[i].value != c.params[i].value;
  }
  CHECK(differs);

  ParameterSet ps;
  Rng rng(5);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const Dense d = make_dense(ps, "d" + std::to_string(i), 1, 1, rng);
    worst = std::max(worst, std::abs(ps[d.weight].value(0, 0)));
    CHECK(ps[d.bias].value(0, 0) == 0.0);
  }
  CHECK(worst <= std::sqrt(3.0));
  CHECK(worst > 1.5);
}

TEST_CASE("neighborhood aggregation") {
  Fixture f;
  Rng rng(6);
  const PointCloud cloud = random_cloud(rng, 30);
  Tape t;
  const FeatureBundle b = encode(t, f.params, f.encoder, cloud);
  const Matrix& fp = b.per_point.value();

  Matrix q = cloud.row(7);
  const Neighborhood one = gather_neighborhood_features(t, t.constant(q), cloud, b, 1, 0.1);
  CHECK(one.features.value().leftCols(32) == fp.row(7));
  CHECK(one.features.value().rightCols(3).norm() == 0.0);

  const Neighborhood all = gather_neighborhood_features(t, t.constant(q), cloud, b, 30, 0.1);
  CHECK(all.features.value().leftCols(32) == fp.colwise().maxCoeff());

  CHECK_THROWS_AS(gather_neighborhood_features(t, t.constant(q), cloud, b, 31, 0.1), Error);
}

TEST_CASE("identical features aggregate to that row anywhere") {
  Rng rng(7);
  const PointCloud cloud = random_cloud(rng, 12);
  Tape t;
  FeatureBundle b;
  Matrix rows = Matrix::Ones(12, 4) * 0.25;
  b.per_point = t.constant(rows);
  for (int i = 0; i < 5; ++i) {
    Matrix q(1, 3);
    q << rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1);
    const Neighborhood n = gather_neighborhood_features(t, t.constant(q), cloud, b, 5, 0.1);
    CHECK(n.features.value().leftCols(4) == rows.row(0));
  }
}

TEST_CASE("equidistant neighbors break ties by lower index") {
  PointCloud cloud(4, 3);
  cloud << 1, 0, 0, 0, 1, 0, -1, 0, 0, 0, -1, 0;
  const IndexList idx = nearest_indices(cloud, Vec3::Zero(), 2);
  CHECK(idx == IndexList{0, 1});
  CHECK(nearest_index(cloud, Vec3::Zero()) == 0);
}

TEST_CASE("encoder gradients match finite differences") {
  for (std::uint64_t s = 0; s < 5; ++s) {
    Rng rng(s);
    ParameterSet ps;
    EncoderConfig cfg;
    cfg.stage1 = {6, 8};
    cfg.stage2 = {8, 5};
    const Encoder enc = init_encoder(ps, cfg, rng);
    const PointCloud cloud = random_cloud(rng, 16);
    Matrix w(16, 5);
    for (Index i = 0; i < w.size(); ++i) w.data()[i] = rng.uniform(-1, 1);
    ScalarFunction f = [&](Tape& t, const ParameterSet& p) {
      const FeatureBundle b = encode(t, p, enc, cloud);
      return sum(cwise_product(b.per_point, t.constant(w))) + sum(b.global);
    };
    CHECK(finite_difference_check(f, ps, {1e-6, 1e-5, 1e-4}).max_rel_error <= 1e-5);
  }
}
