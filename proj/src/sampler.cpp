#include "l2g/sampler.hpp"

#include <algorithm>
#include <limits>

namespace l2g {

using diff::Index;
using diff::Matrix;
using diff::Var;

Sampler init_sampler(diff::ParameterSet& params, const SamplerConfig& cfg, Index global_dim, Rng& rng) {
  if (cfg.num_points < 1 || cfg.k < 1) throw Error(ErrorKind::InvalidDimensions, "sampler M and k must be >= 1");
  if (!(cfg.t_init > 0.0) || !(cfg.t_min > 0.0)) {
    throw Error(ErrorKind::InvalidDimensions, "sampler temperature must be positive");
  }
  Sampler s;
  s.config = cfg;
  std::vector<Index> widths = cfg.hidden;
  widths.push_back(3 * cfg.num_points);
  s.generator = make_mlp(params, "sampler.generator", global_dim, widths, rng, false);
  s.temperature = params.add("sampler.t", Matrix::Constant(1, 1, std::max(cfg.t_init, cfg.t_min)));
  return s;
}

Var generate(diff::Tape& tape, const diff::ParameterSet& params, const Sampler& sampler,
             Var global_feature, const Vec3& origin) {
  const Index m = sampler.config.num_points;
  Var raw = apply(tape, params, sampler.generator, global_feature);
  Var q = diff::scale(diff::reshape(raw, m, 3), sampler.config.length_scale);
  return diff::add_rowwise(q, tape.constant(origin.transpose()));
}

Var temperature(diff::Tape& tape, const diff::ParameterSet& params, const Sampler& sampler) {
  return diff::clamp(tape.param(params, sampler.temperature), sampler.config.t_min,
                     std::numeric_limits<double>::infinity());
}

void clamp_temperature(diff::ParameterSet& params, const Sampler& sampler) {
  double& t = params[sampler.temperature].value(0, 0);
  t = std::max(t, sampler.config.t_min);
}

namespace {

void require_nonempty(Var a, const char* what) {
  if (a.rows() == 0) throw Error(ErrorKind::EmptySet, std::string(what) + " is empty");
}

}  // namespace

Var loss_nn(Var x, Var y) {
  require_nonempty(x, "X");
  require_nonempty(y, "Y");
  return diff::mean(diff::row_min(diff::sqdist(x, y)));
}

Var loss_mn(Var x, Var y) {
  require_nonempty(x, "X");
  require_nonempty(y, "Y");
  return diff::max(diff::row_min(diff::sqdist(x, y)));
}

Var loss_cc(Var q, Var c) {
  require_nonempty(q, "Q");
  require_nonempty(c, "C");
  Var d = diff::sqdist(q, c);
  Var q_to_c = diff::row_min(d);
  Var c_to_q = diff::col_min(d);
  return diff::mean(q_to_c) + diff::mean(c_to_q) + diff::max(q_to_c);
}

Var projection_loss(Var t) { return diff::square(t); }

Var sample_loss(Var q, Var c, Var t, double alpha, bool with_projection) {
  Var cc = diff::scale(loss_cc(q, c), alpha);
  return with_projection ? cc + projection_loss(t) : cc;
}

SoftProjection soft_project(diff::Tape& tape, Var q, const PointCloud& cloud, Var t, Index k) {
  if (k > cloud.rows()) {
    throw Error(ErrorKind::NeighborhoodTooLarge,
                "k=" + std::to_string(k) + " exceeds N=" + std::to_string(cloud.rows()));
  }
  if (k < 1) throw Error(ErrorKind::NeighborhoodTooLarge, "k must be >= 1");
  const Matrix& qv = q.value();
  const Index m = qv.rows();
  SoftProjection out;
  IndexList repeat;
  repeat.reserve(static_cast<std::size_t>(m * k));
  Matrix neighbors(m * k, 3);
  for (Index j = 0; j < m; ++j) {
    IndexList idx = nearest_indices(cloud, qv.row(j).transpose(), k);
    for (Index i = 0; i < k; ++i) {
      repeat.push_back(j);
      neighbors.row(j * k + i) = cloud.row(idx[static_cast<std::size_t>(i)]);
    }
    out.neighbors.push_back(std::move(idx));
  }
  Var p = tape.constant(neighbors);
  Var diffs = diff::gather_rows(q, repeat) - p;
  Var d2 = diff::reshape(diff::row_sum(diff::square(diffs)), m, k);
  Var logits = diff::neg(diff::cwise_quotient(d2, diff::square(t)));
  // Row-wise shift for a stable softmax; the shift cancels in the weights.
  const Matrix shift = logits.value().rowwise().maxCoeff() * Matrix::Ones(1, k);
  Var e = diff::exp(logits - tape.constant(shift));
  Var inv = diff::cwise_quotient(tape.scalar(1.0), diff::row_sum(e));
  out.weights = diff::mul_colwise(e, inv);
  Matrix blocks = Matrix::Zero(m, m * k);
  for (Index j = 0; j < m; ++j) blocks.block(j, j * k, 1, k).setOnes();
  Var weighted = diff::mul_colwise(p, diff::reshape(out.weights, m * k, 1));
  out.points = diff::matmul(tape.constant(std::move(blocks)), weighted);
  return out;
}

IndexList hard_sample(const Eigen::MatrixXd& q, const PointCloud& cloud) {
  IndexList out;
  out.reserve(static_cast<std::size_t>(q.rows()));
  for (Index j = 0; j < q.rows(); ++j) out.push_back(nearest_index(cloud, q.row(j).transpose()));
  return out;
}

IndexList fps(const PointCloud& cloud, Index m, Index seed_index) {
  const Index n = cloud.rows();
  if (m > n) {
    throw Error(ErrorKind::TooManyPoints, "M=" + std::to_string(m) + " exceeds N=" + std::to_string(n));
  }
  if (seed_index < 0 || seed_index >= n) throw Error(ErrorKind::TooManyPoints, "seed index out of range");
  IndexList out;
  if (m <= 0) return out;
  std::vector<double> dist(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
  std::vector<char> chosen(static_cast<std::size_t>(n), 0);
  Index current = seed_index;
  out.push_back(current);
  chosen[static_cast<std::size_t>(current)] = 1;
  while (static_cast<Index>(out.size()) < m) {
    Index best = -1;
    double best_d = -1.0;
    for (Index i = 0; i < n; ++i) {
      double& d = dist[static_cast<std::size_t>(i)];
      d = std::min(d, (cloud.row(i) - cloud.row(current)).squaredNorm());
      if (!chosen[static_cast<std::size_t>(i)] && d > best_d) {
        best_d = d;
        best = i;
      }
    }
    current = best;
    chosen[static_cast<std::size_t>(current)] = 1;
    out.push_back(current);
  }
  return out;
}

std::vector<Vec3> visible_contacts(const std::vector<Grasp7>& positives, const PointCloud& cloud,
                                   double eps_vis) {
  std::vector<Vec3> out;
  if (cloud.rows() == 0) return out;
  const double eps2 = eps_vis * eps_vis;
  for (const auto& g : positives) {
    for (const Vec3* c : {&g.c1, &g.c2}) {
      const Eigen::Index i = nearest_index(cloud, *c);
      if ((cloud.row(i).transpose() - *c).squaredNorm() <= eps2) out.push_back(*c);
    }
  }
  return out;
}

}  // namespace l2g
