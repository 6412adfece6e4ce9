#pragma once

// Contact point sampler: a fully connected generator maps the global feature
// to M points, which are soft-projected onto the observed cloud. Also hosts
// the closeness-coverage losses and the non-learned FPS baseline.

#include <vector>

#include "l2g/diffcore.hpp"
#include "l2g/layers.hpp"
#include "l2g/pointcloud.hpp"

namespace l2g {

struct SamplerConfig {
  diff::Index num_points = 64;  // M
  diff::Index k = 10;           // soft-projection neighborhood
  double alpha = 10.0;
  std::vector<diff::Index> hidden = {64, 128, 256};
  double t_init = 1.0;
  double t_min = 1e-4;
  /// Generator outputs are multiplied by this length (m).
  double length_scale = 0.1;
};

struct Sampler {
  SamplerConfig config;
  Mlp generator;  // hidden widths followed by a 3M output layer
  int temperature = -1;
};

Sampler init_sampler(diff::ParameterSet& params, const SamplerConfig& cfg, diff::Index global_dim,
                     Rng& rng);

/// M x 3 points: generator(F_s) reshaped row-major, scaled, offset by origin.
diff::Var generate(diff::Tape& tape, const diff::ParameterSet& params, const Sampler& sampler,
                   diff::Var global_feature, const Vec3& origin);

/// Learnable temperature floored at t_min.
diff::Var temperature(diff::Tape& tape, const diff::ParameterSet& params, const Sampler& sampler);

/// Keeps the stored temperature at or above t_min after an optimizer step.
void clamp_temperature(diff::ParameterSet& params, const Sampler& sampler);

// Losses on point sets (rows). All raise EmptySet on empty input.
diff::Var loss_nn(diff::Var x, diff::Var y);
diff::Var loss_mn(diff::Var x, diff::Var y);
diff::Var loss_cc(diff::Var q, diff::Var c);
diff::Var projection_loss(diff::Var t);
diff::Var sample_loss(diff::Var q, diff::Var c, diff::Var t, double alpha, bool with_projection = true);

struct SoftProjection {
  diff::Var points;                  // R, M x 3
  diff::Var weights;                 // M x k, rows sum to 1
  std::vector<IndexList> neighbors;  // fixed from the current Q
};

/// r = sum_i w_i p_i over the k nearest cloud points, w = softmax(-d^2 / t^2).
/// Neighbor membership is recomputed from the current values of q and is not
/// differentiated; the weights are.
SoftProjection soft_project(diff::Tape& tape, diff::Var q, const PointCloud& cloud, diff::Var t,
                            diff::Index k);

/// Nearest cloud point per row of q (ties to the lower index).
IndexList hard_sample(const Eigen::MatrixXd& q, const PointCloud& cloud);

/// Farthest point sampling from seed_index; ties go to the lower index.
IndexList fps(const PointCloud& cloud, diff::Index m, diff::Index seed_index = 0);

/// Contacts (c1 and c2) of positive grasps lying within eps_vis of some
/// observed point. May be empty.
std::vector<Vec3> visible_contacts(const std::vector<Grasp7>& positives, const PointCloud& cloud,
                                   double eps_vis = 0.005);

}  // namespace l2g
