#pragma once

// Grasp regressor, grasp classifier, ground-truth matching and their losses.

#include <vector>

#include "l2g/diffcore.hpp"
#include "l2g/geometry.hpp"
#include "l2g/layers.hpp"
#include "l2g/pointcloud.hpp"

namespace l2g {

struct GraspPrediction {
  Grasp7 grasp;
  double score = 0.5;
};

struct LabeledGrasp {
  Grasp7 grasp;
  int label = 0;
};

struct LossConfig {
  double lambda = 0.1;
  double alpha = 10.0;
  double tol_x = kMatchTolX;
  double tol_theta = kMatchTolTheta;
};

struct HeadsConfig {
  std::vector<diff::Index> hidden = {64, 64};
  /// Regressed offsets are multiplied by this length (m).
  double length_scale = 0.1;
};

struct Heads {
  HeadsConfig config;
  Mlp regressor;   // [feature | c1] -> 4
  Dense embed;     // (c2, phi) -> feature width
  Mlp classifier;  // feature -> 1
};

Heads init_heads(diff::ParameterSet& params, const HeadsConfig& cfg, diff::Index feature_dim, Rng& rng);

struct Regression {
  diff::Var c2;   // M x 3
  diff::Var phi;  // M x 1, in (0, pi)
};

/// c2 = c1 + offset, phi = pi * sigmoid(raw). c1 enters as (c1 - origin) / length_scale.
Regression regress(diff::Tape& tape, const diff::ParameterSet& params, const Heads& heads,
                   diff::Var features, diff::Var c1, const Vec3& origin);

/// Scores in (0, 1). (c2, phi) is embedded relative to c1, summed with the
/// neighborhood feature, then passed through the classifier MLP and a sigmoid.
diff::Var classify(diff::Tape& tape, const diff::ParameterSet& params, const Heads& heads,
                   diff::Var features, diff::Var c1, diff::Var c2, diff::Var phi);

/// Positive grasp whose c1 is nearest to c1 (ties to the lower index).
std::size_t match_ground_truth(const Vec3& c1, const std::vector<Grasp7>& positives);

/// Differentiable mean of ||x - x+|| + lambda * arccos|<u, u+>| over rows.
/// |<u, u+>| is evaluated as sqrt(1 + tr(R^T R+)) / 2 so the gripper frame
/// needs no quaternion extraction. Rows with ||c2 - c1|| < 1e-6 contribute the
/// center term only.
diff::Var regression_loss(diff::Tape& tape, diff::Var c1, diff::Var c2, diff::Var phi,
                          const std::vector<GraspPose>& matched, double lambda);

/// Same quantity on explicit poses (quaternion route).
double regression_loss(const std::vector<GraspPose>& predictions, const std::vector<GraspPose>& matched,
                       double lambda);

/// Binary cross-entropy with scores clamped to [1e-9, 1 - 1e-9].
diff::Var classification_loss(diff::Var scores, const std::vector<int>& labels);

/// 1 iff the canonicalized prediction matches some positive within the
/// tolerances; degenerate predictions are labeled 0.
std::vector<int> assign_labels(const std::vector<Grasp7>& predictions, const std::vector<Grasp7>& positives,
                               double tol_x = kMatchTolX, double tol_theta = kMatchTolTheta);

/// Positives plus their contact-swapped twins (c2, c1, pi - phi), so a sampled
/// contact can be matched to either finger of an annotated grasp.
std::vector<Grasp7> with_swapped_contacts(const std::vector<Grasp7>& positives);

}  // namespace l2g
