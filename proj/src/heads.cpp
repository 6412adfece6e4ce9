#include "l2g/heads.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace l2g {

using diff::Index;
using diff::Matrix;
using diff::Var;

Heads init_heads(diff::ParameterSet& params, const HeadsConfig& cfg, Index feature_dim, Rng& rng) {
  Heads h;
  h.config = cfg;
  std::vector<Index> widths = cfg.hidden;
  widths.push_back(4);
  h.regressor = make_mlp(params, "heads.regressor", feature_dim + 3, widths, rng, false);
  h.embed = make_dense(params, "heads.embed", 4, feature_dim, rng);
  widths.back() = 1;
  h.classifier = make_mlp(params, "heads.classifier", feature_dim, widths, rng, false);
  return h;
}

Regression regress(diff::Tape& tape, const diff::ParameterSet& params, const Heads& heads, Var features,
                   Var c1, const Vec3& origin) {
  const double s = heads.config.length_scale;
  Var local = diff::scale(diff::add_rowwise(c1, tape.constant(-origin.transpose())), 1.0 / s);
  Var raw = apply(tape, params, heads.regressor, diff::concat_cols(features, local));
  Regression out;
  out.c2 = c1 + diff::scale(diff::slice_cols(raw, 0, 3), s);
  out.phi = diff::scale(diff::sigmoid(diff::slice_cols(raw, 3, 1)), std::numbers::pi);
  return out;
}

Var classify(diff::Tape& tape, const diff::ParameterSet& params, const Heads& heads, Var features, Var c1,
             Var c2, Var phi) {
  const double s = heads.config.length_scale;
  Var grasp = diff::concat_cols(diff::scale(c2 - c1, 1.0 / s), diff::scale(phi, 1.0 / std::numbers::pi));
  Var embedded = diff::relu(apply(tape, params, heads.embed, grasp));
  Var logit = apply(tape, params, heads.classifier, features + embedded);
  return diff::sigmoid(logit);
}

std::size_t match_ground_truth(const Vec3& c1, const std::vector<Grasp7>& positives) {
  if (positives.empty()) throw Error(ErrorKind::EmptyGroundTruth, "no positive grasps to match");
  std::size_t best = 0;
  double best_d = (positives[0].c1 - c1).squaredNorm();
  for (std::size_t i = 1; i < positives.size(); ++i) {
    const double d = (positives[i].c1 - c1).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

namespace {

Var row_norm(Var a, double floor) {
  return diff::sqrt(diff::clamp(diff::row_sum(diff::square(a)), floor * floor,
                                std::numeric_limits<double>::infinity()));
}

Var normalize_rows(diff::Tape& tape, Var a, double floor) {
  return diff::mul_colwise(a, diff::cwise_quotient(tape.scalar(1.0), row_norm(a, floor)));
}

}  // namespace

Var regression_loss(diff::Tape& tape, Var c1, Var c2, Var phi, const std::vector<GraspPose>& matched,
                    double lambda) {
  const Index m = c1.rows();
  if (m < 1) throw Error(ErrorKind::LengthMismatch, "regression_loss needs at least one prediction");
  if (static_cast<Index>(matched.size()) != m || c2.rows() != m || phi.rows() != m) {
    throw Error(ErrorKind::LengthMismatch, "predictions and matched ground truth differ in length");
  }
  Matrix centers(m, 3), a_gt(m, 3), y_gt(m, 3), v_gt(m, 3), mask(m, 1);
  for (Index j = 0; j < m; ++j) {
    const auto& g = matched[static_cast<std::size_t>(j)];
    const Mat3 r = g.u.toRotationMatrix();
    centers.row(j) = g.x.transpose();
    a_gt.row(j) = r.col(0).transpose();
    y_gt.row(j) = r.col(1).transpose();
    v_gt.row(j) = r.col(2).transpose();
    const double len = (c2.value().row(j) - c1.value().row(j)).norm();
    mask(j, 0) = len >= kMinContactSeparation ? 1.0 : 0.0;
  }

  Var center = diff::scale(c1 + c2, 0.5);
  Var dist = row_norm(center - tape.constant(centers), 1e-9);

  Var a = normalize_rows(tape, c2 - c1, kMinContactSeparation);
  Var up = tape.constant(Matrix::Zero(m, 3).rowwise() + Eigen::RowVector3d(0, 0, 1));
  Var h = normalize_rows(tape, diff::cross_rows(up, a), 1e-12);
  Var n = diff::cross_rows(a, h);
  Var v = diff::mul_colwise(h, diff::cos(phi)) - diff::mul_colwise(n, diff::sin(phi));
  Var y = diff::cross_rows(v, a);
  Var trace = diff::row_sum(diff::cwise_product(a, tape.constant(a_gt)) +
                            diff::cwise_product(y, tape.constant(y_gt)) +
                            diff::cwise_product(v, tape.constant(v_gt)));
  Var dot = diff::scale(diff::sqrt(diff::clamp(diff::shift(trace, 1.0), 1e-12, 4.0)), 0.5);
  Var angle = diff::cwise_product(diff::acos(dot), tape.constant(mask));
  return diff::mean(dist + diff::scale(angle, lambda));
}

double regression_loss(const std::vector<GraspPose>& predictions, const std::vector<GraspPose>& matched,
                       double lambda) {
  if (predictions.empty() || predictions.size() != matched.size()) {
    throw Error(ErrorKind::LengthMismatch, "predictions and matched ground truth differ in length");
  }
  double total = 0.0;
  for (std::size_t j = 0; j < predictions.size(); ++j) {
    const double d = std::min(std::abs(predictions[j].u.coeffs().dot(matched[j].u.coeffs())), 1.0 - 1e-12);
    total += center_distance(predictions[j], matched[j]) + lambda * std::acos(d);
  }
  return total / static_cast<double>(predictions.size());
}

Var classification_loss(Var scores, const std::vector<int>& labels) {
  const Index m = scores.rows();
  if (m < 1 || static_cast<Index>(labels.size()) != m || scores.cols() != 1) {
    throw Error(ErrorKind::LengthMismatch, "scores and labels differ in length");
  }
  diff::Tape& tape = *scores.tape();
  Matrix l(m, 1);
  for (Index j = 0; j < m; ++j) l(j, 0) = labels[static_cast<std::size_t>(j)] ? 1.0 : 0.0;
  Var s = diff::clamp(scores, 1e-9, 1.0 - 1e-9);
  Var pos = diff::cwise_product(tape.constant(l), diff::log(s));
  Var neg = diff::cwise_product(tape.constant((1.0 - l.array()).matrix()), diff::log(diff::shift(-s, 1.0)));
  return -diff::mean(pos + neg);
}

std::vector<int> assign_labels(const std::vector<Grasp7>& predictions, const std::vector<Grasp7>& positives,
                               double tol_x, double tol_theta) {
  std::vector<GraspPose> gt;
  gt.reserve(positives.size());
  for (const auto& g : positives) gt.push_back(grasp7_to_pose(canonicalize(g)));
  std::vector<int> labels;
  labels.reserve(predictions.size());
  for (const auto& p : predictions) {
    if (grasp_width(p) < kMinContactSeparation) {
      labels.push_back(0);
      continue;
    }
    const GraspPose pose = grasp7_to_pose(canonicalize(p));
    int hit = 0;
    for (const auto& g : gt) {
      if (grasp_match(pose, g, tol_x, tol_theta)) {
        hit = 1;
        break;
      }
    }
    labels.push_back(hit);
  }
  return labels;
}

std::vector<Grasp7> with_swapped_contacts(const std::vector<Grasp7>& positives) {
  std::vector<Grasp7> out = positives;
  for (const auto& g : positives) out.push_back({g.c2, g.c1, std::numbers::pi - g.phi});
  return out;
}

}  // namespace l2g
