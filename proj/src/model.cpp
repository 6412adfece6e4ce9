#include "l2g/model.hpp"

#include <cmath>
#include <iostream>

namespace l2g {

using diff::Index;
using diff::Matrix;
using diff::Var;

const char* to_string(Variant v) {
  switch (v) {
    case Variant::Full: return "full";
    case Variant::NoProj: return "no-proj";
    case Variant::Fps: return "fps";
    case Variant::NoSample: return "no-sample";
  }
  return "unknown";
}

Variant variant_from_string(const std::string& s) {
  if (s == "full") return Variant::Full;
  if (s == "no-proj") return Variant::NoProj;
  if (s == "fps") return Variant::Fps;
  if (s == "no-sample") return Variant::NoSample;
  throw Error(ErrorKind::Config, "unknown variant '" + s + "'");
}

bool uses_sampler(Variant v) { return v == Variant::Full || v == Variant::NoProj; }

TrainingExample make_training_example(std::string id, PointCloud cloud, std::vector<Grasp7> positives,
                                      double eps_vis) {
  TrainingExample ex;
  ex.id = std::move(id);
  ex.contacts = visible_contacts(positives, cloud, eps_vis);
  ex.cloud = std::move(cloud);
  ex.positives = std::move(positives);
  return ex;
}

namespace {

Matrix to_matrix(const std::vector<Vec3>& points) {
  Matrix m(static_cast<Index>(points.size()), 3);
  for (std::size_t i = 0; i < points.size(); ++i) m.row(static_cast<Index>(i)) = points[i].transpose();
  return m;
}

std::vector<Grasp7> rows_to_grasps(const Matrix& c1, const Matrix& c2, const Matrix& phi) {
  std::vector<Grasp7> out;
  out.reserve(static_cast<std::size_t>(c1.rows()));
  for (Index j = 0; j < c1.rows(); ++j) {
    out.push_back({c1.row(j).transpose(), c2.row(j).transpose(), phi(j, 0)});
  }
  return out;
}

}  // namespace

Model::Model(const ModelConfig& cfg) : config_(cfg) {
  Rng rng(derive_seed(cfg.seed, 1));
  encoder_ = init_encoder(params_, cfg.encoder, rng);
  sampler_ = init_sampler(params_, cfg.sampler, cfg.encoder.global_dim(), rng);
  heads_ = init_heads(params_, cfg.heads, cfg.encoder.point_dim() + 3, rng);
}

void Model::after_step() { clamp_temperature(params_, sampler_); }

LossTerms Model::loss(diff::Tape& tape, const TrainingExample& ex) const {
  if (ex.positives.empty()) throw Error(ErrorKind::EmptyGroundTruth, ex.id + " has no positive grasps");
  const FeatureBundle bundle = encode(tape, params_, encoder_, ex.cloud);
  LossTerms terms;
  Var c1;
  Var sample_term;
  if (uses_sampler(config_.variant)) {
    if (ex.contacts.empty()) throw Error(ErrorKind::EmptySet, ex.id + " has no visible contacts");
    Var q = generate(tape, params_, sampler_, bundle.global, bundle.origin);
    Var t = temperature(tape, params_, sampler_);
    c1 = soft_project(tape, q, ex.cloud, t, config_.sampler.k).points;
    Var cc = loss_cc(q, tape.constant(to_matrix(ex.contacts)));
    sample_term = diff::scale(cc, config_.sampler.alpha);
    if (config_.variant == Variant::Full) sample_term = sample_term + projection_loss(t);
    terms.cc = cc.item();
    terms.sample = sample_term.item();
    terms.t = t.item();
  } else {
    c1 = tape.constant(first_contacts(ex.cloud));
  }

  const Neighborhood nb =
      gather_neighborhood_features(tape, c1, ex.cloud, bundle, config_.nn, config_.encoder.length_scale);
  const Regression reg = regress(tape, params_, heads_, nb.features, c1, bundle.origin);

  const std::vector<Grasp7> targets = with_swapped_contacts(ex.positives);
  std::vector<GraspPose> matched;
  matched.reserve(static_cast<std::size_t>(c1.rows()));
  for (Index j = 0; j < c1.rows(); ++j) {
    const std::size_t i = match_ground_truth(c1.value().row(j).transpose(), targets);
    matched.push_back(grasp7_to_pose(targets[i]));
  }
  Var regr = regression_loss(tape, c1, reg.c2, reg.phi, matched, config_.loss.lambda);

  const std::vector<Grasp7> predicted = rows_to_grasps(c1.value(), reg.c2.value(), reg.phi.value());
  const std::vector<int> labels =
      assign_labels(predicted, ex.positives, config_.loss.tol_x, config_.loss.tol_theta);
  Var scores = classify(tape, params_, heads_, nb.features, c1, reg.c2, reg.phi);
  Var cls = classification_loss(scores, labels);

  terms.total = sample_term.valid() ? sample_term + regr + cls : regr + cls;
  terms.regr = regr.item();
  terms.cls = cls.item();
  double pos = 0.0;
  for (int l : labels) pos += l;
  terms.positive_fraction = pos / static_cast<double>(labels.size());
  return terms;
}

Eigen::MatrixXd Model::sample_points(const PointCloud& cloud) const {
  if (!uses_sampler(config_.variant)) {
    throw Error(ErrorKind::Runtime, std::string("variant ") + to_string(config_.variant) + " has no sampler");
  }
  diff::Tape tape;
  const FeatureBundle bundle = encode(tape, params_, encoder_, cloud);
  return generate(tape, params_, sampler_, bundle.global, bundle.origin).value();
}

Eigen::MatrixXd Model::first_contacts(const PointCloud& cloud) const {
  switch (config_.variant) {
    case Variant::Full:
    case Variant::NoProj:
      return gather(cloud, hard_sample(sample_points(cloud), cloud));
    case Variant::Fps:
      return gather(cloud, fps(cloud, std::min(config_.sampler.num_points, cloud.rows()), 0));
    case Variant::NoSample:
      return cloud;
  }
  return cloud;
}

double Model::contact_loss(const TrainingExample& ex) const {
  if (ex.contacts.empty()) throw Error(ErrorKind::EmptySet, ex.id + " has no visible contacts");
  diff::Tape tape;
  Matrix points;
  switch (config_.variant) {
    case Variant::Full:
    case Variant::NoProj: points = sample_points(ex.cloud); break;
    default: points = first_contacts(ex.cloud); break;
  }
  return loss_cc(tape.constant(points), tape.constant(to_matrix(ex.contacts))).item();
}

std::vector<GraspPrediction> Model::predict(const PointCloud& cloud) const {
  diff::Tape tape;
  const FeatureBundle bundle = encode(tape, params_, encoder_, cloud);
  Var c1 = tape.constant(first_contacts(cloud));
  const Neighborhood nb =
      gather_neighborhood_features(tape, c1, cloud, bundle, config_.nn, config_.encoder.length_scale);
  const Regression reg = regress(tape, params_, heads_, nb.features, c1, bundle.origin);
  Var scores = classify(tape, params_, heads_, nb.features, c1, reg.c2, reg.phi);
  const std::vector<Grasp7> grasps = rows_to_grasps(c1.value(), reg.c2.value(), reg.phi.value());
  std::vector<GraspPrediction> out;
  out.reserve(grasps.size());
  for (std::size_t j = 0; j < grasps.size(); ++j) {
    out.push_back({grasps[j], scores.value()(static_cast<Index>(j), 0)});
  }
  return out;
}

std::vector<StepRecord> train(Model& model, const std::vector<TrainingExample>& examples, const TrainConfig& cfg,
                              TrainState& state, bool verbose) {
  const bool need_contacts = uses_sampler(model.config().variant);
  std::vector<std::size_t> usable;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const auto& ex = examples[i];
    if (ex.positives.empty() || (need_contacts && ex.contacts.empty())) {
      std::cerr << "warning: skipping " << ex.id << " (no " << (ex.positives.empty() ? "positives" : "visible contacts")
                << ")\n";
      continue;
    }
    usable.push_back(i);
  }
  std::vector<StepRecord> trace;
  if (cfg.steps <= 0) return trace;
  if (usable.empty()) throw Error(ErrorKind::Runtime, "no usable training examples");

  const int batch = std::max(cfg.batch_size, 1);
  std::vector<std::size_t> order;
  std::size_t cursor = 0;
  std::uint64_t epoch = 0;
  auto next_example = [&]() {
    if (cursor == order.size()) {
      order = usable;
      Rng rng(derive_seed(cfg.seed, 1000 + epoch++));
      for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);
      cursor = 0;
    }
    return order[cursor++];
  };

  for (std::int64_t s = 0; s < cfg.steps; ++s) {
    diff::Gradients grads = diff::zero_gradients(model.params());
    StepRecord rec;
    rec.step = state.step;
    for (int b = 0; b < batch; ++b) {
      const TrainingExample& ex = examples[next_example()];
      diff::Tape tape;
      const LossTerms terms = model.loss(tape, ex);
      const double total = terms.total.item();
      if (!std::isfinite(total)) {
        throw Error(ErrorKind::Runtime, "non-finite loss at step " + std::to_string(state.step) + " (" + ex.id + ")");
      }
      diff::accumulate(grads, tape.backward(terms.total), 1.0 / batch);
      rec.sample = b == 0 ? ex.id : rec.sample + "+" + ex.id;
      rec.sample_loss += terms.sample / batch;
      rec.cc += terms.cc / batch;
      rec.regr += terms.regr / batch;
      rec.cls += terms.cls / batch;
      rec.total += total / batch;
      rec.t = terms.t;
    }
    diff::optimizer_step(model.params(), grads, cfg.optimizer, state.optimizer);
    model.after_step();
    ++state.step;
    trace.push_back(rec);
    if (verbose && (state.step % 100 == 0 || s + 1 == cfg.steps)) {
      std::cerr << "step " << state.step << " total " << rec.total << " cc " << rec.cc << " regr " << rec.regr
                << " cls " << rec.cls << " t " << rec.t << "\n";
    }
  }
  return trace;
}

}  // namespace l2g
