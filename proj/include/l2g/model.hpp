#pragma once

// End-to-end grasp proposal model: encoder -> contact sampler -> regressor
// and classifier, trained under L = L_sample + L_regr + L_class.

#include <cstdint>
#include <string>
#include <vector>

#include "l2g/encoder.hpp"
#include "l2g/heads.hpp"
#include "l2g/sampler.hpp"

namespace l2g {

/// full: learned sampler with projection loss; no_proj: projection loss off;
/// fps: farthest point sampling picks c1; no_sample: every cloud point is a c1.
enum class Variant { Full, NoProj, Fps, NoSample };

const char* to_string(Variant v);
Variant variant_from_string(const std::string& s);
bool uses_sampler(Variant v);

struct ModelConfig {
  EncoderConfig encoder;
  SamplerConfig sampler;
  HeadsConfig heads;
  LossConfig loss;
  diff::Index nn = 32;
  double eps_vis = 0.005;
  Variant variant = Variant::Full;
  std::uint64_t seed = 0;
};

struct TrainingExample {
  std::string id;
  PointCloud cloud;
  std::vector<Grasp7> positives;
  std::vector<Vec3> contacts;  // visible contacts of the positives
};

TrainingExample make_training_example(std::string id, PointCloud cloud, std::vector<Grasp7> positives,
                                      double eps_vis);

struct LossTerms {
  diff::Var total;
  double sample = 0.0;  // alpha * L_cc (+ t^2)
  double cc = 0.0;
  double regr = 0.0;
  double cls = 0.0;
  double t = 0.0;
  double positive_fraction = 0.0;
};

class Model {
 public:
  explicit Model(const ModelConfig& cfg);

  const ModelConfig& config() const { return config_; }
  diff::ParameterSet& params() { return params_; }
  const diff::ParameterSet& params() const { return params_; }
  const Sampler& sampler() const { return sampler_; }

  /// Records the training objective for one example on `tape`.
  LossTerms loss(diff::Tape& tape, const TrainingExample& ex) const;

  /// Inference: c1 are cloud points (hard-sampled, FPS or all), one grasp each.
  std::vector<GraspPrediction> predict(const PointCloud& cloud) const;

  /// Generated contact points Q (M x 3) for a cloud; sampler variants only.
  Eigen::MatrixXd sample_points(const PointCloud& cloud) const;

  /// L_cc between the variant's contact points and the visible contacts.
  double contact_loss(const TrainingExample& ex) const;

  void after_step();

 private:
  Eigen::MatrixXd first_contacts(const PointCloud& cloud) const;

  ModelConfig config_;
  diff::ParameterSet params_;
  Encoder encoder_;
  Sampler sampler_;
  Heads heads_;
};

struct StepRecord {
  std::int64_t step = 0;
  std::string sample;
  double sample_loss = 0.0;
  double cc = 0.0;
  double regr = 0.0;
  double cls = 0.0;
  double t = 0.0;
  double total = 0.0;
};

struct TrainConfig {
  std::int64_t steps = 2000;
  diff::OptimizerConfig optimizer;
  std::uint64_t seed = 0;
  int batch_size = 1;
};

struct TrainState {
  diff::OptimizerState optimizer;
  std::int64_t step = 0;
};

/// Joint optimization over the examples; one shuffled pass per epoch.
/// Examples without visible contacts (sampler variants) or without positives
/// are skipped with a warning on stderr. Throws Runtime on a non-finite loss.
std::vector<StepRecord> train(Model& model, const std::vector<TrainingExample>& examples,
                              const TrainConfig& cfg, TrainState& state, bool verbose = false);

}  // namespace l2g
