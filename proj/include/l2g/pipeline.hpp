#pragma once

// Dataset-level training, evaluation and ablation shared by the command line
// and the acceptance checks.

#include <optional>
#include <string>
#include <vector>

#include "l2g/checkpoint.hpp"
#include "l2g/config.hpp"
#include "l2g/dataset.hpp"
#include "l2g/eval.hpp"

namespace l2g {

struct LoadedSample {
  SampleRecord record;
  PointCloud cloud;
  std::vector<GraspRecord> grasps;

  std::vector<Grasp7> positives() const;
};

std::vector<LoadedSample> load_samples(const Dataset& ds, const std::string& split);
std::vector<TrainingExample> training_examples(const std::vector<LoadedSample>& samples, double eps_vis);

/// Mean L_cc over examples with visible contacts.
double mean_contact_loss(const Model& model, const std::vector<TrainingExample>& examples);

struct TrainRun {
  Model model;
  TrainState state;
  std::vector<StepRecord> trace;
  double initial_cc = 0.0;  // mean training-set L_cc before / after (sampler variants)
  double final_cc = 0.0;
};

/// Trains on the "train" split from a fresh initialization.
TrainRun run_training(const RunConfig& cfg, const Dataset& ds);

std::string trace_csv(const std::vector<StepRecord>& trace);

enum class PredictionSource { Model, Positives, Random };
PredictionSource prediction_source_from_string(const std::string& s);

/// Uniform random pairs of distinct cloud points with phi uniform in [0, pi].
std::vector<GraspPrediction> random_predictions(const PointCloud& cloud, std::size_t count, std::uint64_t seed);

/// `model` is required for PredictionSource::Model. Random predictions use
/// the sampler size M per sample.
MetricReport evaluate_samples(const std::vector<LoadedSample>& samples, const DatasetConfig& data,
                              const RunConfig& cfg, PredictionSource source, const Model* model);

struct EvalFiles {
  std::string table;          // metrics.txt
  std::string records;        // metrics.csv
  std::string per_sample;     // per_sample.csv
  std::string curve;          // curve.csv
  std::string svg;            // curve.svg
};

EvalFiles eval_files(const MetricReport& report);
void write_eval_files(const std::string& dir, const EvalFiles& files);

/// Polyline of (coverage, success) on unit axes.
std::string curve_svg(const std::vector<CurvePoint>& curve);

struct AblationRow {
  Variant variant = Variant::Full;
  std::optional<double> train_sample_loss;  // sampler variants only
  std::optional<double> train_cc;
  std::optional<double> final_t;
  double test_cc = 0.0;  // held-out L_cc of the contact points the variant uses
  MetricReport report;
};

std::vector<AblationRow> run_ablation(const RunConfig& cfg, const Dataset& ds, bool verbose = false);
std::string ablation_table(const std::vector<AblationRow>& rows);

}  // namespace l2g
