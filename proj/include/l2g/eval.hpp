#pragma once

// Rule-based grasp metrics over ranked predictions (success and coverage at
// the top k percent) plus the oracle-based success rate.

#include <string>
#include <vector>

#include "l2g/geometry.hpp"
#include "l2g/heads.hpp"
#include "l2g/synthdata.hpp"

namespace l2g {

struct Tolerances {
  double x = kMatchTolX;
  double theta = kMatchTolTheta;
};

/// Predictions sorted by descending score; ties keep the original order.
struct RankedPredictions {
  std::vector<GraspPrediction> items;
  std::vector<std::size_t> original_index;
};

RankedPredictions rank(const std::vector<GraspPrediction>& predictions);

/// ceil(k% * M), at least 1 and at most M.
std::size_t top_k_count(std::size_t m, double k_percent);

double success_rate_at_k(const RankedPredictions& ranked, const std::vector<Grasp7>& positives,
                         double k_percent, const Tolerances& tol = {});
double coverage_rate_at_k(const RankedPredictions& ranked, const std::vector<Grasp7>& positives,
                          double k_percent, const Tolerances& tol = {});

struct CurvePoint {
  std::size_t prefix = 0;
  double coverage = 0.0;
  double success = 0.0;
};

/// One point per prefix length 1..M.
std::vector<CurvePoint> success_coverage_curve(const RankedPredictions& ranked,
                                               const std::vector<Grasp7>& positives,
                                               const Tolerances& tol = {});

double oracle_success_at_k(const RankedPredictions& ranked, const Shape& shape, const GripperSpec& gripper,
                           double k_percent);

struct SampleMetrics {
  std::string sample_id;
  bool has_positives = false;
  std::vector<double> success;  // per k (rule based; empty without positives)
  std::vector<double> coverage;
  std::vector<double> oracle;   // per k
  std::vector<CurvePoint> curve;
};

SampleMetrics evaluate_sample(const std::string& sample_id, const std::vector<GraspPrediction>& predictions,
                              const std::vector<Grasp7>& positives, const Shape& shape,
                              const GripperSpec& gripper, const std::vector<double>& k_list,
                              const Tolerances& tol = {});

/// Unweighted means over samples (sorted by id); rule-based rates average
/// over samples that have positives.
struct MetricReport {
  std::vector<double> k_list;
  std::vector<double> success;
  std::vector<double> coverage;
  std::vector<double> oracle;
  std::vector<CurvePoint> curve;  // mean over samples with positives, per prefix
  std::vector<SampleMetrics> samples;
  std::size_t rule_samples = 0;
};

MetricReport aggregate(std::vector<SampleMetrics> samples, const std::vector<double>& k_list);

std::string format_report_table(const MetricReport& report);

}  // namespace l2g
