#include "l2g/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

namespace l2g {

namespace {

struct CanonicalSet {
  std::vector<GraspPose> poses;
  std::vector<char> valid;
};

CanonicalSet canonical_poses(const std::vector<Grasp7>& grasps) {
  CanonicalSet out;
  out.poses.reserve(grasps.size());
  for (const auto& g : grasps) {
    const bool ok = grasp_width(g) >= kMinContactSeparation;
    out.valid.push_back(ok ? 1 : 0);
    out.poses.push_back(ok ? grasp7_to_pose(canonicalize(g)) : GraspPose{});
  }
  return out;
}

std::vector<Grasp7> grasps_of(const RankedPredictions& ranked, std::size_t count) {
  std::vector<Grasp7> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(ranked.items[i].grasp);
  return out;
}

void require_inputs(const RankedPredictions& ranked, const std::vector<Grasp7>& positives) {
  if (ranked.items.empty()) throw Error(ErrorKind::EmptyPredictions, "no predictions");
  if (positives.empty()) throw Error(ErrorKind::EmptyGroundTruth, "no positive grasps");
}

// match[i][j]: prediction i (ranked order) matches positive j.
std::vector<std::vector<char>> match_matrix(const RankedPredictions& ranked, std::size_t count,
                                            const std::vector<Grasp7>& positives, const Tolerances& tol) {
  const CanonicalSet pred = canonical_poses(grasps_of(ranked, count));
  const CanonicalSet gt = canonical_poses(positives);
  std::vector<std::vector<char>> m(count, std::vector<char>(positives.size(), 0));
  for (std::size_t i = 0; i < count; ++i) {
    if (!pred.valid[i]) continue;
    for (std::size_t j = 0; j < positives.size(); ++j) {
      if (gt.valid[j] && grasp_match(pred.poses[i], gt.poses[j], tol.x, tol.theta)) m[i][j] = 1;
    }
  }
  return m;
}

}  // namespace

RankedPredictions rank(const std::vector<GraspPrediction>& predictions) {
  std::vector<std::size_t> order(predictions.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return predictions[a].score > predictions[b].score;
  });
  RankedPredictions out;
  for (auto i : order) {
    out.items.push_back(predictions[i]);
    out.original_index.push_back(i);
  }
  return out;
}

std::size_t top_k_count(std::size_t m, double k_percent) {
  const auto n = static_cast<std::size_t>(std::ceil(k_percent / 100.0 * static_cast<double>(m) - 1e-9));
  return std::clamp<std::size_t>(n, 1, std::max<std::size_t>(m, 1));
}

double success_rate_at_k(const RankedPredictions& ranked, const std::vector<Grasp7>& positives, double k_percent,
                         const Tolerances& tol) {
  require_inputs(ranked, positives);
  const std::size_t count = top_k_count(ranked.items.size(), k_percent);
  const auto m = match_matrix(ranked, count, positives, tol);
  std::size_t hits = 0;
  for (const auto& row : m) hits += std::any_of(row.begin(), row.end(), [](char c) { return c != 0; });
  return static_cast<double>(hits) / static_cast<double>(count);
}

double coverage_rate_at_k(const RankedPredictions& ranked, const std::vector<Grasp7>& positives,
                          double k_percent, const Tolerances& tol) {
  require_inputs(ranked, positives);
  const std::size_t count = top_k_count(ranked.items.size(), k_percent);
  const auto m = match_matrix(ranked, count, positives, tol);
  std::size_t covered = 0;
  for (std::size_t j = 0; j < positives.size(); ++j) {
    for (std::size_t i = 0; i < count; ++i) {
      if (m[i][j]) {
        ++covered;
        break;
      }
    }
  }
  return static_cast<double>(covered) / static_cast<double>(positives.size());
}

std::vector<CurvePoint> success_coverage_curve(const RankedPredictions& ranked,
                                               const std::vector<Grasp7>& positives, const Tolerances& tol) {
  require_inputs(ranked, positives);
  const std::size_t total = ranked.items.size();
  const auto m = match_matrix(ranked, total, positives, tol);
  std::vector<char> covered(positives.size(), 0);
  std::size_t n_covered = 0, hits = 0;
  std::vector<CurvePoint> curve;
  curve.reserve(total);
  for (std::size_t i = 0; i < total; ++i) {
    bool hit = false;
    for (std::size_t j = 0; j < positives.size(); ++j) {
      if (!m[i][j]) continue;
      hit = true;
      if (!covered[j]) {
        covered[j] = 1;
        ++n_covered;
      }
    }
    hits += hit ? 1 : 0;
    curve.push_back({i + 1, static_cast<double>(n_covered) / static_cast<double>(positives.size()),
                     static_cast<double>(hits) / static_cast<double>(i + 1)});
  }
  return curve;
}

double oracle_success_at_k(const RankedPredictions& ranked, const Shape& shape, const GripperSpec& gripper,
                           double k_percent) {
  if (ranked.items.empty()) throw Error(ErrorKind::EmptyPredictions, "no predictions");
  const std::size_t count = top_k_count(ranked.items.size(), k_percent);
  std::size_t ok = 0;
  for (std::size_t i = 0; i < count; ++i) {
    const Grasp7& g = ranked.items[i].grasp;
    if (grasp_width(g) < kMinContactSeparation) continue;
    ok += oracle_check(shape, canonicalize(g), gripper).success ? 1 : 0;
  }
  return static_cast<double>(ok) / static_cast<double>(count);
}

SampleMetrics evaluate_sample(const std::string& sample_id, const std::vector<GraspPrediction>& predictions,
                              const std::vector<Grasp7>& positives, const Shape& shape,
                              const GripperSpec& gripper, const std::vector<double>& k_list,
                              const Tolerances& tol) {
  SampleMetrics s;
  s.sample_id = sample_id;
  const RankedPredictions ranked = rank(predictions);
  s.has_positives = !positives.empty();
  for (double k : k_list) {
    s.oracle.push_back(oracle_success_at_k(ranked, shape, gripper, k));
    if (s.has_positives) {
      s.success.push_back(success_rate_at_k(ranked, positives, k, tol));
      s.coverage.push_back(coverage_rate_at_k(ranked, positives, k, tol));
    }
  }
  if (s.has_positives) s.curve = success_coverage_curve(ranked, positives, tol);
  return s;
}

MetricReport aggregate(std::vector<SampleMetrics> samples, const std::vector<double>& k_list) {
  std::sort(samples.begin(), samples.end(),
            [](const SampleMetrics& a, const SampleMetrics& b) { return a.sample_id < b.sample_id; });
  MetricReport r;
  r.k_list = k_list;
  const std::size_t nk = k_list.size();
  r.success.assign(nk, 0.0);
  r.coverage.assign(nk, 0.0);
  r.oracle.assign(nk, 0.0);
  std::size_t curve_len = 0;
  bool curve_ok = true;
  for (const auto& s : samples) {
    for (std::size_t i = 0; i < nk; ++i) r.oracle[i] += s.oracle[i];
    if (!s.has_positives) continue;
    ++r.rule_samples;
    for (std::size_t i = 0; i < nk; ++i) {
      r.success[i] += s.success[i];
      r.coverage[i] += s.coverage[i];
    }
    if (curve_len == 0) curve_len = s.curve.size();
    curve_ok = curve_ok && s.curve.size() == curve_len;
  }
  if (!samples.empty()) {
    for (auto& v : r.oracle) v /= static_cast<double>(samples.size());
  }
  if (r.rule_samples > 0) {
    for (std::size_t i = 0; i < nk; ++i) {
      r.success[i] /= static_cast<double>(r.rule_samples);
      r.coverage[i] /= static_cast<double>(r.rule_samples);
    }
    if (curve_ok) {
      r.curve.resize(curve_len);
      for (std::size_t p = 0; p < curve_len; ++p) {
        r.curve[p].prefix = p + 1;
        for (const auto& s : samples) {
          if (!s.has_positives) continue;
          r.curve[p].coverage += s.curve[p].coverage;
          r.curve[p].success += s.curve[p].success;
        }
        r.curve[p].coverage /= static_cast<double>(r.rule_samples);
        r.curve[p].success /= static_cast<double>(r.rule_samples);
      }
    }
  }
  r.samples = std::move(samples);
  return r;
}

std::string format_report_table(const MetricReport& report) {
  std::ostringstream os;
  char buf[64];
  os << "metric            ";
  for (double k : report.k_list) {
    char label[32];
    std::snprintf(label, sizeof label, "@%g%%", k);
    std::snprintf(buf, sizeof buf, "%9s", label);
    os << buf;
  }
  os << "\n";
  auto row = [&](const char* name, const std::vector<double>& v) {
    std::snprintf(buf, sizeof buf, "%-18s", name);
    os << buf;
    for (double x : v) {
      std::snprintf(buf, sizeof buf, "%9.4f", x);
      os << buf;
    }
    os << "\n";
  };
  row("success_rule", report.success);
  row("coverage_rule", report.coverage);
  row("success_oracle", report.oracle);
  os << "samples " << report.samples.size() << ", with positives " << report.rule_samples << "\n";
  return os.str();
}

}  // namespace l2g
