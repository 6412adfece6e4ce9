#include "l2g/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <numbers>
#include <sstream>

namespace l2g {

namespace {

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

// Mean of the last `window` entries of a trace column.
double tail_mean(const std::vector<StepRecord>& trace, double StepRecord::*field, std::size_t window = 100) {
  const std::size_t n = std::min(window, trace.size());
  double acc = 0.0;
  for (std::size_t i = trace.size() - n; i < trace.size(); ++i) acc += trace[i].*field;
  return n ? acc / static_cast<double>(n) : 0.0;
}

}  // namespace

std::vector<Grasp7> LoadedSample::positives() const {
  std::vector<Grasp7> out;
  for (const auto& g : grasps) {
    if (g.label == 1) out.push_back(g.grasp);
  }
  return out;
}

std::vector<LoadedSample> load_samples(const Dataset& ds, const std::string& split) {
  std::vector<LoadedSample> out;
  for (const auto& r : ds.split(split)) {
    out.push_back({r, read_cloud(ds.path(r.cloud_path)), read_grasps(ds.path(r.grasp_path))});
  }
  return out;
}

std::vector<TrainingExample> training_examples(const std::vector<LoadedSample>& samples, double eps_vis) {
  std::vector<TrainingExample> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(make_training_example(s.record.id, s.cloud, s.positives(), eps_vis));
  return out;
}

double mean_contact_loss(const Model& model, const std::vector<TrainingExample>& examples) {
  double acc = 0.0;
  std::size_t n = 0;
  for (const auto& ex : examples) {
    if (ex.contacts.empty()) continue;
    acc += model.contact_loss(ex);
    ++n;
  }
  if (n == 0) throw Error(ErrorKind::EmptySet, "no example has visible contacts");
  return acc / static_cast<double>(n);
}

TrainRun run_training(const RunConfig& cfg, const Dataset& ds) {
  const auto examples = training_examples(load_samples(ds, "train"), cfg.model.eps_vis);
  TrainRun run{Model(cfg.model), {}, {}, 0.0, 0.0};
  run.initial_cc = mean_contact_loss(run.model, examples);
  run.trace = train(run.model, examples, cfg.train, run.state);
  run.final_cc = mean_contact_loss(run.model, examples);
  return run;
}

std::string trace_csv(const std::vector<StepRecord>& trace) {
  std::ostringstream os;
  os << "step,sample,L_sample,L_cc,L_regr,L_class,t,total\n";
  char buf[256];
  for (const auto& r : trace) {
    std::snprintf(buf, sizeof buf, "%lld,%s,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", static_cast<long long>(r.step),
                  r.sample.c_str(), r.sample_loss, r.cc, r.regr, r.cls, r.t, r.total);
    os << buf;
  }
  return os.str();
}

PredictionSource prediction_source_from_string(const std::string& s) {
  if (s == "model") return PredictionSource::Model;
  if (s == "positives") return PredictionSource::Positives;
  if (s == "random") return PredictionSource::Random;
  throw Error(ErrorKind::Config, "unknown prediction source '" + s + "'");
}

std::vector<GraspPrediction> random_predictions(const PointCloud& cloud, std::size_t count, std::uint64_t seed) {
  if (cloud.rows() < 2) throw Error(ErrorKind::EmptySet, "random pairs need at least two points");
  Rng rng(seed);
  const auto n = static_cast<std::uint64_t>(cloud.rows());
  std::vector<GraspPrediction> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const auto a = static_cast<Eigen::Index>(rng.index(n));
    auto b = static_cast<Eigen::Index>(rng.index(n - 1));
    if (b >= a) ++b;
    const double phi = rng.uniform(0.0, std::numbers::pi);
    out.push_back({{cloud.row(a).transpose(), cloud.row(b).transpose(), phi}, rng.uniform()});
  }
  return out;
}

MetricReport evaluate_samples(const std::vector<LoadedSample>& samples, const DatasetConfig& data,
                              const RunConfig& cfg, PredictionSource source, const Model* model) {
  if (source == PredictionSource::Model && model == nullptr) {
    throw Error(ErrorKind::Runtime, "model predictions need a checkpoint");
  }
  std::vector<SampleMetrics> metrics;
  for (const auto& s : samples) {
    std::vector<GraspPrediction> preds;
    switch (source) {
      case PredictionSource::Model: preds = model->predict(s.cloud); break;
      case PredictionSource::Positives:
        for (const auto& g : s.positives()) preds.push_back({g, 1.0});
        break;
      case PredictionSource::Random:
        preds = random_predictions(s.cloud, static_cast<std::size_t>(cfg.model.sampler.num_points),
                                   derive_seed(cfg.seed, fnv1a(s.record.id)));
        break;
    }
    if (preds.empty()) {
      std::cerr << "warning: " << s.record.id << " has no predictions, skipped\n";
      continue;
    }
    metrics.push_back(evaluate_sample(s.record.id, preds, s.positives(), Shape(s.record.shape), data.gripper,
                                      cfg.k_list, cfg.tolerances()));
  }
  if (metrics.empty()) throw Error(ErrorKind::EmptyPredictions, "nothing to evaluate");
  return aggregate(std::move(metrics), cfg.k_list);
}

std::string curve_svg(const std::vector<CurvePoint>& curve) {
  const double w = 400, h = 300, pad = 40;
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w + 2 * pad << "\" height=\"" << h + 2 * pad
     << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<line x1=\"" << pad << "\" y1=\"" << pad + h << "\" x2=\"" << pad + w << "\" y2=\"" << pad + h
     << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << pad << "\" y1=\"" << pad << "\" x2=\"" << pad << "\" y2=\"" << pad + h
     << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double f = i / 4.0;
    os << "<text x=\"" << pad + f * w << "\" y=\"" << pad + h + 16 << "\" font-size=\"10\" text-anchor=\"middle\">"
       << f << "</text>\n";
    os << "<text x=\"" << pad - 6 << "\" y=\"" << pad + h - f * h + 3 << "\" font-size=\"10\" text-anchor=\"end\">"
       << f << "</text>\n";
  }
  os << "<text x=\"" << pad + w / 2 << "\" y=\"" << pad + h + 32 << "\" font-size=\"12\" text-anchor=\"middle\">"
     << "coverage</text>\n";
  os << "<text x=\"12\" y=\"" << pad + h / 2 << "\" font-size=\"12\" transform=\"rotate(-90 12 " << pad + h / 2
     << ")\" text-anchor=\"middle\">success</text>\n";
  os << "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"1.5\" points=\"";
  for (std::size_t i = 0; i < curve.size(); ++i) {
    os << (i ? " " : "") << fmt("%.2f", pad + curve[i].coverage * w) << ","
       << fmt("%.2f", pad + h - curve[i].success * h);
  }
  os << "\"/>\n</svg>\n";
  return os.str();
}

EvalFiles eval_files(const MetricReport& report) {
  EvalFiles f;
  f.table = format_report_table(report);

  std::ostringstream rec;
  rec << "metric,k,value\n";
  const std::pair<const char*, const std::vector<double>*> rows[] = {
      {"success_rule", &report.success}, {"coverage_rule", &report.coverage}, {"success_oracle", &report.oracle}};
  for (const auto& [name, values] : rows) {
    for (std::size_t i = 0; i < report.k_list.size(); ++i) {
      rec << name << "," << fmt("%g", report.k_list[i]) << "," << fmt("%.17g", (*values)[i]) << "\n";
    }
  }
  f.records = rec.str();

  std::ostringstream ps;
  ps << "sample,has_positives";
  for (const char* m : {"success", "coverage", "oracle"}) {
    for (double k : report.k_list) ps << "," << m << "@" << fmt("%g", k);
  }
  ps << "\n";
  for (const auto& s : report.samples) {
    ps << s.sample_id << "," << (s.has_positives ? 1 : 0);
    for (const auto* v : {&s.success, &s.coverage, &s.oracle}) {
      for (std::size_t i = 0; i < report.k_list.size(); ++i) {
        ps << "," << (i < v->size() ? fmt("%.17g", (*v)[i]) : std::string("n/a"));
      }
    }
    ps << "\n";
  }
  f.per_sample = ps.str();

  std::ostringstream cv;
  cv << "prefix,coverage,success\n";
  for (const auto& p : report.curve) cv << p.prefix << "," << fmt("%.17g", p.coverage) << "," << fmt("%.17g", p.success) << "\n";
  f.curve = cv.str();
  f.svg = curve_svg(report.curve);
  return f;
}

void write_eval_files(const std::string& dir, const EvalFiles& files) {
  write_file(dir + "/metrics.txt", files.table);
  write_file(dir + "/metrics.csv", files.records);
  write_file(dir + "/per_sample.csv", files.per_sample);
  write_file(dir + "/curve.csv", files.curve);
  write_file(dir + "/curve.svg", files.svg);
}

std::vector<AblationRow> run_ablation(const RunConfig& cfg, const Dataset& ds, bool verbose) {
  const auto test = load_samples(ds, cfg.split);
  const auto test_examples = training_examples(test, cfg.model.eps_vis);
  std::vector<AblationRow> rows;
  for (Variant v : {Variant::Full, Variant::NoProj, Variant::Fps, Variant::NoSample}) {
    RunConfig vc = cfg;
    vc.variant = v;
    vc.finalize();
    if (verbose) std::cerr << "ablate: training " << to_string(v) << "\n";
    TrainRun run = run_training(vc, ds);
    AblationRow row;
    row.variant = v;
    if (uses_sampler(v) && !run.trace.empty()) {
      row.train_sample_loss = tail_mean(run.trace, &StepRecord::sample_loss);
      row.train_cc = run.final_cc;
      row.final_t = run.trace.back().t;
    }
    row.test_cc = mean_contact_loss(run.model, test_examples);
    row.report = evaluate_samples(test, ds.config, vc, PredictionSource::Model, &run.model);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string ablation_table(const std::vector<AblationRow>& rows) {
  if (rows.empty()) return "";
  std::ostringstream os;
  char buf[64];
  auto cell = [&](const std::string& s) {
    std::snprintf(buf, sizeof buf, " %12s", s.c_str());
    os << buf;
  };
  auto opt = [](const std::optional<double>& v) { return v ? fmt("%.6f", *v) : std::string("n/a"); };
  const auto& ks = rows.front().report.k_list;
  std::snprintf(buf, sizeof buf, "%-10s", "variant");
  os << buf;
  for (const char* h : {"L_sample", "L_cc_train", "t", "L_cc_test"}) cell(h);
  for (const char* m : {"success", "coverage", "oracle"}) {
    for (double k : ks) cell(std::string(m) + "@" + fmt("%g", k));
  }
  os << "\n";
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%-10s", to_string(r.variant));
    os << buf;
    cell(opt(r.train_sample_loss));
    cell(opt(r.train_cc));
    cell(opt(r.final_t));
    cell(fmt("%.6f", r.test_cc));
    for (const auto* v : {&r.report.success, &r.report.coverage, &r.report.oracle}) {
      for (double x : *v) cell(fmt("%.4f", x));
    }
    os << "\n";
  }
  return os.str();
}

}  // namespace l2g
