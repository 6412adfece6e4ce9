// l2g command line: generate, train, eval, ablate, gradcheck.
// Exit codes: 0 ok, 1 runtime failure, 2 configuration error.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "l2g/checkpoint.hpp"
#include "l2g/gradcheck.hpp"
#include "l2g/pipeline.hpp"

using namespace l2g;

namespace {

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string variant;
  std::string k;
  std::string dataset;
  std::string checkpoint;
  std::string split;
  std::string source = "model";
  int seeds = 20;
};

// Config file first, then command-line overrides through the same parser.
RunConfig effective_config(const Options& o, const RunConfig& base = {}) {
  std::string text = o.config.empty() ? "" : read_config_file(o.config);
  if (o.seed) text += "\nseed = " + std::to_string(*o.seed);
  if (!o.variant.empty()) text += "\nvariant = " + o.variant;
  if (!o.k.empty()) text += "\nk_list = " + o.k;
  if (!o.dataset.empty()) text += "\ndataset = " + o.dataset;
  if (!o.split.empty()) text += "\nsplit = " + o.split;
  return parse_run_config(text, base);
}

int cmd_generate(const Options& o) {
  RunConfig cfg = effective_config(o);
  const std::string root = o.out.empty() ? cfg.dataset : o.out;
  const auto samples = generate_samples(cfg.data);
  const std::string manifest = write_dataset(root, cfg.data, samples);
  std::size_t train = 0, pos = 0, neg = 0;
  for (const auto& s : samples) {
    train += s.record.split == "train";
    pos += s.grasps.positives().size();
    neg += s.grasps.negatives().size();
  }
  std::cout << "samples " << samples.size() << " (train " << train << ", test " << samples.size() - train
            << ")\nshapes " << cfg.data.num_shapes << "\npositives " << pos << "\nnegatives " << neg
            << "\nmanifest " << hex64(fnv1a(manifest)) << "\n";
  return 0;
}

int cmd_train(const Options& o) {
  RunConfig cfg = effective_config(o);
  const std::string out = o.out.empty() ? "run" : o.out;
  const Dataset ds = load_dataset(cfg.dataset);
  const TrainRun run = run_training(cfg, ds);
  write_file(out + "/trace.csv", trace_csv(run.trace));
  write_file(out + "/config.txt", config_text(cfg));
  save_checkpoint(out + "/checkpoint.txt", cfg, run.model, run.state);
  std::cout << "steps " << run.state.step << "\n";
  if (uses_sampler(cfg.variant)) {
    std::printf("train L_cc %.6g -> %.6g\n", run.initial_cc, run.final_cc);
  }
  std::cout << "checkpoint " << out << "/checkpoint.txt\n";
  return 0;
}

int cmd_eval(const Options& o) {
  const PredictionSource source = prediction_source_from_string(o.source);
  std::optional<Checkpoint> ck;
  RunConfig cfg;
  if (!o.checkpoint.empty()) {
    ck = load_checkpoint(o.checkpoint);
    cfg = effective_config(o, ck->config);
  } else {
    if (source == PredictionSource::Model) throw Error(ErrorKind::Config, "eval needs --checkpoint");
    cfg = effective_config(o);
  }
  const std::string out = o.out.empty() ? "eval" : o.out;
  const Dataset ds = load_dataset(cfg.dataset);
  const auto samples = load_samples(ds, cfg.split);
  const MetricReport report = evaluate_samples(samples, ds.config, cfg, source, ck ? &ck->model : nullptr);
  const EvalFiles files = eval_files(report);
  write_eval_files(out, files);
  std::cout << files.table;
  return 0;
}

int cmd_ablate(const Options& o) {
  RunConfig cfg = effective_config(o);
  const std::string out = o.out.empty() ? "ablation" : o.out;
  const Dataset ds = load_dataset(cfg.dataset);
  const std::string table = ablation_table(run_ablation(cfg, ds, true));
  write_file(out + "/ablation.txt", table);
  std::cout << table;
  return 0;
}

int cmd_gradcheck(const Options& o) {
  bool ok = true;
  for (const auto& name : gradient_suite_names()) {
    const GradSuiteResult r = run_gradient_suite(name, o.seeds, o.seed.value_or(0));
    std::printf("%-16s max_rel_error %.3e  tol %.0e  seeds %d  coords %lld  skipped %lld  %s\n", r.name.c_str(),
                r.max_rel_error, r.tolerance, r.seeds, static_cast<long long>(r.coordinates),
                static_cast<long long>(r.skipped), r.passed() ? "ok" : "FAIL");
    ok = ok && r.passed();
  }
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Learning-to-grasp proposals on procedural shapes"};
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* c) {
    c->add_option("--config", o.config, "key = value configuration file");
    c->add_option("--seed", o.seed, "seed for data, model and training");
    c->add_option("--out", o.out, "output directory");
  };

  auto* gen = app.add_subcommand("generate", "build a procedural dataset");
  common(gen);

  auto* tr = app.add_subcommand("train", "train a model on the train split");
  common(tr);
  tr->add_option("--variant", o.variant, "full, no-proj, fps or no-sample");
  tr->add_option("--dataset", o.dataset, "dataset directory");

  auto* ev = app.add_subcommand("eval", "rule-based and oracle metrics");
  common(ev);
  ev->add_option("--checkpoint", o.checkpoint, "checkpoint from train");
  ev->add_option("--split", o.split, "train, test or all");
  ev->add_option("--k", o.k, "comma-separated top-k percentages");
  ev->add_option("--dataset", o.dataset, "dataset directory");
  ev->add_option("--source", o.source, "model, positives or random")->check(CLI::IsMember({"model", "positives", "random"}));

  auto* ab = app.add_subcommand("ablate", "train and evaluate all four variants");
  common(ab);
  ab->add_option("--k", o.k, "comma-separated top-k percentages");
  ab->add_option("--dataset", o.dataset, "dataset directory");
  ab->add_option("--split", o.split, "evaluation split");

  auto* gc = app.add_subcommand("gradcheck", "finite-difference gradient suites");
  gc->add_option("--seed", o.seed, "base seed");
  gc->add_option("--seeds", o.seeds, "random instances per suite")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (gen->parsed()) return cmd_generate(o);
    if (tr->parsed()) return cmd_train(o);
    if (ev->parsed()) return cmd_eval(o);
    if (ab->parsed()) return cmd_ablate(o);
    if (gc->parsed()) return cmd_gradcheck(o);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.kind() == ErrorKind::Config ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
