#include "l2g/gradcheck.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>

#include "l2g/model.hpp"
#include "l2g/synthdata.hpp"

namespace l2g {

using diff::Matrix;
using diff::ParameterSet;
using diff::Tape;
using diff::Var;

namespace {

constexpr double kStep = 1e-6;

Matrix uniform(Rng& rng, diff::Index rows, diff::Index cols, double lo, double hi) {
  Matrix m(rows, cols);
  for (diff::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(lo, hi);
  return m;
}

struct Case {
  ParameterSet params;
  diff::ScalarFunction f;
};

Case point_set_case(Rng& rng, Var (*loss)(Var, Var)) {
  Case c;
  c.params.add("q", uniform(rng, 4, 3, -0.05, 0.05));
  c.params.add("c", uniform(rng, 12, 3, -0.05, 0.05));
  c.f = [loss](Tape& tape, const ParameterSet& ps) { return loss(tape.param(ps, 0), tape.param(ps, 1)); };
  return c;
}

Case soft_projection_case(Rng& rng) {
  Case c;
  const PointCloud cloud = uniform(rng, 32, 3, -0.05, 0.05);
  const Matrix weights = uniform(rng, 4, 3, -1.0, 1.0);
  c.params.add("q", uniform(rng, 4, 3, -0.05, 0.05));
  c.params.add("t", Matrix::Constant(1, 1, rng.uniform(0.02, 0.06)));
  c.f = [cloud, weights](Tape& tape, const ParameterSet& ps) {
    const SoftProjection sp = soft_project(tape, tape.param(ps, 0), cloud, tape.param(ps, 1), 32);
    return diff::sum(diff::cwise_product(sp.points, tape.constant(weights)));
  };
  return c;
}

Case projection_case(Rng& rng) {
  Case c;
  c.params.add("t", Matrix::Constant(1, 1, rng.uniform(1e-3, 1.0)));
  c.f = [](Tape& tape, const ParameterSet& ps) { return projection_loss(tape.param(ps, 0)); };
  return c;
}

Case sample_case(Rng& rng) {
  Case c = point_set_case(rng, loss_cc);
  c.params.add("t", Matrix::Constant(1, 1, rng.uniform(0.01, 1.0)));
  c.f = [](Tape& tape, const ParameterSet& ps) {
    return sample_loss(tape.param(ps, 0), tape.param(ps, 1), tape.param(ps, 2), 10.0);
  };
  return c;
}

Case regression_case(Rng& rng) {
  Case c;
  c.params.add("c1", uniform(rng, 4, 3, -0.05, 0.05));
  c.params.add("c2", uniform(rng, 4, 3, -0.05, 0.05));
  c.params.add("phi", uniform(rng, 4, 1, 0.2, std::numbers::pi - 0.2));
  std::vector<GraspPose> matched;
  for (int j = 0; j < 4; ++j) {
    const Grasp7 g{Vec3(rng.uniform(-0.05, 0.05), rng.uniform(-0.05, 0.05), rng.uniform(0.0, 0.05)),
                   Vec3(rng.uniform(-0.05, 0.05), rng.uniform(-0.05, 0.05), rng.uniform(0.0, 0.05)),
                   rng.uniform(0.0, std::numbers::pi)};
    matched.push_back(grasp7_to_pose(g));
  }
  c.f = [matched](Tape& tape, const ParameterSet& ps) {
    return regression_loss(tape, tape.param(ps, 0), tape.param(ps, 1), tape.param(ps, 2), matched, 0.1);
  };
  return c;
}

Case classification_case(Rng& rng) {
  Case c;
  c.params.add("scores", uniform(rng, 8, 1, 0.05, 0.95));
  std::vector<int> labels;
  for (int j = 0; j < 8; ++j) labels.push_back(static_cast<int>(rng.index(2)));
  c.f = [labels](Tape& tape, const ParameterSet& ps) { return classification_loss(tape.param(ps, 0), labels); };
  return c;
}

ModelConfig tiny_config(std::uint64_t seed) {
  ModelConfig cfg;
  cfg.encoder.stage1 = {8, 16};
  cfg.encoder.stage2 = {16, 8};
  cfg.sampler.num_points = 4;
  cfg.sampler.k = 4;
  cfg.sampler.hidden = {16};
  cfg.sampler.t_init = 0.05;
  cfg.heads.hidden = {16};
  cfg.nn = 8;
  cfg.seed = seed;
  return cfg;
}

GradSuiteResult run_total(int seeds, std::uint64_t base_seed) {
  GradSuiteResult res;
  res.name = "total";
  res.tolerance = 1e-4;
  std::uint64_t attempt = 0;
  while (res.seeds < seeds) {
    const std::uint64_t seed = derive_seed(base_seed, 9000 + attempt++);
    Rng rng(seed);
    ShapeSpec spec;
    spec.kind = static_cast<ShapeKind>(rng.index(3));
    spec.dims = Vec3(rng.uniform(0.04, 0.08), rng.uniform(0.04, 0.08), rng.uniform(0.04, 0.08));
    if (spec.kind == ShapeKind::Sphere) spec.dims.y() = spec.dims.z() = 0.0;
    if (spec.kind == ShapeKind::Cylinder) spec.dims.z() = 0.0;
    spec.yaw = rng.uniform(0.0, 3.0);
    const Shape shape(spec);
    const PointCloud cloud = sample_partial_view(shape, Vec3(-0.5, -0.3, -0.8).normalized(), 32, rng.next());
    const std::vector<Grasp7> positives = annotate_grasps(shape, GripperSpec{}, 40, rng.next()).positives();
    const TrainingExample ex = make_training_example("gradcheck", cloud, positives, 0.005);
    if (ex.positives.empty() || ex.contacts.empty()) continue;
    Model model(tiny_config(seed));
    const diff::ScalarFunction f = [&](Tape& tape, const ParameterSet&) { return model.loss(tape, ex).total; };
    const diff::GradCheckResult r = diff::finite_difference_check(f, model.params(), {1e-6, 3e-6, 1e-5, 3e-5, 1e-4});
    res.skipped += r.skipped;
    ++res.seeds;
    res.coordinates += r.coordinates;
    if (r.max_rel_error >= res.max_rel_error) {
      res.max_rel_error = r.max_rel_error;
      char buf[160];
      std::snprintf(buf, sizeof buf, "%s[%ld] %.9g vs %.9g", r.worst_param.c_str(), static_cast<long>(r.worst_index),
                    r.analytic, r.numeric);
      res.worst = buf;
    }
  }
  return res;
}

}  // namespace

std::vector<std::string> gradient_suite_names() {
  return {"nn", "mn", "cc", "soft_projection", "projection", "sample", "regression", "classification", "total"};
}

GradSuiteResult run_gradient_suite(const std::string& name, int seeds, std::uint64_t base_seed) {
  if (name == "total") return run_total(seeds, base_seed);
  GradSuiteResult res;
  res.name = name;
  res.tolerance = 1e-5;
  if (name == "soft_projection") res.tolerance = 1e-4;
  for (int s = 0; s < seeds; ++s) {
    Rng rng(derive_seed(base_seed, static_cast<std::uint64_t>(s)));
    Case c;
    if (name == "nn") {
      c = point_set_case(rng, loss_nn);
    } else if (name == "mn") {
      c = point_set_case(rng, loss_mn);
    } else if (name == "cc") {
      c = point_set_case(rng, loss_cc);
    } else if (name == "soft_projection") {
      c = soft_projection_case(rng);
    } else if (name == "projection") {
      c = projection_case(rng);
    } else if (name == "sample") {
      c = sample_case(rng);
    } else if (name == "regression") {
      c = regression_case(rng);
    } else if (name == "classification") {
      c = classification_case(rng);
    } else {
      throw Error(ErrorKind::Config, "unknown gradient suite '" + name + "'");
    }
    const diff::GradCheckResult r = diff::finite_difference_check(c.f, c.params, kStep);
    ++res.seeds;
    res.coordinates += r.coordinates;
    if (r.max_rel_error >= res.max_rel_error) {
      res.max_rel_error = r.max_rel_error;
      char buf[160];
      std::snprintf(buf, sizeof buf, "%s[%ld] %.9g vs %.9g", r.worst_param.c_str(), static_cast<long>(r.worst_index),
                    r.analytic, r.numeric);
      res.worst = buf;
    }
  }
  return res;
}

std::vector<GradSuiteResult> run_gradient_suites(int seeds, std::uint64_t base_seed) {
  std::vector<GradSuiteResult> out;
  for (const auto& name : gradient_suite_names()) out.push_back(run_gradient_suite(name, seeds, base_seed));
  return out;
}

}  // namespace l2g
