#include "doctest.h"

#include <filesystem>
#include <set>

#include "l2g/checkpoint.hpp"
#include "l2g/pipeline.hpp"

using namespace l2g;
namespace fs = std::filesystem;

namespace {

std::string scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("l2g_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p.string();
}

DatasetConfig small_data() {
  DatasetConfig d;
  d.num_shapes = 2;
  d.views_per_shape = 3;
  d.grasps_per_shape = 40;
  d.points_per_view = 64;
  d.test_fraction = 0.5;
  d.seed = 3;
  return d;
}

std::string error_message(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("config round trip") {
  const RunConfig a = parse_run_config("seed = 7\nlr = 0.0005 # comment\nk_list = 5, 25\nvariant = fps\nM = 16\n");
  CHECK(a.seed == 7);
  CHECK(a.data.seed == 7);
  CHECK(a.model.seed == 7);
  CHECK(a.train.seed == 7);
  CHECK(a.model.variant == Variant::Fps);
  CHECK(a.train.optimizer.lr == 0.0005);
  CHECK(a.k_list == std::vector<double>{5, 25});
  const std::string text = config_text(a);
  const RunConfig b = parse_run_config(text);
  CHECK(config_text(b) == text);
  CHECK(config_text(parse_run_config("")) == config_text(RunConfig{}));

  RunConfig odd;
  odd.length_scale = 0.1 + 1e-17;
  odd.train.optimizer.lr = 1.0 / 3.0;
  odd.finalize();
  CHECK(parse_run_config(config_text(odd)).train.optimizer.lr == odd.train.optimizer.lr);
}

TEST_CASE("config errors name the field") {
  CHECK(error_message([] { parse_run_config("bogus = 1\n"); }).find("unknown key 'bogus' at line 1") !=
        std::string::npos);
  CHECK(error_message([] { parse_run_config("seed = 1\nsize_min = 0.001\n"); }).find("size_min") != std::string::npos);
  CHECK(error_message([] { parse_run_config("lr = fast\n"); }).find("'lr'") != std::string::npos);
  CHECK(error_message([] { parse_run_config("variant = other\n"); }).find("variant") != std::string::npos);
  CHECK(error_message([] { parse_run_config("no equals sign\n"); }).find("line 1") != std::string::npos);
  CHECK(error_message([] { load_run_config("/nonexistent/run.cfg"); }).find("Config") == 0);
  CHECK_THROWS_AS(parse_dataset_config("lr = 0.1\n"), Error);
}

TEST_CASE("dataset generation and layout") {
  const DatasetConfig cfg = small_data();
  const auto samples = generate_samples(cfg);
  REQUIRE(samples.size() == 6);
  std::set<std::string> train_shapes, test_shapes;
  for (const auto& s : samples) (s.record.split == "train" ? train_shapes : test_shapes).insert(s.record.shape_id);
  CHECK(train_shapes.size() == 1);
  CHECK(test_shapes.size() == 1);
  CHECK(*train_shapes.begin() != *test_shapes.begin());

  const std::string root = scratch_dir("dataset");
  const std::string manifest = write_dataset(root, cfg, samples);
  CHECK(manifest == write_dataset(scratch_dir("dataset2"), cfg, generate_samples(cfg)));
  CHECK(fnv1a(manifest) == fnv1a(read_file(root + "/manifest.txt")));

  DatasetConfig other = cfg;
  other.seed = 4;
  std::vector<SampleRecord> records;
  for (const auto& s : generate_samples(other)) records.push_back(s.record);
  CHECK(manifest_text(records) != manifest);

  const Dataset ds = load_dataset(root);
  CHECK(ds.records.size() == 6);
  CHECK(ds.split("all").size() == 6);
  CHECK(ds.split("test").size() == 3);
  CHECK(dataset_config_text(ds.config) == dataset_config_text(cfg));
  CHECK(manifest_text(ds.records) == manifest);

  const auto loaded = load_samples(ds, "all");
  for (std::size_t i = 0; i < loaded.size(); ++i) {
    CHECK((loaded[i].cloud - samples[i].cloud).cwiseAbs().maxCoeff() <= 1e-9);
    CHECK(loaded[i].grasps.size() == samples[i].grasps.grasps.size());
    CHECK(loaded[i].positives().size() == samples[i].grasps.positives().size());
  }
}

TEST_CASE("cloud and grasp files") {
  const std::string root = scratch_dir("files");
  Rng rng(1);
  PointCloud c(10, 3);
  for (Eigen::Index i = 0; i < c.size(); ++i) c.data()[i] = rng.uniform(-0.2, 0.2);
  write_cloud(root + "/a.xyz", c);
  const PointCloud back = read_cloud(root + "/a.xyz");
  CHECK((back - c).cwiseAbs().maxCoeff() <= 1e-9);
  write_cloud(root + "/b.xyz", back);
  CHECK(read_file(root + "/a.xyz") == read_file(root + "/b.xyz"));

  const std::vector<GraspRecord> gs = {{{Vec3(0.01, 0.02, 0.03), Vec3(0.04, 0.05, 0.06), 1.25}, 1, 0.75},
                                       {{Vec3(-0.01, 0, 0.1), Vec3(0.1, 0, 0.1), 0.0}, -1, -1.0}};
  write_grasps(root + "/g.grasps", gs);
  const auto gb = read_grasps(root + "/g.grasps");
  REQUIRE(gb.size() == 2);
  CHECK(gb[0].label == 1);
  CHECK(gb[0].score == 0.75);
  CHECK(gb[1].label == -1);
  CHECK(gb[0].grasp.phi == 1.25);
  CHECK((gb[1].grasp.c1 - gs[1].grasp.c1).norm() <= 1e-12);

  write_file(root + "/bad.xyz", "1 2\n");
  CHECK_THROWS_AS(read_cloud(root + "/bad.xyz"), Error);
  CHECK_THROWS_AS(read_cloud(root + "/missing.xyz"), Error);
}

TEST_CASE("checkpoint round trip") {
  RunConfig cfg = parse_run_config("steps = 3\nM = 8\nnn = 8\npoints_per_view = 64\n");
  const std::string root = scratch_dir("checkpoint");
  DatasetConfig data = small_data();
  write_dataset(root + "/data", data, generate_samples(data));
  cfg.dataset = root + "/data";
  const Dataset ds = load_dataset(cfg.dataset);

  RunConfig zero = cfg;
  zero.train.steps = 0;
  const TrainRun init = run_training(zero, ds);
  CHECK(init.trace.empty());
  const Model fresh(cfg.model);
  for (int i = 0; i < fresh.params().size(); ++i) CHECK(init.model.params()[i].value == fresh.params()[i].value);

  const TrainRun run = run_training(cfg, ds);
  CHECK(run.state.step == 3);
  save_checkpoint(root + "/ck.txt", cfg, run.model, run.state);
  const Checkpoint ck = load_checkpoint(root + "/ck.txt");
  CHECK(ck.state.step == 3);
  CHECK(ck.state.optimizer.step == run.state.optimizer.step);
  CHECK(config_text(ck.config) == config_text(cfg));
  for (int i = 0; i < run.model.params().size(); ++i) CHECK(ck.model.params()[i].value == run.model.params()[i].value);
  CHECK(checkpoint_text(ck.config, ck.model, ck.state) == read_file(root + "/ck.txt"));

  const auto samples = load_samples(ds, "test");
  const auto a = run.model.predict(samples[0].cloud);
  const auto b = ck.model.predict(samples[0].cloud);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].score == b[i].score);
    CHECK(a[i].grasp.c2 == b[i].grasp.c2);
  }

  std::string text = read_file(root + "/ck.txt");
  text[text.find("seed")] = 'x';
  CHECK_THROWS_AS(parse_checkpoint(text), Error);
  CHECK_THROWS_AS(parse_checkpoint("l2g-checkpoint 1\n"), Error);
}

TEST_CASE("training is deterministic") {
  const std::string root = scratch_dir("determinism");
  DatasetConfig data = small_data();
  write_dataset(root, data, generate_samples(data));
  RunConfig cfg = parse_run_config("steps = 5\nM = 8\nnn = 8\n");
  cfg.dataset = root;
  const Dataset ds = load_dataset(root);
  CHECK(trace_csv(run_training(cfg, ds).trace) == trace_csv(run_training(cfg, ds).trace));
}
