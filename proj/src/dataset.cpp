#include "l2g/dataset.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "l2g/config.hpp"

namespace l2g {

namespace fs = std::filesystem;

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt9(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::string shape_name(int index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "s%04d", index);
  return buf;
}

}  // namespace

std::vector<GeneratedSample> generate_samples(const DatasetConfig& cfg) {
  if (cfg.num_shapes < 1 || cfg.views_per_shape < 1 || cfg.grasps_per_shape < 1 || cfg.points_per_view < 1) {
    throw Error(ErrorKind::Config, "dataset counts must be positive");
  }
  if (!(cfg.size_min >= 0.005) || !(cfg.size_max >= cfg.size_min)) {
    throw Error(ErrorKind::InvalidDimensions, "size_min must be >= 0.005 and <= size_max");
  }
  const int test_shapes = cfg.num_shapes < 2 ? 0
                                             : std::clamp(static_cast<int>(std::ceil(cfg.test_fraction * cfg.num_shapes)),
                                                          1, cfg.num_shapes - 1);
  std::vector<GeneratedSample> out;
  for (int s = 0; s < cfg.num_shapes; ++s) {
    Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(s)));
    ShapeSpec spec;
    spec.kind = static_cast<ShapeKind>(rng.index(3));
    auto size = [&]() { return rng.uniform(cfg.size_min, cfg.size_max); };
    switch (spec.kind) {
      case ShapeKind::Box: spec.dims = Vec3(size(), size(), size()); break;
      case ShapeKind::Cylinder: spec.dims = Vec3(0.5 * size(), size(), 0.0); break;
      case ShapeKind::Sphere: spec.dims = Vec3(0.5 * size(), 0.0, 0.0); break;
    }
    spec.yaw = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double rr = cfg.placement_radius * std::sqrt(rng.uniform());
    const double ra = rng.uniform(0.0, 2.0 * std::numbers::pi);
    spec.offset = Eigen::Vector2d(rr * std::cos(ra), rr * std::sin(ra));
    const Shape shape(spec);
    const std::string shape_id = shape_name(s);
    GraspSet grasps = annotate_grasps(shape, cfg.gripper, cfg.grasps_per_shape, rng.next());
    grasps.shape_id = shape_id;
    const bool test = s >= cfg.num_shapes - test_shapes;
    for (int v = 0; v < cfg.views_per_shape; ++v) {
      const double el = deg2rad(rng.uniform(cfg.elevation_min_deg, cfg.elevation_max_deg));
      const double az = rng.uniform(0.0, 2.0 * std::numbers::pi);
      const Vec3 view = -Vec3(std::cos(el) * std::cos(az), std::cos(el) * std::sin(az), std::sin(el));
      GeneratedSample g;
      g.record.id = shape_id + "_v" + std::to_string(v);
      g.record.shape_id = shape_id;
      g.record.shape = spec;
      g.record.view = view;
      g.record.cloud_path = "clouds/" + g.record.id + ".xyz";
      g.record.grasp_path = "grasps/" + g.record.id + ".grasps";
      g.record.split = test ? "test" : "train";
      g.cloud = sample_partial_view(shape, view, cfg.points_per_view, rng.next());
      g.grasps = grasps;
      out.push_back(std::move(g));
    }
  }
  return out;
}

std::string manifest_text(const std::vector<SampleRecord>& records) {
  std::ostringstream os;
  os << "# sample_id shape_id kind dim0 dim1 dim2 yaw offset_x offset_y view_x view_y view_z cloud grasps split\n";
  for (const auto& r : records) {
    os << r.id << ' ' << r.shape_id << ' ' << to_string(r.shape.kind);
    for (int i = 0; i < 3; ++i) os << ' ' << fmt17(r.shape.dims[i]);
    os << ' ' << fmt17(r.shape.yaw) << ' ' << fmt17(r.shape.offset.x()) << ' ' << fmt17(r.shape.offset.y());
    for (int i = 0; i < 3; ++i) os << ' ' << fmt17(r.view[i]);
    os << ' ' << r.cloud_path << ' ' << r.grasp_path << ' ' << r.split << '\n';
  }
  return os.str();
}

std::vector<SampleRecord> parse_manifest(const std::string& text) {
  std::vector<SampleRecord> out;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    SampleRecord r;
    std::string kind;
    ls >> r.id >> r.shape_id >> kind;
    for (int i = 0; i < 3; ++i) ls >> r.shape.dims[i];
    ls >> r.shape.yaw >> r.shape.offset.x() >> r.shape.offset.y();
    for (int i = 0; i < 3; ++i) ls >> r.view[i];
    ls >> r.cloud_path >> r.grasp_path >> r.split;
    if (!ls) throw Error(ErrorKind::Io, "malformed manifest line " + std::to_string(lineno));
    r.shape.kind = shape_kind_from_string(kind);
    out.push_back(std::move(r));
  }
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot read " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file(const std::string& path, const std::string& text) {
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path);
  out << text;
  if (!out) throw Error(ErrorKind::Io, "write failed for " + path);
}

void write_cloud(const std::string& path, const PointCloud& cloud) {
  std::string text;
  for (Eigen::Index i = 0; i < cloud.rows(); ++i) {
    text += fmt9(cloud(i, 0)) + ' ' + fmt9(cloud(i, 1)) + ' ' + fmt9(cloud(i, 2)) + '\n';
  }
  write_file(path, text);
}

PointCloud read_cloud(const std::string& path) {
  std::istringstream is(read_file(path));
  std::vector<Vec3> pts;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    Vec3 p;
    ls >> p.x() >> p.y() >> p.z();
    if (!ls) throw Error(ErrorKind::Io, "malformed point in " + path);
    pts.push_back(p);
  }
  PointCloud cloud(static_cast<Eigen::Index>(pts.size()), 3);
  for (std::size_t i = 0; i < pts.size(); ++i) cloud.row(static_cast<Eigen::Index>(i)) = pts[i].transpose();
  return cloud;
}

void write_grasps(const std::string& path, const std::vector<GraspRecord>& grasps) {
  std::string text;
  for (const auto& r : grasps) {
    const Grasp7& g = r.grasp;
    for (int i = 0; i < 3; ++i) text += fmt9(g.c1[i]) + ' ';
    for (int i = 0; i < 3; ++i) text += fmt9(g.c2[i]) + ' ';
    text += fmt9(g.phi) + ' ' + std::to_string(r.label) + ' ' + fmt9(r.score) + '\n';
  }
  write_file(path, text);
}

std::vector<GraspRecord> read_grasps(const std::string& path) {
  std::istringstream is(read_file(path));
  std::vector<GraspRecord> out;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    GraspRecord r;
    for (int i = 0; i < 3; ++i) ls >> r.grasp.c1[i];
    for (int i = 0; i < 3; ++i) ls >> r.grasp.c2[i];
    ls >> r.grasp.phi >> r.label >> r.score;
    if (!ls) throw Error(ErrorKind::Io, "malformed grasp in " + path);
    out.push_back(r);
  }
  return out;
}

std::string write_dataset(const std::string& root, const DatasetConfig& cfg,
                          const std::vector<GeneratedSample>& samples) {
  std::vector<SampleRecord> records;
  for (const auto& s : samples) {
    write_cloud(root + "/" + s.record.cloud_path, s.cloud);
    std::vector<GraspRecord> grasps;
    for (const auto& g : s.grasps.grasps) grasps.push_back({g.grasp, g.label, -1.0});
    write_grasps(root + "/" + s.record.grasp_path, grasps);
    records.push_back(s.record);
  }
  const std::string manifest = manifest_text(records);
  write_file(root + "/manifest.txt", manifest);
  write_file(root + "/dataset.cfg", dataset_config_text(cfg));
  return manifest;
}

std::vector<SampleRecord> Dataset::split(const std::string& tag) const {
  std::vector<SampleRecord> out;
  for (const auto& r : records) {
    if (tag == "all" || r.split == tag) out.push_back(r);
  }
  return out;
}

std::string Dataset::path(const std::string& relative) const { return root + "/" + relative; }

Dataset load_dataset(const std::string& root) {
  Dataset d;
  d.root = root;
  d.records = parse_manifest(read_file(root + "/manifest.txt"));
  d.config = parse_dataset_config(read_file(root + "/dataset.cfg"));
  return d;
}

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace l2g
