#pragma once

// Procedural dataset generation and the on-disk layout:
//   <root>/manifest.txt        one record per sample
//   <root>/dataset.cfg         generation parameters (key = value)
//   <root>/clouds/<id>.xyz     "x y z" per line, 9 significant digits
//   <root>/grasps/<id>.grasps  "c1x c1y c1z c2x c2y c2z phi label score" per line

#include <cstdint>
#include <string>
#include <vector>

#include "l2g/synthdata.hpp"

namespace l2g {

struct DatasetConfig {
  int num_shapes = 20;
  int views_per_shape = 2;
  int grasps_per_shape = 200;
  Eigen::Index points_per_view = 512;
  double size_min = 0.06;
  double size_max = 0.15;
  double test_fraction = 0.2;
  double elevation_min_deg = 30.0;
  double elevation_max_deg = 60.0;
  double placement_radius = 0.1;
  GripperSpec gripper;
  std::uint64_t seed = 0;
};

struct SampleRecord {
  std::string id;
  std::string shape_id;
  ShapeSpec shape;
  Vec3 view = Vec3(0, 0, -1);
  std::string cloud_path;  // relative to the dataset root
  std::string grasp_path;
  std::string split;  // "train" or "test"
};

/// Grasp file line; label and score are -1 when absent.
struct GraspRecord {
  Grasp7 grasp;
  int label = -1;
  double score = -1.0;
};

struct GeneratedSample {
  SampleRecord record;
  PointCloud cloud;
  GraspSet grasps;
};

/// Pure function of the config: shapes, views, clouds and annotations.
std::vector<GeneratedSample> generate_samples(const DatasetConfig& cfg);

/// Writes the dataset and returns the manifest text.
std::string write_dataset(const std::string& root, const DatasetConfig& cfg,
                          const std::vector<GeneratedSample>& samples);

struct Dataset {
  std::string root;
  DatasetConfig config;
  std::vector<SampleRecord> records;

  std::vector<SampleRecord> split(const std::string& tag) const;
  std::string path(const std::string& relative) const;
};

Dataset load_dataset(const std::string& root);

std::string manifest_text(const std::vector<SampleRecord>& records);
std::vector<SampleRecord> parse_manifest(const std::string& text);

void write_cloud(const std::string& path, const PointCloud& cloud);
PointCloud read_cloud(const std::string& path);
void write_grasps(const std::string& path, const std::vector<GraspRecord>& grasps);
std::vector<GraspRecord> read_grasps(const std::string& path);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& text);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(const std::string& bytes);
std::string hex64(std::uint64_t v);

}  // namespace l2g
