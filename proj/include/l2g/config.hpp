#pragma once

// Flat "key = value" run configuration. '#' starts a comment; unknown keys
// and malformed values raise ErrorKind::Config naming the field.

#include <cstdint>
#include <string>
#include <vector>

#include "l2g/dataset.hpp"
#include "l2g/eval.hpp"
#include "l2g/model.hpp"

namespace l2g {

struct RunConfig {
  std::uint64_t seed = 0;
  std::string dataset = "data";
  std::string split = "test";
  Variant variant = Variant::Full;
  double length_scale = 0.1;
  std::vector<double> k_list = {10, 30, 50, 100};
  double tol_x = kMatchTolX;
  double tol_theta_deg = 30.0;

  DatasetConfig data;
  ModelConfig model;
  TrainConfig train;

  /// Propagates seed, variant, length scale and tolerances into the sub-configs.
  void finalize();
  Tolerances tolerances() const;
};

/// Applies the assignments in `text` on top of `base`, validates, finalizes.
RunConfig parse_run_config(const std::string& text, RunConfig base = {});
RunConfig load_run_config(const std::string& path);
/// File contents; an unreadable file is a Config error.
std::string read_config_file(const std::string& path);

/// Effective configuration, every key, re-parseable to identical values.
std::string config_text(const RunConfig& cfg);

/// Raises Config naming the first out-of-range field.
void validate(const RunConfig& cfg);

/// Generation keys only (plus seed).
std::string dataset_config_text(const DatasetConfig& cfg);
DatasetConfig parse_dataset_config(const std::string& text);

std::vector<double> parse_double_list(const std::string& field, const std::string& value);

}  // namespace l2g
