#pragma once

// Point-cloud feature extractor: a shared per-point MLP, max-pooled into a
// global feature, then a second per-point MLP over [stage-1 output | global].

#include <cstdint>
#include <vector>

#include "l2g/diffcore.hpp"
#include "l2g/layers.hpp"
#include "l2g/pointcloud.hpp"

namespace l2g {

struct EncoderConfig {
  std::vector<diff::Index> stage1 = {32, 64};  // last width is F_s
  std::vector<diff::Index> stage2 = {64, 32};  // last width is F_p
  /// Coordinates are divided by this length (m) before entering the network.
  double length_scale = 0.1;

  diff::Index global_dim() const { return stage1.back(); }
  diff::Index point_dim() const { return stage2.back(); }
};

struct Encoder {
  EncoderConfig config;
  Mlp stage1;
  Mlp stage2;
};

struct FeatureBundle {
  diff::Var per_point;  // N x F_p
  diff::Var global;     // 1 x F_s
  diff::Var stage1;     // N x F_s, before pooling
  Vec3 origin;
};

Encoder init_encoder(diff::ParameterSet& params, const EncoderConfig& cfg, Rng& rng);

FeatureBundle encode(diff::Tape& tape, const diff::ParameterSet& params, const Encoder& encoder,
                     const PointCloud& cloud);

/// Neighborhood descriptor for each query row: element-wise max of F_p over
/// the nn nearest cloud points, followed by (q - neighbor centroid) / length_scale.
struct Neighborhood {
  diff::Var features;               // M x (F_p + 3)
  std::vector<IndexList> neighbors;  // per query, ordered by distance
};

Neighborhood gather_neighborhood_features(diff::Tape& tape, diff::Var queries, const PointCloud& cloud,
                                          const FeatureBundle& bundle, diff::Index nn,
                                          double length_scale);

}  // namespace l2g
