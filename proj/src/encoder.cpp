#include "l2g/encoder.hpp"

namespace l2g {

using diff::Index;
using diff::Matrix;
using diff::Var;

Encoder init_encoder(diff::ParameterSet& params, const EncoderConfig& cfg, Rng& rng) {
  for (auto w : cfg.stage1) {
    if (w < 1) throw Error(ErrorKind::InvalidDimensions, "encoder stage1 width < 1");
  }
  for (auto w : cfg.stage2) {
    if (w < 1) throw Error(ErrorKind::InvalidDimensions, "encoder stage2 width < 1");
  }
  if (cfg.stage1.empty() || cfg.stage2.empty()) {
    throw Error(ErrorKind::InvalidDimensions, "encoder stages need at least one layer");
  }
  Encoder e;
  e.config = cfg;
  e.stage1 = make_mlp(params, "encoder.stage1", 3, cfg.stage1, rng, true);
  e.stage2 = make_mlp(params, "encoder.stage2", 2 * cfg.global_dim(), cfg.stage2, rng, true);
  return e;
}

FeatureBundle encode(diff::Tape& tape, const diff::ParameterSet& params, const Encoder& encoder,
                     const PointCloud& cloud) {
  if (cloud.rows() < 1) throw Error(ErrorKind::EmptySet, "encode on an empty cloud");
  FeatureBundle out;
  out.origin = cloud_origin(cloud);
  Matrix local = (cloud.rowwise() - out.origin.transpose()) / encoder.config.length_scale;
  Var x = tape.constant(std::move(local));
  out.stage1 = apply(tape, params, encoder.stage1, x);
  out.global = diff::col_max(out.stage1);
  Var joined = diff::concat_cols(out.stage1, diff::repeat_rows(out.global, cloud.rows()));
  out.per_point = apply(tape, params, encoder.stage2, joined);
  return out;
}

Neighborhood gather_neighborhood_features(diff::Tape& tape, Var queries, const PointCloud& cloud,
                                          const FeatureBundle& bundle, Index nn, double length_scale) {
  if (nn > cloud.rows()) {
    throw Error(ErrorKind::NeighborhoodTooLarge,
                "nn=" + std::to_string(nn) + " exceeds N=" + std::to_string(cloud.rows()));
  }
  if (nn < 1) throw Error(ErrorKind::NeighborhoodTooLarge, "nn must be >= 1");
  const Matrix& q = queries.value();
  const Index m = q.rows();
  Neighborhood out;
  IndexList flat;
  flat.reserve(static_cast<std::size_t>(m * nn));
  Matrix centroids(m, 3);
  for (Index j = 0; j < m; ++j) {
    IndexList idx = nearest_indices(cloud, q.row(j).transpose(), nn);
    Vec3 c = Vec3::Zero();
    for (auto i : idx) {
      flat.push_back(i);
      c += cloud.row(i).transpose();
    }
    centroids.row(j) = (c / static_cast<double>(nn)).transpose();
    out.neighbors.push_back(std::move(idx));
  }
  Var pooled = diff::segment_max(diff::gather_rows(bundle.per_point, flat), nn);
  Var offset = diff::scale(diff::sub(queries, tape.constant(std::move(centroids))), 1.0 / length_scale);
  out.features = diff::concat_cols(pooled, offset);
  return out;
}

}  // namespace l2g
