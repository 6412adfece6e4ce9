#include "l2g/pointcloud.hpp"

#include <algorithm>
#include <numeric>

namespace l2g {

IndexList nearest_indices(const PointCloud& cloud, const Vec3& q, Eigen::Index k) {
  const Eigen::Index n = cloud.rows();
  k = std::min(k, n);
  std::vector<double> d(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) d[static_cast<std::size_t>(i)] = (cloud.row(i).transpose() - q).squaredNorm();
  IndexList idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  auto closer = [&](Eigen::Index a, Eigen::Index b) {
    const double da = d[static_cast<std::size_t>(a)], db = d[static_cast<std::size_t>(b)];
    return da < db || (da == db && a < b);
  };
  std::partial_sort(idx.begin(), idx.begin() + k, idx.end(), closer);
  idx.resize(static_cast<std::size_t>(k));
  return idx;
}

Eigen::Index nearest_index(const PointCloud& cloud, const Vec3& q) {
  Eigen::Index best = 0;
  double best_d = (cloud.row(0).transpose() - q).squaredNorm();
  for (Eigen::Index i = 1; i < cloud.rows(); ++i) {
    const double d = (cloud.row(i).transpose() - q).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

Vec3 cloud_origin(const PointCloud& cloud) {
  Vec3 c = cloud.colwise().mean().transpose();
  c.z() = 0.0;
  return c;
}

PointCloud gather(const PointCloud& cloud, const IndexList& indices) {
  PointCloud out(static_cast<Eigen::Index>(indices.size()), 3);
  for (std::size_t i = 0; i < indices.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = cloud.row(indices[i]);
  return out;
}

}  // namespace l2g
