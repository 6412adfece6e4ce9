#pragma once

#include <vector>

#include <Eigen/Dense>

#include "l2g/geometry.hpp"

namespace l2g {

/// N x 3 observed surface points, meters, world frame.
using PointCloud = Eigen::Matrix<double, Eigen::Dynamic, 3>;
using IndexList = std::vector<Eigen::Index>;

/// Indices of the k points nearest to q, ordered by (distance, index).
IndexList nearest_indices(const PointCloud& cloud, const Vec3& q, Eigen::Index k);

/// Index of the nearest point; ties go to the lower index.
Eigen::Index nearest_index(const PointCloud& cloud, const Vec3& q);

/// Horizontal centroid (mean x, mean y, 0). Model inputs are expressed
/// relative to it so the ground height stays meaningful.
Vec3 cloud_origin(const PointCloud& cloud);

PointCloud gather(const PointCloud& cloud, const IndexList& indices);

}  // namespace l2g
