#pragma once

// Procedural convex shapes resting on the ground plane, partial-view clouds,
// analytic antipodal grasp annotation and the rule-based grasp oracle.

#include <cstdint>
#include <string>
#include <vector>

#include "l2g/geometry.hpp"
#include "l2g/heads.hpp"
#include "l2g/pointcloud.hpp"
#include "l2g/random.hpp"

namespace l2g {

enum class ShapeKind { Box, Cylinder, Sphere };

const char* to_string(ShapeKind kind);
ShapeKind shape_kind_from_string(const std::string& s);

/// dims: box (x, y, z extents); cylinder (radius, height, -); sphere (radius, -, -).
/// The shape is rotated by yaw about +z, centered above (offset.x, offset.y)
/// and lifted so its lowest point touches z = 0.
struct ShapeSpec {
  ShapeKind kind = ShapeKind::Box;
  Vec3 dims = Vec3(0.08, 0.08, 0.08);
  double yaw = 0.0;
  Eigen::Vector2d offset = Eigen::Vector2d::Zero();
};

struct SurfacePoint {
  Vec3 point;
  Vec3 normal;
};

class Shape {
 public:
  /// Throws InvalidDimensions when a dimension is below 5 mm or not finite.
  explicit Shape(const ShapeSpec& spec);

  const ShapeSpec& spec() const { return spec_; }
  Vec3 center() const { return center_; }
  double height() const;

  double sdf(const Vec3& p) const;
  /// Unit outward normal (SDF gradient) at p.
  Vec3 normal(const Vec3& p) const;
  /// Uniform by area over the whole surface.
  SurfacePoint sample_surface(Rng& rng) const;

  Vec3 to_local(const Vec3& p) const;
  Vec3 to_world(const Vec3& p) const;
  Vec3 dir_to_world(const Vec3& d) const;

 private:
  double local_sdf(const Vec3& q) const;
  Vec3 local_normal(const Vec3& q) const;

  ShapeSpec spec_;
  Mat3 rot_;
  Vec3 center_;
};

Shape make_shape(const ShapeSpec& spec);

/// N points sampled uniformly over the part of the surface whose outward
/// normal faces the camera (n . -view > 0). Throws EmptyView.
PointCloud sample_partial_view(const Shape& shape, const Vec3& view_dir, Eigen::Index n, std::uint64_t seed);

struct GripperSpec {
  double max_opening = 0.14;
  double finger_length = 0.04;
  double friction = 0.5;  // mu
  double clearance = 0.005;
};

enum class OracleFailure { None, Contact, Friction, Width, Clearance, Approach };

const char* to_string(OracleFailure f);

struct OracleResult {
  bool success = false;
  OracleFailure reason = OracleFailure::None;
};

inline constexpr double kContactTolerance = 1e-3;

/// Contacts on the surface, antipodal within the friction cone, width within
/// the opening, fingers (segments ending at the contacts along the approach,
/// dilated by the clearance) above the ground, approach from above.
/// Checks run in that order and the first failure is reported.
OracleResult oracle_check(const Shape& shape, const Grasp7& grasp, const GripperSpec& gripper);

/// Friction-cone condition alone.
bool antipodal(const Shape& shape, const Grasp7& grasp, double friction);

struct GraspSet {
  std::vector<LabeledGrasp> grasps;
  std::vector<OracleFailure> reasons;  // parallel to grasps
  std::string shape_id;

  std::vector<Grasp7> positives() const;
  std::vector<Grasp7> negatives() const;
};

/// Samples `count` antipodal candidates (exact, tilted within the friction
/// cone, or pushed off the surface), labels each with oracle_check and keeps
/// those satisfying the friction condition. Grasps are canonical.
GraspSet annotate_grasps(const Shape& shape, const GripperSpec& gripper, int count, std::uint64_t seed);

}  // namespace l2g
