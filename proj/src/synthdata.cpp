#include "l2g/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace l2g {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kMinDimension = 0.005;

double sign_of(double x) { return x < 0.0 ? -1.0 : 1.0; }

Vec3 random_unit(Rng& rng) {
  Vec3 d(rng.normal(), rng.normal(), rng.normal());
  while (d.norm() < 1e-12) d = Vec3(rng.normal(), rng.normal(), rng.normal());
  return d.normalized();
}

Vec3 any_perpendicular(const Vec3& d) {
  const Vec3 ref = std::abs(d.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  return d.cross(ref).normalized();
}

}  // namespace

const char* to_string(ShapeKind kind) {
  switch (kind) {
    case ShapeKind::Box: return "box";
    case ShapeKind::Cylinder: return "cylinder";
    case ShapeKind::Sphere: return "sphere";
  }
  return "unknown";
}

ShapeKind shape_kind_from_string(const std::string& s) {
  if (s == "box") return ShapeKind::Box;
  if (s == "cylinder") return ShapeKind::Cylinder;
  if (s == "sphere") return ShapeKind::Sphere;
  throw Error(ErrorKind::Config, "unknown shape kind '" + s + "'");
}

const char* to_string(OracleFailure f) {
  switch (f) {
    case OracleFailure::None: return "none";
    case OracleFailure::Contact: return "contact";
    case OracleFailure::Friction: return "friction";
    case OracleFailure::Width: return "width";
    case OracleFailure::Clearance: return "clearance";
    case OracleFailure::Approach: return "approach";
  }
  return "unknown";
}

// Shape ----------------------------------------------------------------------

Shape::Shape(const ShapeSpec& spec) : spec_(spec) {
  auto check = [](double v, const char* what) {
    if (!std::isfinite(v) || v < kMinDimension) {
      throw Error(ErrorKind::InvalidDimensions, std::string(what) + " must be >= 5 mm");
    }
  };
  switch (spec.kind) {
    case ShapeKind::Box:
      check(spec.dims.x(), "box x extent");
      check(spec.dims.y(), "box y extent");
      check(spec.dims.z(), "box z extent");
      break;
    case ShapeKind::Cylinder:
      check(2.0 * spec.dims.x(), "cylinder diameter");
      check(spec.dims.y(), "cylinder height");
      break;
    case ShapeKind::Sphere:
      check(2.0 * spec.dims.x(), "sphere diameter");
      break;
  }
  if (!std::isfinite(spec.yaw) || !spec.offset.allFinite()) {
    throw Error(ErrorKind::InvalidDimensions, "pose must be finite");
  }
  rot_ = Eigen::AngleAxisd(spec.yaw, Vec3::UnitZ()).toRotationMatrix();
  center_ = Vec3(spec.offset.x(), spec.offset.y(), 0.5 * height());
}

double Shape::height() const {
  switch (spec_.kind) {
    case ShapeKind::Box: return spec_.dims.z();
    case ShapeKind::Cylinder: return spec_.dims.y();
    case ShapeKind::Sphere: return 2.0 * spec_.dims.x();
  }
  return 0.0;
}

Vec3 Shape::to_local(const Vec3& p) const { return rot_.transpose() * (p - center_); }
Vec3 Shape::to_world(const Vec3& p) const { return rot_ * p + center_; }
Vec3 Shape::dir_to_world(const Vec3& d) const { return rot_ * d; }

double Shape::sdf(const Vec3& p) const { return local_sdf(to_local(p)); }
Vec3 Shape::normal(const Vec3& p) const { return dir_to_world(local_normal(to_local(p))); }

double Shape::local_sdf(const Vec3& q) const {
  switch (spec_.kind) {
    case ShapeKind::Box: {
      const Vec3 d = q.cwiseAbs() - 0.5 * spec_.dims;
      return d.cwiseMax(0.0).norm() + std::min(d.maxCoeff(), 0.0);
    }
    case ShapeKind::Cylinder: {
      const Eigen::Vector2d d(q.head<2>().norm() - spec_.dims.x(), std::abs(q.z()) - 0.5 * spec_.dims.y());
      return std::min(d.maxCoeff(), 0.0) + d.cwiseMax(0.0).norm();
    }
    case ShapeKind::Sphere:
      return q.norm() - spec_.dims.x();
  }
  return 0.0;
}

Vec3 Shape::local_normal(const Vec3& q) const {
  switch (spec_.kind) {
    case ShapeKind::Box: {
      const Vec3 d = q.cwiseAbs() - 0.5 * spec_.dims;
      if ((d.array() > 0.0).any()) {
        Vec3 g = d.cwiseMax(0.0);
        for (int i = 0; i < 3; ++i) g[i] *= sign_of(q[i]);
        return g.normalized();
      }
      int axis = 0;
      for (int i = 1; i < 3; ++i) {
        if (d[i] > d[axis]) axis = i;
      }
      Vec3 n = Vec3::Zero();
      n[axis] = sign_of(q[axis]);
      return n;
    }
    case ShapeKind::Cylinder: {
      const double rho = q.head<2>().norm();
      const Vec3 radial = rho > 0.0 ? Vec3(q.x() / rho, q.y() / rho, 0.0) : Vec3::UnitX();
      const Vec3 axial(0.0, 0.0, sign_of(q.z()));
      const double d0 = rho - spec_.dims.x();
      const double d1 = std::abs(q.z()) - 0.5 * spec_.dims.y();
      if (d0 > 0.0 || d1 > 0.0) {
        return (std::max(d0, 0.0) * radial + std::max(d1, 0.0) * axial).normalized();
      }
      return d0 >= d1 ? radial : axial;
    }
    case ShapeKind::Sphere: {
      const double r = q.norm();
      return r > 0.0 ? Vec3(q / r) : Vec3::UnitZ();
    }
  }
  return Vec3::UnitZ();
}

SurfacePoint Shape::sample_surface(Rng& rng) const {
  Vec3 p, n;
  switch (spec_.kind) {
    case ShapeKind::Box: {
      const Vec3 e = spec_.dims;
      const double areas[3] = {e.y() * e.z(), e.x() * e.z(), e.x() * e.y()};
      const double total = areas[0] + areas[1] + areas[2];
      double pick = rng.uniform() * total;
      int axis = 0;
      while (axis < 2 && pick >= areas[axis]) pick -= areas[axis++];
      const double s = rng.uniform() < 0.5 ? -1.0 : 1.0;
      for (int i = 0; i < 3; ++i) p[i] = rng.uniform(-0.5, 0.5) * e[i];
      p[axis] = 0.5 * s * e[axis];
      n = Vec3::Zero();
      n[axis] = s;
      break;
    }
    case ShapeKind::Cylinder: {
      const double r = spec_.dims.x(), h = spec_.dims.y();
      const double lateral = 2.0 * kPi * r * h, cap = kPi * r * r;
      const double pick = rng.uniform() * (lateral + 2.0 * cap);
      const double theta = rng.uniform(0.0, 2.0 * kPi);
      if (pick < lateral) {
        p = Vec3(r * std::cos(theta), r * std::sin(theta), rng.uniform(-0.5, 0.5) * h);
        n = Vec3(std::cos(theta), std::sin(theta), 0.0);
      } else {
        const double s = pick < lateral + cap ? 1.0 : -1.0;
        const double rho = r * std::sqrt(rng.uniform());
        p = Vec3(rho * std::cos(theta), rho * std::sin(theta), 0.5 * s * h);
        n = Vec3(0.0, 0.0, s);
      }
      break;
    }
    case ShapeKind::Sphere: {
      n = random_unit(rng);
      p = spec_.dims.x() * n;
      break;
    }
  }
  return {to_world(p), dir_to_world(n)};
}

Shape make_shape(const ShapeSpec& spec) { return Shape(spec); }

PointCloud sample_partial_view(const Shape& shape, const Vec3& view_dir, Eigen::Index n, std::uint64_t seed) {
  if (n < 1) throw Error(ErrorKind::EmptyView, "N must be >= 1");
  const Vec3 toward_camera = -view_dir.normalized();
  Rng rng(seed);
  PointCloud cloud(n, 3);
  Eigen::Index filled = 0;
  const std::int64_t max_attempts = 200 * n + 10000;
  for (std::int64_t attempt = 0; attempt < max_attempts && filled < n; ++attempt) {
    const SurfacePoint s = shape.sample_surface(rng);
    if (s.normal.dot(toward_camera) > 0.0) cloud.row(filled++) = s.point.transpose();
    if (filled == 0 && attempt >= 10000) break;
  }
  if (filled < n) throw Error(ErrorKind::EmptyView, "no surface faces the camera");
  return cloud;
}

// Oracle -----------------------------------------------------------------------

bool antipodal(const Shape& shape, const Grasp7& g, double friction) {
  const Vec3 d = g.c2 - g.c1;
  const double len = d.norm();
  if (len < kMinContactSeparation) return false;
  const Vec3 a = d / len;
  const double limit = std::atan(friction);
  const double at_c1 = std::acos(std::clamp(a.dot(-shape.normal(g.c1)), -1.0, 1.0));
  const double at_c2 = std::acos(std::clamp(a.dot(shape.normal(g.c2)), -1.0, 1.0));
  return at_c1 <= limit && at_c2 <= limit;
}

OracleResult oracle_check(const Shape& shape, const Grasp7& g, const GripperSpec& gripper) {
  auto fail = [](OracleFailure f) { return OracleResult{false, f}; };
  if (!(std::abs(shape.sdf(g.c1)) <= kContactTolerance) || !(std::abs(shape.sdf(g.c2)) <= kContactTolerance)) {
    return fail(OracleFailure::Contact);
  }
  if (!antipodal(shape, g, gripper.friction)) return fail(OracleFailure::Friction);
  if (grasp_width(g) > gripper.max_opening) return fail(OracleFailure::Width);
  const Vec3 v = grasp_approach(g);
  for (const Vec3* c : {&g.c1, &g.c2}) {
    const double lowest = std::min(c->z(), c->z() - gripper.finger_length * v.z());
    if (lowest - gripper.clearance < 0.0) return fail(OracleFailure::Clearance);
  }
  if (!(g.phi >= 0.0 && g.phi <= kPi)) return fail(OracleFailure::Approach);
  return {true, OracleFailure::None};
}

// Annotation -------------------------------------------------------------------

std::vector<Grasp7> GraspSet::positives() const {
  std::vector<Grasp7> out;
  for (const auto& g : grasps) {
    if (g.label == 1) out.push_back(g.grasp);
  }
  return out;
}

std::vector<Grasp7> GraspSet::negatives() const {
  std::vector<Grasp7> out;
  for (const auto& g : grasps) {
    if (g.label == 0) out.push_back(g.grasp);
  }
  return out;
}

namespace {

struct ContactPair {
  Vec3 c1;
  Vec3 c2;  // local frame
  Vec3 n2;  // outward normal at c2, local frame
};

constexpr double kEdgeInset = 0.002;

ContactPair box_pair(const Vec3& dims, Rng& rng, double max_tilt) {
  const int axis = static_cast<int>(rng.index(3));
  const Vec3 h = 0.5 * dims;
  Vec3 c1, c2;
  for (int i = 0; i < 3; ++i) {
    const double span = std::max(h[i] - kEdgeInset, 0.0);
    c1[i] = rng.uniform(-span, span);
  }
  c2 = c1;
  c1[axis] = -h[axis];
  c2[axis] = h[axis];
  if (rng.uniform() < 0.5) {
    // Tilt within the cone by sliding c2 on its face.
    const double tilt = rng.uniform(0.0, max_tilt);
    const double dir = rng.uniform(0.0, 2.0 * kPi);
    const double shift = dims[axis] * std::tan(tilt);
    const int u = (axis + 1) % 3, w = (axis + 2) % 3;
    c2[u] += shift * std::cos(dir);
    c2[w] += shift * std::sin(dir);
  }
  Vec3 n2 = Vec3::Zero();
  n2[axis] = 1.0;
  if (rng.uniform() < 0.5) std::swap(c1, c2), n2 = -n2;
  return {c1, c2, n2};
}

ContactPair cylinder_pair(double r, double height, Rng& rng, double max_tilt) {
  const double hh = 0.5 * height;
  if (rng.uniform() < 0.2) {
    // Axial pair through both caps.
    const double rho = (r - kEdgeInset) * std::sqrt(rng.uniform());
    const double theta = rng.uniform(0.0, 2.0 * kPi);
    const Vec3 c1(rho * std::cos(theta), rho * std::sin(theta), -hh);
    Vec3 c2(c1.x(), c1.y(), hh);
    return {c1, c2, Vec3::UnitZ()};
  }
  const double theta = rng.uniform(0.0, 2.0 * kPi);
  const double z = rng.uniform(-hh + kEdgeInset, hh - kEdgeInset);
  const Vec3 c1(r * std::cos(theta), r * std::sin(theta), z);
  double theta2 = theta + kPi;
  double z2 = z;
  if (rng.uniform() < 0.5) {
    const double tilt = rng.uniform(0.0, max_tilt);
    if (rng.uniform() < 0.5) {
      z2 += (rng.uniform() < 0.5 ? -1.0 : 1.0) * 2.0 * r * std::tan(tilt);
    } else {
      // A chord between points 2*tilt off antipodal meets both normals at tilt.
      theta2 += (rng.uniform() < 0.5 ? -1.0 : 1.0) * 2.0 * tilt;
    }
  }
  const Vec3 n2(std::cos(theta2), std::sin(theta2), 0.0);
  return {c1, Vec3(r * n2.x(), r * n2.y(), z2), n2};
}

ContactPair sphere_pair(double r, Rng& rng, double max_tilt) {
  const Vec3 d = random_unit(rng);
  Vec3 n2 = -d;
  if (rng.uniform() < 0.5) {
    const Vec3 axis = Eigen::AngleAxisd(rng.uniform(0.0, 2.0 * kPi), d) * any_perpendicular(d);
    n2 = Eigen::AngleAxisd(2.0 * rng.uniform(0.0, max_tilt), axis) * n2;
  }
  return {r * d, r * n2, n2};
}

}  // namespace

GraspSet annotate_grasps(const Shape& shape, const GripperSpec& gripper, int count, std::uint64_t seed) {
  if (count < 1) throw Error(ErrorKind::InvalidDimensions, "grasp count must be >= 1");
  Rng rng(seed);
  GraspSet set;
  const double max_tilt = 0.8 * std::atan(gripper.friction);
  const ShapeSpec& spec = shape.spec();
  const int max_attempts = 20 * count;
  for (int attempt = 0; attempt < max_attempts && static_cast<int>(set.grasps.size()) < count; ++attempt) {
    ContactPair pair;
    switch (spec.kind) {
      case ShapeKind::Box: pair = box_pair(spec.dims, rng, max_tilt); break;
      case ShapeKind::Cylinder: pair = cylinder_pair(spec.dims.x(), spec.dims.y(), rng, max_tilt); break;
      case ShapeKind::Sphere: pair = sphere_pair(spec.dims.x(), rng, max_tilt); break;
    }
    if (rng.uniform() < 0.25) {
      // Miss the surface: push c2 outward or inward along its normal.
      const double depth = rng.uniform(0.002, 0.01) * (rng.uniform() < 0.5 ? -1.0 : 1.0);
      pair.c2 += depth * pair.n2;
    }
    Grasp7 g{shape.to_world(pair.c1), shape.to_world(pair.c2), rng.uniform(0.0, kPi)};
    if (grasp_width(g) < kMinContactSeparation) continue;
    g = canonicalize(g);
    if (!antipodal(shape, g, gripper.friction)) continue;
    const OracleResult res = oracle_check(shape, g, gripper);
    set.grasps.push_back({g, res.success ? 1 : 0});
    set.reasons.push_back(res.reason);
  }
  return set;
}

}  // namespace l2g
