#pragma once

// Parallel-jaw grasp representations in a world frame with the ground plane
// at z = 0 and +z up.
//
// Frame convention shared by training and evaluation:
//   a = normalize(c2 - c1)            closing axis
//   h = normalize(z_hat x a)          horizontal reference (x_hat if a is vertical)
//   n = a x h                         satisfies n.z >= 0
//   v(phi) = cos(phi) h - sin(phi) n  approach direction, v.z <= 0 on [0, pi]
// The gripper rotation has columns [a, v x a, v].

#include <cmath>
#include <numbers>

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include "l2g/errors.hpp"

namespace l2g {

template <typename Scalar>
using Vector3 = Eigen::Matrix<Scalar, 3, 1>;
template <typename Scalar>
using Matrix3 = Eigen::Matrix<Scalar, 3, 3>;

using Vec3 = Vector3<double>;
using Mat3 = Matrix3<double>;
using Quaternion = Eigen::Quaterniond;

/// Contact-pair grasp (c1, c2, phi) with phi in [0, pi].
template <typename Scalar = double>
struct Grasp7T {
  Vector3<Scalar> c1 = Vector3<Scalar>::Zero();
  Vector3<Scalar> c2 = Vector3<Scalar>::Zero();
  Scalar phi = Scalar(0);
};

/// Jaw center plus unit quaternion.
template <typename Scalar = double>
struct GraspPoseT {
  Vector3<Scalar> x = Vector3<Scalar>::Zero();
  Eigen::Quaternion<Scalar> u = Eigen::Quaternion<Scalar>::Identity();
};

using Grasp7 = Grasp7T<double>;
using GraspPose = GraspPoseT<double>;

inline constexpr double kMinContactSeparation = 1e-6;

template <typename Scalar>
struct ClosingFrame {
  Vector3<Scalar> a;
  Vector3<Scalar> h;
  Vector3<Scalar> n;
};

/// Builds (a, h, n) from a unit closing axis.
template <typename Scalar>
ClosingFrame<Scalar> closing_frame(const Vector3<Scalar>& a) {
  Vector3<Scalar> h = Vector3<Scalar>::UnitZ().cross(a);
  const Scalar s = h.norm();
  if (s < Scalar(1e-12)) {
    h = Vector3<Scalar>::UnitX();
  } else {
    h /= s;
  }
  return {a, h, a.cross(h)};
}

template <typename Scalar>
Vector3<Scalar> approach_direction(const ClosingFrame<Scalar>& f, Scalar phi) {
  using std::cos;
  using std::sin;
  return cos(phi) * f.h - sin(phi) * f.n;
}

template <typename Scalar>
Matrix3<Scalar> gripper_rotation(const Vector3<Scalar>& c1, const Vector3<Scalar>& c2, Scalar phi) {
  const Vector3<Scalar> d = c2 - c1;
  const Scalar len = d.norm();
  if (!(len >= Scalar(kMinContactSeparation))) {
    throw Error(ErrorKind::DegenerateGrasp, "contacts closer than 1e-6 m");
  }
  const auto frame = closing_frame<Scalar>(d / len);
  const Vector3<Scalar> v = approach_direction(frame, phi);
  Matrix3<Scalar> r;
  r.col(0) = frame.a;
  r.col(1) = v.cross(frame.a);
  r.col(2) = v;
  return r;
}

template <typename Scalar>
Scalar grasp_width(const Grasp7T<Scalar>& g) {
  return (g.c2 - g.c1).norm();
}

template <typename Scalar>
Vector3<Scalar> grasp_approach(const Grasp7T<Scalar>& g) {
  return gripper_rotation(g.c1, g.c2, g.phi).col(2);
}

/// Contact closer to the ground becomes c1; ties keep the input order.
/// Swapping the contacts maps phi to pi - phi so the physical grasp is unchanged.
template <typename Scalar>
Grasp7T<Scalar> canonicalize(const Grasp7T<Scalar>& g) {
  if (g.c1.z() > g.c2.z()) {
    return {g.c2, g.c1, Scalar(std::numbers::pi) - g.phi};
  }
  return g;
}

template <typename Scalar>
GraspPoseT<Scalar> grasp7_to_pose(const Grasp7T<Scalar>& g) {
  const Matrix3<Scalar> r = gripper_rotation(g.c1, g.c2, g.phi);
  GraspPoseT<Scalar> p;
  p.x = Scalar(0.5) * (g.c1 + g.c2);
  p.u = Eigen::Quaternion<Scalar>(r);
  p.u.normalize();
  return p;
}

/// Inverse of grasp7_to_pose; the result is canonical.
template <typename Scalar>
Grasp7T<Scalar> pose_to_grasp7(const GraspPoseT<Scalar>& p, Scalar jaw_half_width) {
  using std::atan2;
  const Matrix3<Scalar> r = p.u.normalized().toRotationMatrix();
  const Vector3<Scalar> a = r.col(0);
  const Vector3<Scalar> v = r.col(2);
  const auto frame = closing_frame<Scalar>(a);
  Scalar phi = atan2(-v.dot(frame.n), v.dot(frame.h));
  if (phi < Scalar(0)) {
    // Only reachable through rounding at the interval ends (or a pose
    // approaching from below, which has no Grasp7 form).
    phi = phi < -Scalar(std::numbers::pi) / 2 ? Scalar(std::numbers::pi) : Scalar(0);
  }
  Grasp7T<Scalar> g{p.x - jaw_half_width * a, p.x + jaw_half_width * a, phi};
  return canonicalize(g);
}

template <typename Scalar>
Scalar center_distance(const GraspPoseT<Scalar>& a, const GraspPoseT<Scalar>& b) {
  return (a.x - b.x).norm();
}

/// arccos |<u1, u2>| in [0, pi/2].
template <typename Scalar>
Scalar angular_distance(const Eigen::Quaternion<Scalar>& u1, const Eigen::Quaternion<Scalar>& u2) {
  using std::abs;
  using std::acos;
  Scalar d = abs(u1.coeffs().dot(u2.coeffs()));
  if (d > Scalar(1)) d = Scalar(1);
  return acos(d);
}

template <typename Scalar>
bool grasp_match(const GraspPoseT<Scalar>& pred, const GraspPoseT<Scalar>& gt, Scalar tol_x,
                 Scalar tol_theta) {
  return center_distance(pred, gt) <= tol_x && angular_distance(pred.u, gt.u) <= tol_theta;
}

inline constexpr double deg2rad(double deg) { return deg * std::numbers::pi / 180.0; }

/// Rule-based match tolerances (25 mm, 30 degrees).
inline constexpr double kMatchTolX = 0.025;
inline constexpr double kMatchTolTheta = deg2rad(30.0);

}  // namespace l2g
