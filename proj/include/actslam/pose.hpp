#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cmath>
#include <numbers>

namespace actslam {

/// Normalize an angle to the half-open interval (-pi, pi].
template <typename Scalar>
Scalar wrap_angle(Scalar angle) {
  constexpr Scalar two_pi = Scalar(2) * std::numbers::pi_v<Scalar>;
  Scalar wrapped = std::remainder(angle, two_pi);
  // std::remainder lands in [-pi, pi]; fold the open end onto +pi.
  if (wrapped <= -std::numbers::pi_v<Scalar>) wrapped = std::numbers::pi_v<Scalar>;
  return wrapped;
}

/// Rotation about +z by `yaw`, i.e. the world orientation of a body frame
/// whose heading is `yaw`.
template <typename Scalar>
Eigen::Matrix<Scalar, 3, 3> yaw_rotation(Scalar yaw) {
  const Scalar c = std::cos(yaw);
  const Scalar s = std::sin(yaw);
  Eigen::Matrix<Scalar, 3, 3> r;
  r << c, -s, Scalar(0),
       s,  c, Scalar(0),
       Scalar(0), Scalar(0), Scalar(1);
  return r;
}

/// A gravity-aligned rigid transform: 3D position plus heading. Roll and
/// pitch are assumed observable elsewhere and are not part of the state.
template <typename Scalar>
struct Pose3Yaw {
  Eigen::Matrix<Scalar, 3, 1> position = Eigen::Matrix<Scalar, 3, 1>::Zero();
  Scalar yaw = Scalar(0);  // rad, in (-pi, pi]

  static Pose3Yaw Identity() { return Pose3Yaw{}; }

  Eigen::Matrix<Scalar, 3, 3> rotation() const { return yaw_rotation(yaw); }

  /// Map a body-frame point into the world frame.
  Eigen::Matrix<Scalar, 3, 1> transform(const Eigen::Matrix<Scalar, 3, 1>& p_body) const {
    return position + rotation() * p_body;
  }

  /// Map a world-frame point into the body frame.
  Eigen::Matrix<Scalar, 3, 1> untransform(const Eigen::Matrix<Scalar, 3, 1>& p_world) const {
    return rotation().transpose() * (p_world - position);
  }
};

using PoseXYZYaw = Pose3Yaw<double>;

/// a * b: first apply b in a's frame, then a. Yaw is re-wrapped.
template <typename Scalar>
Pose3Yaw<Scalar> compose(const Pose3Yaw<Scalar>& a, const Pose3Yaw<Scalar>& b) {
  Pose3Yaw<Scalar> out;
  out.position = a.position + a.rotation() * b.position;
  out.yaw = wrap_angle(a.yaw + b.yaw);
  return out;
}

/// The transform q with compose(p, q) == Identity.
template <typename Scalar>
Pose3Yaw<Scalar> inverse(const Pose3Yaw<Scalar>& p) {
  Pose3Yaw<Scalar> out;
  out.position = -(p.rotation().transpose() * p.position);
  out.yaw = wrap_angle(-p.yaw);
  return out;
}

/// Express `a` in the frame of `b`: relative(a, b) = inverse(b) * a, so that
/// compose(b, relative(a, b)) == a.
template <typename Scalar>
Pose3Yaw<Scalar> relative(const Pose3Yaw<Scalar>& a, const Pose3Yaw<Scalar>& b) {
  return compose(inverse(b), a);
}

}  // namespace actslam
