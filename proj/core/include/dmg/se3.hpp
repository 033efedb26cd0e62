#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <array>

namespace dmg {

/// Returns q normalized and sign-canonicalized: the scalar part is kept
/// non-negative, and when it is exactly zero the first nonzero component of
/// (x, y, z) is made positive. q and -q map to the same representative.
Eigen::Quaterniond canonicalized(const Eigen::Quaterniond& q);

/// Rigid transform in 3-D: a translation plus a unit quaternion rotation.
/// The stored quaternion is always normalized and canonicalized, so equal
/// transforms have bitwise-equal storage. Wire/array order is
/// [px, py, pz, qw, qx, qy, qz].
class Pose {
 public:
  Pose() : position_(Eigen::Vector3d::Zero()),
           orientation_(Eigen::Quaterniond::Identity()) {}
  Pose(const Eigen::Vector3d& position, const Eigen::Quaterniond& orientation)
      : position_(position), orientation_(canonicalized(orientation)) {}

  static Pose identity() { return Pose(); }
  static Pose from_array(const std::array<double, 7>& a);
  std::array<double, 7> to_array() const;

  const Eigen::Vector3d& position() const { return position_; }
  const Eigen::Quaterniond& orientation() const { return orientation_; }

  void set_position(const Eigen::Vector3d& p) { position_ = p; }
  void set_orientation(const Eigen::Quaterniond& q) {
    orientation_ = canonicalized(q);
  }

  /// Applies this transform to a point expressed in the local frame.
  Eigen::Vector3d transform_point(const Eigen::Vector3d& p_local) const {
    return position_ + orientation_ * p_local;
  }

  bool isApprox(const Pose& other, double tol = 1e-12) const;

 private:
  struct RawTag {};
  // Trusts the caller's quaternion bits; used when deserializing values this
  // library wrote, where renormalizing would break byte-exact round trips.
  Pose(RawTag, const Eigen::Vector3d& position,
       const Eigen::Quaterniond& orientation)
      : position_(position), orientation_(orientation) {}

  Eigen::Vector3d position_;
  Eigen::Quaterniond orientation_;
};

/// Composition a*b: apply b in a's frame (T_a * T_b).
Pose compose(const Pose& a, const Pose& b);

/// Inverse transform; compose(inverse(p), p) is the identity.
Pose inverse(const Pose& p);

/// Relative transform from an observed object pose to a target pose,
/// expressed in the object frame: inverse(obj) * target.
Pose relative_target(const Pose& obj, const Pose& target);

/// Re-anchors a relative transform onto a new object pose: obj_new * rel.
/// retarget(relative_target(obj, target), obj) == target.
Pose retarget(const Pose& rel, const Pose& obj_new);

struct PoseError {
  double translational = 0.0;  ///< Euclidean distance [m].
  double angular = 0.0;        ///< Absolute rotation angle [rad], in [0, pi].
};

/// Translational and angular distance between two poses. Symmetric; zero
/// iff the poses are equal (up to quaternion sign).
PoseError pose_error(const Pose& a, const Pose& b);

/// Rotation angle of q about +z assuming a yaw-dominant rotation; exact for
/// pure-yaw quaternions. Result in (-pi, pi].
double yaw_of(const Eigen::Quaterniond& q);

/// Quaternion for a rotation of `yaw` radians about +z.
Eigen::Quaterniond yaw_quat(double yaw);

/// Wraps an angle to (-pi, pi].
double wrap_angle(double a);

/// Rotation vector (axis * angle) of q, angle in [0, pi].
Eigen::Vector3d quat_log(const Eigen::Quaterniond& q);

/// Inverse of quat_log: quaternion for rotation vector r.
Eigen::Quaterniond quat_exp(const Eigen::Vector3d& r);

}  // namespace dmg
