#include "dmg/se3.hpp"

#include <cmath>

namespace dmg {

Eigen::Quaterniond canonicalized(const Eigen::Quaterniond& q) {
  Eigen::Quaterniond out = q.normalized();
  bool flip = false;
  if (out.w() < 0.0) {
    flip = true;
  } else if (out.w() == 0.0) {
    // Tie-break on the first nonzero vector component.
    if (out.x() != 0.0) {
      flip = out.x() < 0.0;
    } else if (out.y() != 0.0) {
      flip = out.y() < 0.0;
    } else {
      flip = out.z() < 0.0;
    }
  }
  if (flip) out.coeffs() = -out.coeffs();
  return out;
}

Pose Pose::from_array(const std::array<double, 7>& a) {
  return Pose(RawTag{}, Eigen::Vector3d(a[0], a[1], a[2]),
              Eigen::Quaterniond(a[3], a[4], a[5], a[6]));
}

std::array<double, 7> Pose::to_array() const {
  return {position_.x(),      position_.y(),      position_.z(),
          orientation_.w(),   orientation_.x(),   orientation_.y(),
          orientation_.z()};
}

bool Pose::isApprox(const Pose& other, double tol) const {
  const PoseError e = pose_error(*this, other);
  return e.translational <= tol && e.angular <= tol;
}

Pose compose(const Pose& a, const Pose& b) {
  return Pose(a.position() + a.orientation() * b.position(),
              a.orientation() * b.orientation());
}

Pose inverse(const Pose& p) {
  const Eigen::Quaterniond q_inv = p.orientation().conjugate();
  return Pose(q_inv * (-p.position()), q_inv);
}

Pose relative_target(const Pose& obj, const Pose& target) {
  return compose(inverse(obj), target);
}

Pose retarget(const Pose& rel, const Pose& obj_new) {
  return compose(obj_new, rel);
}

PoseError pose_error(const Pose& a, const Pose& b) {
  PoseError e;
  e.translational = (a.position() - b.position()).norm();
  // atan2 of the relative rotation is exact at equality and keeps full
  // precision for small angles, where acos of the dot product loses half
  // the mantissa.
  const Eigen::Quaterniond r = a.orientation().conjugate() * b.orientation();
  e.angular = 2.0 * std::atan2(r.vec().norm(), std::abs(r.w()));
  return e;
}

double yaw_of(const Eigen::Quaterniond& q) {
  const Eigen::Quaterniond n = q.normalized();
  return std::atan2(2.0 * (n.w() * n.z() + n.x() * n.y()),
                    1.0 - 2.0 * (n.y() * n.y() + n.z() * n.z()));
}

Eigen::Quaterniond yaw_quat(double yaw) {
  return Eigen::Quaterniond(Eigen::AngleAxisd(yaw, Eigen::Vector3d::UnitZ()));
}

double wrap_angle(double a) {
  const double two_pi = 2.0 * M_PI;
  double w = std::fmod(a + M_PI, two_pi);
  if (w <= 0.0) w += two_pi;
  return w - M_PI;
}

Eigen::Vector3d quat_log(const Eigen::Quaterniond& q) {
  Eigen::Quaterniond n = q.normalized();
  if (n.w() < 0.0) n.coeffs() = -n.coeffs();
  const double vec_norm = n.vec().norm();
  const double angle = 2.0 * std::atan2(vec_norm, n.w());
  if (vec_norm < 1e-14) return Eigen::Vector3d::Zero();
  return (angle / vec_norm) * n.vec();
}

Eigen::Quaterniond quat_exp(const Eigen::Vector3d& r) {
  const double angle = r.norm();
  if (angle < 1e-14) {
    Eigen::Quaterniond q(1.0, 0.5 * r.x(), 0.5 * r.y(), 0.5 * r.z());
    return q.normalized();
  }
  const Eigen::Vector3d axis = r / angle;
  return Eigen::Quaterniond(Eigen::AngleAxisd(angle, axis));
}

}  // namespace dmg
