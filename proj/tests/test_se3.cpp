#include <random>

#include "doctest.h"

#include "dmg/se3.hpp"

using namespace dmg;

namespace {

Pose random_pose(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::Quaterniond q(n(rng), n(rng), n(rng), n(rng));
  while (q.norm() < 1e-6) q = Eigen::Quaterniond(n(rng), n(rng), n(rng), n(rng));
  return Pose(Eigen::Vector3d(u(rng), u(rng), u(rng)), q);
}

}  // namespace

TEST_CASE("quaternion canonicalization maps q and -q to identical storage") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    Eigen::Quaterniond q(n(rng), n(rng), n(rng), n(rng));
    if (q.norm() < 1e-6) continue;
    const Eigen::Quaterniond a = canonicalized(q);
    const Eigen::Quaterniond b =
        canonicalized(Eigen::Quaterniond(-q.w(), -q.x(), -q.y(), -q.z()));
    CHECK(a.w() == b.w());
    CHECK(a.x() == b.x());
    CHECK(a.y() == b.y());
    CHECK(a.z() == b.z());
    CHECK(a.w() >= 0.0);
    CHECK(a.norm() == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("canonicalization tie-break when the scalar part is zero") {
  // 180-degree rotation about z: w == 0, z == +/-1.
  const Eigen::Quaterniond a = canonicalized(Eigen::Quaterniond(0, 0, 0, 1));
  const Eigen::Quaterniond b = canonicalized(Eigen::Quaterniond(0, 0, 0, -1));
  CHECK(a.z() == 1.0);
  CHECK(b.z() == 1.0);
}

TEST_CASE("pose array round trip preserves the wire order") {
  const Pose p(Eigen::Vector3d(0.1, -0.2, 0.3), yaw_quat(0.5));
  const auto a = p.to_array();
  CHECK(a[0] == 0.1);
  CHECK(a[1] == -0.2);
  CHECK(a[2] == 0.3);
  // qw first in the quaternion block.
  CHECK(a[3] == doctest::Approx(std::cos(0.25)).epsilon(1e-15));
  CHECK(a[6] == doctest::Approx(std::sin(0.25)).epsilon(1e-15));
  const Pose q = Pose::from_array(a);
  CHECK(q.to_array() == a);
}

TEST_CASE("compose with identity and inverse round trip") {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 100; ++i) {
    const Pose p = random_pose(rng);
    const Pose e1 = compose(p, Pose::identity());
    const Pose e2 = compose(Pose::identity(), p);
    CHECK(pose_error(e1, p).translational <= 1e-12);
    CHECK(pose_error(e1, p).angular <= 1e-12);
    CHECK(pose_error(e2, p).translational <= 1e-12);

    const Pose id = compose(inverse(p), p);
    CHECK(pose_error(id, Pose::identity()).translational <= 1e-12);
    CHECK(pose_error(id, Pose::identity()).angular <= 1e-12);
  }
}

TEST_CASE("composition is associative") {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 50; ++i) {
    const Pose a = random_pose(rng), b = random_pose(rng),
               c = random_pose(rng);
    const Pose ab_c = compose(compose(a, b), c);
    const Pose a_bc = compose(a, compose(b, c));
    CHECK(pose_error(ab_c, a_bc).translational <= 1e-12);
    CHECK(pose_error(ab_c, a_bc).angular <= 1e-12);
  }
}

TEST_CASE("relative_target followed by retarget reconstructs the target") {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 200; ++i) {
    const Pose obj = random_pose(rng);
    const Pose target = random_pose(rng);
    const Pose rel = relative_target(obj, target);
    const Pose back = retarget(rel, obj);
    CHECK(pose_error(back, target).translational <= 1e-12);
    CHECK(pose_error(back, target).angular <= 1e-12);
  }
}

TEST_CASE("retargeting onto a moved object transports the goal rigidly") {
  // An object at the origin with a goal 10 cm above it; moving the object
  // and yawing it a quarter turn moves the goal the same way.
  const Pose obj(Eigen::Vector3d(0, 0, 0), Eigen::Quaterniond::Identity());
  const Pose target(Eigen::Vector3d(0, 0, 0.1), Eigen::Quaterniond::Identity());
  const Pose rel = relative_target(obj, target);
  const Pose obj_new(Eigen::Vector3d(0.3, -0.2, 0.0), yaw_quat(M_PI / 2));
  const Pose goal = retarget(rel, obj_new);
  CHECK(goal.position().x() == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(goal.position().y() == doctest::Approx(-0.2).epsilon(1e-12));
  CHECK(goal.position().z() == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(std::abs(wrap_angle(yaw_of(goal.orientation()) - M_PI / 2)) <= 1e-12);
}

TEST_CASE("pose_error is symmetric, zero only at equality") {
  std::mt19937_64 rng(13);
  for (int i = 0; i < 50; ++i) {
    const Pose a = random_pose(rng), b = random_pose(rng);
    const PoseError ab = pose_error(a, b), ba = pose_error(b, a);
    CHECK(ab.translational == doctest::Approx(ba.translational).epsilon(1e-15));
    CHECK(ab.angular == doctest::Approx(ba.angular).epsilon(1e-12));
    CHECK(pose_error(a, a).translational == 0.0);
    CHECK(pose_error(a, a).angular == 0.0);
    CHECK(ab.angular >= 0.0);
    CHECK(ab.angular <= M_PI + 1e-12);
  }
}

TEST_CASE("yaw helpers agree and wrap correctly") {
  for (double yaw : {-3.0, -1.5, -0.1, 0.0, 0.7, 2.9}) {
    CHECK(yaw_of(yaw_quat(yaw)) == doctest::Approx(yaw).epsilon(1e-12));
  }
  CHECK(wrap_angle(M_PI + 0.1) == doctest::Approx(-M_PI + 0.1).epsilon(1e-12));
  CHECK(wrap_angle(-M_PI - 0.1) == doctest::Approx(M_PI - 0.1).epsilon(1e-12));
  CHECK(wrap_angle(0.3) == doctest::Approx(0.3).epsilon(1e-15));
}

TEST_CASE("quaternion log/exp round trip, including near-zero and near-pi") {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> n(0.0, 1.0);
  for (double angle : {1e-12, 1e-7, 0.3, 1.5, 2.8, M_PI - 1e-6}) {
    Eigen::Vector3d axis(n(rng), n(rng), n(rng));
    axis.normalize();
    const Eigen::Vector3d r = angle * axis;
    const Eigen::Vector3d back = quat_log(quat_exp(r));
    CHECK((back - r).norm() <= 1e-9 * std::max(1.0, angle));
  }
  CHECK(quat_log(Eigen::Quaterniond::Identity()).norm() == 0.0);
}

TEST_CASE("transform_point matches compose on a point pose") {
  std::mt19937_64 rng(19);
  for (int i = 0; i < 20; ++i) {
    const Pose p = random_pose(rng);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const Eigen::Vector3d x(u(rng), u(rng), u(rng));
    const Pose as_pose = compose(p, Pose(x, Eigen::Quaterniond::Identity()));
    CHECK((p.transform_point(x) - as_pose.position()).norm() <= 1e-12);
  }
}
