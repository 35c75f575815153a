#include <doctest.h>

#include <numbers>

#include "oracles.hpp"
#include "reachlab/errors.hpp"
#include "reachlab/kinematics.hpp"

using namespace reachlab;
constexpr double kPi = std::numbers::pi;

TEST_CASE("fk matches hand-composed transforms at the home pose") {
  const ArmModel arm = ArmModel::ur10e();
  const Eigen::Matrix4d expect = oracle::fk(arm, arm.q_default);
  const EEPose pose = forward_kinematics(arm, arm.q_default);
  CHECK((pose.position - expect.block<3, 1>(0, 3)).norm() < 1e-12);
  const Eigen::Matrix3d r = pose.orientation.toRotationMatrix();
  CHECK((r - expect.block<3, 3>(0, 0)).norm() < 1e-12);
  // tool points straight down at home
  CHECK(r.col(2).z() == doctest::Approx(-1.0).epsilon(1e-9));
}

TEST_CASE("fk matches the oracle on random configurations") {
  std::mt19937_64 rng(11);
  const ArmModel arm = ArmModel::ur10e();
  for (int k = 0; k < 200; ++k) {
    const JointVector q = oracle::random_joints(rng, 2 * kPi);
    const Eigen::Matrix4d t = oracle::fk(arm, q);
    const EEPose pose = forward_kinematics(arm, q);
    REQUIRE((pose.position - t.block<3, 1>(0, 3)).norm() < 1e-9);
    REQUIRE(orientation_error(pose.orientation, Eigen::Quaterniond(Eigen::Matrix3d(t.block<3, 3>(0, 0)))) < 1e-7);
  }
}

TEST_CASE("toy arm with unit links and a shifted base") {
  ArmModel arm = ArmModel::ur10e();
  for (auto& r : arm.dh) r = DhRow{1.0, 0.0, 0.0, 0.0};
  arm.base_frame = Eigen::Translation3d(0.0, 0.0, 0.5) * Eigen::Isometry3d::Identity();
  // straight planar chain along x
  CHECK((forward_kinematics(arm, JointVector::Zero()).position - Eigen::Vector3d(6, 0, 0.5)).norm() < 1e-12);
  JointVector q = JointVector::Zero();
  q[0] = kPi / 2;
  CHECK((forward_kinematics(arm, q).position - Eigen::Vector3d(0, 6, 0.5)).norm() < 1e-12);
}

TEST_CASE("last joint leaves the wrist centre in place") {
  const ArmModel arm = ArmModel::ur10e();
  std::mt19937_64 rng(3);
  for (int k = 0; k < 20; ++k) {
    JointVector q = oracle::random_joints(rng);
    const auto before = link_frames(arm, q);
    const EEPose p0 = forward_kinematics(arm, q);
    q[5] += 1.3;
    const auto after = link_frames(arm, q);
    const EEPose p1 = forward_kinematics(arm, q);
    CHECK((before[5].translation() - after[5].translation()).norm() < 1e-12);
    CHECK(orientation_error(p0.orientation, p1.orientation) > 0.5);
  }
}

TEST_CASE("joint angles are periodic") {
  const ArmModel arm = ArmModel::ur10e();
  JointVector q = arm.q_default;
  const EEPose a = forward_kinematics(arm, q);
  q[0] += 2 * kPi;
  const EEPose b = forward_kinematics(arm, q);
  CHECK((a.position - b.position).norm() < 1e-12);
  CHECK(orientation_error(a.orientation, b.orientation) < 1e-7);
}

TEST_CASE("reachable positions stay inside the reach sphere") {
  const ArmModel arm = ArmModel::ur10e();
  std::mt19937_64 rng(5);
  const double r = arm.reach_radius();
  for (int k = 0; k < 1000; ++k) {
    const JointVector q = oracle::random_joints(rng);
    CHECK((forward_kinematics(arm, q).position - arm.base_frame.translation()).norm() <= r + 1e-12);
  }
}

TEST_CASE("tracking saturates at vel_max * dt") {
  JointLimits lim = ArmModel::ur10e().limits;
  lim.vel_max = JointVector::Constant(1.0);
  const JointVector q = JointVector::Zero();

  SUBCASE("fixed point") {
    const TrackResult r = track_joint_target(q, q, lim, 0.1);
    CHECK(r.q_next == q);
    CHECK(r.qdot.isZero());
  }
  SUBCASE("half a radian away moves exactly 0.1") {
    JointVector target = q;
    target[2] = -0.5;
    const TrackResult r = track_joint_target(q, target, lim, 0.1);
    CHECK(r.q_next[2] == doctest::Approx(-0.1).epsilon(1e-15));
    CHECK(r.qdot[2] == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(r.q_next[0] == 0.0);
  }
  SUBCASE("short moves land on the target") {
    JointVector target = q;
    target[1] = 0.04;
    CHECK(track_joint_target(q, target, lim, 0.1).q_next[1] == doctest::Approx(0.04));
  }
  SUBCASE("clamped at the position limit") {
    JointLimits tight = lim;
    tight.pos_max[0] = 0.05;
    JointVector target = q;
    target[0] = 1.0;
    CHECK(track_joint_target(q, target, tight, 0.1).q_next[0] == 0.05);
  }
  SUBCASE("velocity bound holds for random targets") {
    std::mt19937_64 rng(9);
    JointLimits l2 = lim;
    for (int i = 0; i < 6; ++i) l2.vel_max[i] = 0.5 + i;
    for (int k = 0; k < 1000; ++k) {
      const JointVector a = oracle::random_joints(rng), b = oracle::random_joints(rng);
      const TrackResult r = track_joint_target(a, b, l2, 1.0 / 60.0);
      for (int i = 0; i < 6; ++i) REQUIRE(std::abs(r.q_next[i] - a[i]) <= l2.vel_max[i] / 60.0 + 1e-12);
    }
  }
}

TEST_CASE("orientation error") {
  const Eigen::Quaterniond a(Eigen::AngleAxisd(0.4, Eigen::Vector3d(1, 2, 3).normalized()));
  CHECK(orientation_error(a, a) == doctest::Approx(0.0).epsilon(1e-7));

  const Eigen::Quaterniond z90 = a * Eigen::Quaterniond(Eigen::AngleAxisd(kPi / 2, Eigen::Vector3d::UnitZ()));
  CHECK(orientation_error(a, z90) == doctest::Approx(kPi / 2).epsilon(1e-12));
  // trace formula: cos(theta) = (tr(Ra^T Rb) - 1) / 2
  const double tr = (a.toRotationMatrix().transpose() * z90.toRotationMatrix()).trace();
  CHECK(std::acos((tr - 1.0) / 2.0) == doctest::Approx(orientation_error(a, z90)).epsilon(1e-9));

  for (const Eigen::Vector3d& axis : {Eigen::Vector3d(1, 0, 0), Eigen::Vector3d(1, -1, 2).normalized()}) {
    const Eigen::Quaterniond flip = a * Eigen::Quaterniond(Eigen::AngleAxisd(kPi, axis));
    CHECK(orientation_error(a, flip) == doctest::Approx(kPi).epsilon(1e-7));
  }

  std::mt19937_64 rng(21);
  for (int k = 0; k < 100; ++k) {
    const Eigen::Quaterniond p = Eigen::Quaterniond::UnitRandom(), q = Eigen::Quaterniond::UnitRandom();
    const Eigen::Quaterniond neg(-p.w(), -p.x(), -p.y(), -p.z());
    CHECK(orientation_error(p, q) == doctest::Approx(orientation_error(q, p)).epsilon(1e-12));
    CHECK(orientation_error(neg, q) == doctest::Approx(orientation_error(p, q)).epsilon(1e-12));
  }
}

TEST_CASE("limits and model validation") {
  ArmModel arm = ArmModel::ur10e();
  CHECK_NOTHROW(arm.validate());
  arm.limits.vel_max[3] = 0.0;
  CHECK_THROWS_AS(arm.validate(), ConfigError);
  arm = ArmModel::ur10e();
  arm.limits.pos_min[0] = arm.limits.pos_max[0] + 1.0;
  CHECK_THROWS_AS(arm.validate(), ConfigError);
}

TEST_CASE("rigid transform check") {
  Eigen::Matrix4d t = Eigen::Matrix4d::Identity();
  CHECK(is_rigid(t));
  t(0, 0) = -1.0;  // reflection
  CHECK_FALSE(is_rigid(t));
  t = Eigen::Matrix4d::Identity();
  t(3, 0) = 0.1;
  CHECK_FALSE(is_rigid(t));
}
