#ifndef REACHLAB_KINEMATICS_HPP_
#define REACHLAB_KINEMATICS_HPP_

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <array>

namespace reachlab {

inline constexpr int kNumJoints = 6;

using JointVector = Eigen::Matrix<double, kNumJoints, 1>;

struct JointLimits {
  JointVector pos_min;
  JointVector pos_max;
  JointVector vel_max;  // rad/s

  // Throws ConfigError when bounds are inverted or velocities non-positive.
  void validate() const;
};

// One standard Denavit-Hartenberg row:
//   T_i = Rz(theta_i + theta_offset) * Tz(d) * Tx(a) * Rx(alpha)
struct DhRow {
  double a = 0.0;
  double d = 0.0;
  double alpha = 0.0;
  double theta_offset = 0.0;
};

struct ArmModel {
  std::array<DhRow, kNumJoints> dh{};
  Eigen::Isometry3d base_frame = Eigen::Isometry3d::Identity();
  JointVector q_default = JointVector::Zero();
  JointLimits limits;

  // Nominal UR10e parameters with an elbow-up home pose.
  static ArmModel ur10e();

  // Radius of a sphere around the base origin that contains every reachable
  // tool position: sum(|a_i|) + sum(|d_i|).
  double reach_radius() const;

  void validate() const;
};

struct EEPose {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  Eigen::Quaterniond orientation = Eigen::Quaterniond::Identity();
};

Eigen::Isometry3d dh_transform(const DhRow& row, double q);

// Base frame followed by the six joint frames; element k is the pose of frame
// k (element 0 = base, element 6 = tool).
std::array<Eigen::Isometry3d, kNumJoints + 1> link_frames(const ArmModel& model,
                                                          const JointVector& q);

EEPose forward_kinematics(const ArmModel& model, const JointVector& q);

struct TrackResult {
  JointVector q_next;
  JointVector qdot;
};

// First-order position servo: every joint moves toward its target by at most
// vel_max * dt and is clamped to the position range.
TrackResult track_joint_target(const JointVector& q, const JointVector& q_target,
                               const JointLimits& limits, double dt);

// Geodesic angle between two unit quaternions, in [0, pi].
double orientation_error(const Eigen::Quaterniond& a, const Eigen::Quaterniond& b);

// Wraps an angle to (-pi, pi]. Joints are unbounded internally; this is for
// display only.
double wrap_angle(double angle);

bool is_rigid(const Eigen::Matrix4d& t, double tol = 1e-9);

}  // namespace reachlab

#endif  // REACHLAB_KINEMATICS_HPP_
