#include "reachlab/kinematics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "reachlab/errors.hpp"

namespace reachlab {

void JointLimits::validate() const {
  for (int i = 0; i < kNumJoints; ++i) {
    const std::string idx = "[" + std::to_string(i) + "]";
    if (!std::isfinite(pos_min[i]) || !std::isfinite(pos_max[i]) || !(pos_min[i] < pos_max[i]))
      throw ConfigError("arm.pos_min" + idx, "must be finite and below pos_max");
    if (!std::isfinite(vel_max[i]) || !(vel_max[i] > 0.0))
      throw ConfigError("arm.vel_max" + idx, "must be finite and positive");
  }
}

ArmModel ArmModel::ur10e() {
  using std::numbers::pi;
  ArmModel m;
  m.dh = {{
      {0.0, 0.1807, pi / 2, 0.0},
      {-0.6127, 0.0, 0.0, 0.0},
      {-0.57155, 0.0, 0.0, 0.0},
      {0.0, 0.17415, pi / 2, 0.0},
      {0.0, 0.11985, -pi / 2, 0.0},
      {0.0, 0.11655, 0.0, 0.0},
  }};
  // elbow up, tool pointing down
  m.q_default << 0.0, -1.9, 1.9, -pi / 2, -pi / 2, 0.0;
  m.limits.pos_min = JointVector::Constant(-2.0 * pi);
  m.limits.pos_max = JointVector::Constant(2.0 * pi);
  m.limits.pos_min[2] = -pi;
  m.limits.pos_max[2] = pi;
  m.limits.vel_max << 2.0944, 2.0944, 3.1416, 3.1416, 3.1416, 3.1416;
  return m;
}

double ArmModel::reach_radius() const {
  double r = 0.0;
  for (const auto& row : dh) r += std::abs(row.a) + std::abs(row.d);
  return r;
}

void ArmModel::validate() const {
  for (int i = 0; i < kNumJoints; ++i) {
    const auto& r = dh[i];
    if (!std::isfinite(r.a) || !std::isfinite(r.d) || !std::isfinite(r.alpha) ||
        !std::isfinite(r.theta_offset))
      throw ConfigError("arm.dh[" + std::to_string(i) + "]", "non-finite entry");
  }
  if (!is_rigid(base_frame.matrix()))
    throw ConfigError("arm.base_frame", "not a rigid transform");
  if (!q_default.allFinite()) throw ConfigError("arm.q_default", "non-finite entry");
  limits.validate();
  for (int i = 0; i < kNumJoints; ++i)
    if (q_default[i] < limits.pos_min[i] || q_default[i] > limits.pos_max[i])
      throw ConfigError("arm.q_default[" + std::to_string(i) + "]", "outside joint limits");
}

Eigen::Isometry3d dh_transform(const DhRow& row, double q) {
  const double theta = q + row.theta_offset;
  const double ct = std::cos(theta), st = std::sin(theta);
  const double ca = std::cos(row.alpha), sa = std::sin(row.alpha);
  Eigen::Matrix4d m;
  m << ct, -st * ca, st * sa, row.a * ct,
       st, ct * ca, -ct * sa, row.a * st,
       0.0, sa, ca, row.d,
       0.0, 0.0, 0.0, 1.0;
  return Eigen::Isometry3d(m);
}

std::array<Eigen::Isometry3d, kNumJoints + 1> link_frames(const ArmModel& model,
                                                          const JointVector& q) {
  if (!q.allFinite()) throw DomainError("forward kinematics: non-finite joint vector");
  std::array<Eigen::Isometry3d, kNumJoints + 1> frames;
  frames[0] = model.base_frame;
  for (int i = 0; i < kNumJoints; ++i) frames[i + 1] = frames[i] * dh_transform(model.dh[i], q[i]);
  return frames;
}

EEPose forward_kinematics(const ArmModel& model, const JointVector& q) {
  if (!q.allFinite()) throw DomainError("forward kinematics: non-finite joint vector");
  Eigen::Isometry3d t = model.base_frame;
  for (int i = 0; i < kNumJoints; ++i) t = t * dh_transform(model.dh[i], q[i]);
  EEPose pose;
  pose.position = t.translation();
  pose.orientation = Eigen::Quaterniond(t.rotation()).normalized();
  return pose;
}

TrackResult track_joint_target(const JointVector& q, const JointVector& q_target,
                               const JointLimits& limits, double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw DomainError("track_joint_target: dt must be > 0");
  if (!q.allFinite() || !q_target.allFinite())
    throw DomainError("track_joint_target: non-finite joint vector");
  TrackResult out;
  for (int i = 0; i < kNumJoints; ++i) {
    const double max_step = limits.vel_max[i] * dt;
    const double step = std::clamp(q_target[i] - q[i], -max_step, max_step);
    out.q_next[i] = std::clamp(q[i] + step, limits.pos_min[i], limits.pos_max[i]);
  }
  out.qdot = (out.q_next - q) / dt;
  return out;
}

double orientation_error(const Eigen::Quaterniond& a, const Eigen::Quaterniond& b) {
  constexpr double kTol = 1e-6;
  if (std::abs(a.norm() - 1.0) > kTol || std::abs(b.norm() - 1.0) > kTol)
    throw DomainError("orientation_error: quaternion is not unit-norm");
  // 2*acos(|<a,b>|), evaluated through atan2 to keep precision near zero
  const Eigen::Quaterniond rel = a.conjugate() * b;
  return 2.0 * std::atan2(rel.vec().norm(), std::abs(rel.w()));
}

double wrap_angle(double angle) {
  using std::numbers::pi;
  double w = std::remainder(angle, 2.0 * pi);
  if (w <= -pi) w += 2.0 * pi;
  return w;
}

bool is_rigid(const Eigen::Matrix4d& t, double tol) {
  if (!t.allFinite()) return false;
  if (std::abs(t(3, 0)) > tol || std::abs(t(3, 1)) > tol || std::abs(t(3, 2)) > tol ||
      std::abs(t(3, 3) - 1.0) > tol)
    return false;
  const Eigen::Matrix3d r = t.topLeftCorner<3, 3>();
  if ((r.transpose() * r - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() > tol) return false;
  return std::abs(r.determinant() - 1.0) <= tol;
}

}  // namespace reachlab
