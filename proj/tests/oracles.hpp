// Reference implementations and fixtures shared by the unit tests and the
// acceptance runner. Everything here is written directly from the textbook
// definitions and deliberately avoids the library's own helpers.
#ifndef REACHLAB_TESTS_ORACLES_HPP_
#define REACHLAB_TESTS_ORACLES_HPP_

#include <Eigen/Core>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "reachlab/errors.hpp"
#include "reachlab/kinematics.hpp"
#include "reachlab/metrics.hpp"
#include "reachlab/streamer.hpp"

namespace oracle {

using reachlab::ArmModel;
using reachlab::JointVector;

// Standard DH link matrix, entries written out by hand.
inline Eigen::Matrix4d dh_matrix(double a, double d, double alpha, double theta) {
  const double ct = std::cos(theta), st = std::sin(theta);
  const double ca = std::cos(alpha), sa = std::sin(alpha);
  Eigen::Matrix4d m;
  m << ct, -st * ca, st * sa, a * ct,
       st, ct * ca, -ct * sa, a * st,
       0.0, sa, ca, d,
       0.0, 0.0, 0.0, 1.0;
  return m;
}

inline Eigen::Matrix4d fk(const ArmModel& model, const JointVector& q) {
  Eigen::Matrix4d t = model.base_frame.matrix();
  for (int i = 0; i < reachlab::kNumJoints; ++i) {
    const auto& r = model.dh[i];
    t = t * dh_matrix(r.a, r.d, r.alpha, q[i] + r.theta_offset);
  }
  return t;
}

inline JointVector random_joints(std::mt19937_64& rng, double span = std::numbers::pi) {
  std::uniform_real_distribution<double> u(-span, span);
  JointVector q;
  for (int i = 0; i < reachlab::kNumJoints; ++i) q[i] = u(rng);
  return q;
}

// A_t = sum_l (gamma*lam)^l delta_{t+l}, stopping after the step at which the
// episode ended. One environment; `bootstrap` is V of the observation after
// the last step.
inline std::vector<double> gae_double_sum(const std::vector<double>& r, const std::vector<double>& v,
                                          const std::vector<int>& done, double bootstrap, double gamma,
                                          double lam) {
  const std::size_t n = r.size();
  auto delta = [&](std::size_t k) {
    const double next = k + 1 < n ? v[k + 1] : bootstrap;
    return r[k] + (done[k] ? 0.0 : gamma * next) - v[k];
  };
  std::vector<double> adv(n, 0.0);
  for (std::size_t t = 0; t < n; ++t) {
    double sum = 0.0;
    for (std::size_t l = 0; t + l < n; ++l) {
      sum += std::pow(gamma * lam, static_cast<double>(l)) * delta(t + l);
      if (done[t + l]) break;
    }
    adv[t] = sum;
  }
  return adv;
}

// Trajectory fixtures sampled at `rate` Hz.
inline reachlab::TrajectoryLog straight_line(double speed = 0.25, double seconds = 4.0, double rate = 200.0) {
  reachlab::TrajectoryLog log{"straight", {}};
  const int n = static_cast<int>(std::lround(seconds * rate));
  for (int k = 0; k <= n; ++k) {
    const double t = k / rate;
    log.samples.push_back({t, Eigen::Vector3d(speed * t, 0.0, 0.0)});
  }
  return log;
}

// x(t) = 10 s^3 - 15 s^4 + 6 s^5, s = t / T, distance 1 m.
inline double quintic_position(double t, double T) {
  const double s = t / T;
  return 10 * std::pow(s, 3) - 15 * std::pow(s, 4) + 6 * std::pow(s, 5);
}
inline double quintic_jerk(double t, double T) {
  const double s = t / T;
  return (60.0 - 360.0 * s + 360.0 * s * s) / (T * T * T);
}
inline reachlab::TrajectoryLog quintic(double T = 1.0, double rate = 200.0) {
  reachlab::TrajectoryLog log{"quintic", {}};
  const int n = static_cast<int>(std::lround(T * rate));
  for (int k = 0; k <= n; ++k) {
    const double t = k / rate;
    log.samples.push_back({t, Eigen::Vector3d(quintic_position(t, T), 0.0, 0.0)});
  }
  return log;
}

// Half circle of radius r from (-r,0,0) to (r,0,0) at constant angular rate.
inline reachlab::TrajectoryLog semicircle(double r = 0.5, double seconds = 2.0, double rate = 200.0) {
  reachlab::TrajectoryLog log{"semicircle", {}};
  const int n = static_cast<int>(std::lround(seconds * rate));
  for (int k = 0; k <= n; ++k) {
    const double t = k / rate;
    const double phi = std::numbers::pi * (1.0 - t / seconds);
    log.samples.push_back({t, Eigen::Vector3d(r * std::cos(phi), r * std::sin(phi), 0.0)});
  }
  return log;
}

// `hits` reach successes and `harvested` full harvests out of `total`.
inline std::vector<reachlab::SuccessRecord> success_records(int total, int hits, int harvested) {
  std::vector<reachlab::SuccessRecord> out;
  for (int k = 0; k < total; ++k) {
    reachlab::SuccessRecord r;
    r.attempt = k;
    const bool hit = k < hits;
    r.final_distance = hit ? 0.01 : 0.05;
    r.reached_in_time = hit;
    r.grasped = r.detached = r.deposited = k < harvested;
    out.push_back(r);
  }
  return out;
}

// Drives the phase machine with random events; invalid ones must throw and
// leave the phase unchanged. Returns the number of safety violations:
// Grasp entered other than from a successful Reach, or Pull other than from
// Grasp.
inline long phase_fuzz(std::mt19937_64& rng, int steps) {
  using namespace reachlab;
  std::uniform_int_distribution<int> pick(0, static_cast<int>(EventKind::kReturnedHome));
  std::uniform_int_distribution<int> count(-1, 3);
  HarvestPhase phase;
  long violations = 0;
  for (int s = 0; s < steps; ++s) {
    HarvestEvent ev{static_cast<EventKind>(pick(rng)), count(rng), 0};
    ev.target = ev.count > 0 ? static_cast<int>(rng() % 3) : -1;
    try {
      const Transition tr = advance_phase(phase, ev);
      if (tr.phase.kind == PhaseKind::kGrasp &&
          !(phase.kind == PhaseKind::kReach && ev.kind == EventKind::kReachSucceeded))
        ++violations;
      if (tr.phase.kind == PhaseKind::kPull && phase.kind != PhaseKind::kGrasp) ++violations;
      if (tr.phase.kind == PhaseKind::kGrasp && tr.gripper != GripperCommand::kClose) ++violations;
      phase = tr.phase;
    } catch (const ProtocolError&) {
    }
    if (phase.kind == PhaseKind::kDone) phase = HarvestPhase{};
  }
  return violations;
}

// Replays a near-goal trace of alternating +-amplitude joint commands through
// the halt monitor. Returns true when, from the first halt on, no command is
// ever emitted again. `halted` reports whether the halt fired at all.
inline bool halt_latches(const reachlab::StreamerConfig& cfg, double amplitude, int steps,
                         std::mt19937_64& rng, bool& halted) {
  using namespace reachlab;
  HaltMonitor monitor;
  std::uniform_real_distribution<double> dist(0.0, 2.0 * cfg.convergence_radius);
  std::uniform_int_distribution<int> joint(0, kNumJoints - 1);
  halted = false;
  for (int k = 0; k < steps; ++k) {
    JointVector dq = JointVector::Zero();
    dq[joint(rng)] = (k % 2 == 0 ? 1.0 : -1.0) * amplitude;
    const StreamDecision d = stream_step(dq, dist(rng), cfg, monitor);
    if (halted && d.kind == StreamDecision::Kind::kCommand) return false;
    if (d.kind == StreamDecision::Kind::kHalt) halted = true;
  }
  return true;
}

}  // namespace oracle

#endif  // REACHLAB_TESTS_ORACLES_HPP_
