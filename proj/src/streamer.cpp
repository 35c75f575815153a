#include "reachlab/streamer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "reachlab/errors.hpp"

namespace reachlab {

void StreamerConfig::validate() const {
  for (int i = 0; i < kNumJoints; ++i)
    if (!(vel_max[i] > 0.0) || !std::isfinite(vel_max[i]))
      throw ConfigError("streamer.vel_max[" + std::to_string(i) + "]", "must be > 0");
  if (!(convergence_radius > 0.0)) throw ConfigError("streamer.convergence_radius", "must be > 0");
  if (!(halt_demand_threshold > 0.0)) throw ConfigError("streamer.halt_demand_threshold", "must be > 0");
  if (!(min_command_duration > 0.0)) throw ConfigError("streamer.min_command_duration", "must be > 0");
  if (!(pull_offset > 0.0)) throw ConfigError("streamer.pull_offset", "must be > 0");
  if (!basket_position.allFinite()) throw ConfigError("streamer.basket_position", "must be finite");
  if (!(settle_tolerance > 0.0)) throw ConfigError("streamer.settle_tolerance", "must be > 0");
  if (!(reach_tolerance > 0.0)) throw ConfigError("streamer.reach_tolerance", "must be > 0");
  if (!(deposit_tolerance > 0.0)) throw ConfigError("streamer.deposit_tolerance", "must be > 0");
  if (!(log_rate > 0.0)) throw ConfigError("streamer.log_rate", "must be > 0");
}

double time_parameterize(const JointVector& delta_q, const JointVector& vel_max, double min_duration) {
  if (!delta_q.allFinite()) throw DomainError("time_parameterize: non-finite displacement");
  if (!(vel_max.array() > 0.0).all()) throw DomainError("time_parameterize: vel_max must be positive");
  double duration = 0.0;
  for (int i = 0; i < kNumJoints; ++i) duration = std::max(duration, std::abs(delta_q[i]) / vel_max[i]);
  if (duration == 0.0) return 0.0;
  duration = std::max(duration, min_duration);
  // the quotient may round down; nudge until every joint is feasible
  for (int i = 0; i < kNumJoints; ++i)
    while (duration * vel_max[i] < std::abs(delta_q[i]))
      duration = std::nextafter(duration, std::numeric_limits<double>::infinity());
  return duration;
}

StreamDecision stream_step(const JointVector& delta_q, double ee_distance_to_target,
                           const StreamerConfig& config, HaltMonitor& monitor) {
  StreamDecision d;
  if (monitor.halted()) {
    d.kind = StreamDecision::Kind::kHalt;
    return d;
  }
  d.command.delta_q = delta_q;
  d.command.duration = time_parameterize(delta_q, config.vel_max, config.min_command_duration);
  if (d.command.duration == 0.0) {
    d.kind = StreamDecision::Kind::kSkip;
    return d;
  }
  d.implied_speed = delta_q.norm() / d.command.duration;
  if (ee_distance_to_target <= config.convergence_radius &&
      d.implied_speed > config.halt_demand_threshold) {
    monitor.engage();
    d.kind = StreamDecision::Kind::kHalt;
    return d;
  }
  monitor.note_command();
  d.kind = StreamDecision::Kind::kCommand;
  return d;
}

HarvestPlan plan_harvest(const std::vector<Eigen::Vector3d>& targets,
                         const Eigen::Vector3d& ee_position) {
  HarvestPlan plan;
  plan.order.resize(targets.size());
  std::iota(plan.order.begin(), plan.order.end(), 0);
  std::vector<double> dist(targets.size());
  for (std::size_t i = 0; i < targets.size(); ++i) dist[i] = (targets[i] - ee_position).norm();
  std::stable_sort(plan.order.begin(), plan.order.end(),
                   [&](int a, int b) { return dist[a] < dist[b]; });
  for (int i : plan.order) plan.targets.push_back(targets[i]);
  return plan;
}

std::string to_string(PhaseKind p) {
  switch (p) {
    case PhaseKind::kHome: return "Home";
    case PhaseKind::kScan: return "Scan";
    case PhaseKind::kReach: return "Reach";
    case PhaseKind::kGrasp: return "Grasp";
    case PhaseKind::kPull: return "Pull";
    case PhaseKind::kTransfer: return "Transfer";
    case PhaseKind::kRelease: return "Release";
    case PhaseKind::kRescan: return "Rescan";
    case PhaseKind::kDone: return "Done";
  }
  return "?";
}

std::string to_string(const HarvestPhase& p) {
  if (p.kind == PhaseKind::kReach) return "Reach(" + std::to_string(p.target) + ")";
  return to_string(p.kind);
}

std::string to_string(EventKind e) {
  switch (e) {
    case EventKind::kStartScan: return "start_scan";
    case EventKind::kScanComplete: return "scan_complete";
    case EventKind::kReachSucceeded: return "reach_succeeded";
    case EventKind::kReachFailed: return "reach_failed";
    case EventKind::kGraspClosed: return "grasp_closed";
    case EventKind::kPullDone: return "pull_done";
    case EventKind::kTransferDone: return "transfer_done";
    case EventKind::kReleased: return "released";
    case EventKind::kReturnedHome: return "returned_home";
  }
  return "?";
}

std::string to_string(GripperCommand g) {
  switch (g) {
    case GripperCommand::kNone: return "none";
    case GripperCommand::kClose: return "close";
    case GripperCommand::kOpen: return "open";
  }
  return "?";
}

Transition advance_phase(const HarvestPhase& phase, const HarvestEvent& event) {
  auto reject = [&]() -> Transition {
    throw ProtocolError("event '" + to_string(event.kind) + "' is not valid in phase " +
                        to_string(phase));
  };
  auto reach_or = [&](PhaseKind otherwise) -> Transition {
    if (event.count < 0) reject();
    if (event.count == 0) return {{otherwise, -1}, GripperCommand::kNone};
    if (event.target < 0) reject();
    return {{PhaseKind::kReach, event.target}, GripperCommand::kNone};
  };

  switch (phase.kind) {
    case PhaseKind::kHome:
      if (event.kind == EventKind::kStartScan) return {{PhaseKind::kScan, -1}};
      // scanning from the parked home pose
      if (event.kind == EventKind::kScanComplete) return reach_or(PhaseKind::kDone);
      break;
    case PhaseKind::kScan:
      if (event.kind == EventKind::kScanComplete) return reach_or(PhaseKind::kDone);
      break;
    case PhaseKind::kReach:
      if (event.kind == EventKind::kReachSucceeded) return {{PhaseKind::kGrasp, -1}, GripperCommand::kClose};
      if (event.kind == EventKind::kReachFailed) return {{PhaseKind::kRescan, -1}};
      break;
    case PhaseKind::kGrasp:
      if (event.kind == EventKind::kGraspClosed) return {{PhaseKind::kPull, -1}};
      break;
    case PhaseKind::kPull:
      if (event.kind == EventKind::kPullDone) return {{PhaseKind::kTransfer, -1}};
      break;
    case PhaseKind::kTransfer:
      if (event.kind == EventKind::kTransferDone) return {{PhaseKind::kRelease, -1}, GripperCommand::kOpen};
      break;
    case PhaseKind::kRelease:
      if (event.kind == EventKind::kReleased) return reach_or(PhaseKind::kRescan);
      break;
    case PhaseKind::kRescan:
      if (event.kind == EventKind::kReturnedHome) return {{PhaseKind::kScan, -1}};
      break;
    case PhaseKind::kDone:
      break;
  }
  return reject();
}

}  // namespace reachlab
