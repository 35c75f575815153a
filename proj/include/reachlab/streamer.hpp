#ifndef REACHLAB_STREAMER_HPP_
#define REACHLAB_STREAMER_HPP_

#include <Eigen/Core>

#include <string>
#include <vector>

#include "reachlab/kinematics.hpp"

namespace reachlab {

struct StreamerConfig {
  JointVector vel_max = JointVector::Constant(1.0);  // rad/s
  double convergence_radius = 0.03;                  // m
  double halt_demand_threshold = 0.5;                // rad/s
  double min_command_duration = 0.02;                // s
  double pull_offset = 0.10;                         // m, downward
  Eigen::Vector3d basket_position = Eigen::Vector3d::Zero();
  // A reach ends once every joint of the proposed command moves less than this.
  double settle_tolerance = 1e-4;  // rad
  double reach_tolerance = 0.02;    // m, success radius of a reach
  double deposit_tolerance = 0.05;  // m, fruit counts as deposited within this of the basket
  double log_rate = 100.0;          // Hz, end-effector samples written while executing

  void validate() const;
};

struct StreamCommand {
  JointVector delta_q = JointVector::Zero();
  double duration = 0.0;
};

// Smallest duration that keeps every joint within its velocity limit:
// max_i |dq_i| / vel_max_i, floored at min_duration for non-zero motion.
// Zero motion yields 0.
double time_parameterize(const JointVector& delta_q, const JointVector& vel_max,
                         double min_duration = 0.0);

// Latched halt state for one reach.
class HaltMonitor {
 public:
  bool halted() const { return halted_; }
  int commands_seen() const { return seen_; }
  void engage() { halted_ = true; }
  void note_command() { ++seen_; }
  // Clears the latch; called when a new Reach phase starts.
  void reset() {
    halted_ = false;
    seen_ = 0;
  }

 private:
  bool halted_ = false;
  int seen_ = 0;
};

struct StreamDecision {
  enum class Kind { kCommand, kSkip, kHalt };
  Kind kind = Kind::kSkip;
  StreamCommand command;
  double implied_speed = 0.0;  // |dq|_2 / duration
};

// Time-parameterises a policy displacement and applies the near-goal halt
// rule: within convergence_radius, a command whose implied joint speed
// exceeds halt_demand_threshold latches the halt.
StreamDecision stream_step(const JointVector& delta_q, double ee_distance_to_target,
                           const StreamerConfig& config, HaltMonitor& monitor);

struct HarvestPlan {
  std::vector<Eigen::Vector3d> targets;
  std::vector<int> order;  // indices into the input list
};

// Targets sorted by distance from the end effector; ties keep input order.
HarvestPlan plan_harvest(const std::vector<Eigen::Vector3d>& targets,
                         const Eigen::Vector3d& ee_position);

enum class PhaseKind { kHome, kScan, kReach, kGrasp, kPull, kTransfer, kRelease, kRescan, kDone };

struct HarvestPhase {
  PhaseKind kind = PhaseKind::kHome;
  int target = -1;  // plan index while reaching

  bool operator==(const HarvestPhase&) const = default;
};

enum class EventKind {
  kStartScan,
  kScanComplete,   // `count` targets found, `target` is the nearest
  kReachSucceeded,
  kReachFailed,
  kGraspClosed,
  kPullDone,
  kTransferDone,
  kReleased,       // `count` targets remain, `target` is the next nearest
  kReturnedHome,
};

struct HarvestEvent {
  EventKind kind = EventKind::kStartScan;
  int count = 0;
  int target = -1;
};

enum class GripperCommand { kNone, kClose, kOpen };

struct Transition {
  HarvestPhase phase;
  GripperCommand gripper = GripperCommand::kNone;
};

std::string to_string(PhaseKind p);
std::string to_string(const HarvestPhase& p);
std::string to_string(EventKind e);
std::string to_string(GripperCommand g);

// Throws ProtocolError naming both the phase and the event when the pair is
// not an edge of the harvest graph.
Transition advance_phase(const HarvestPhase& phase, const HarvestEvent& event);

}  // namespace reachlab

#endif  // REACHLAB_STREAMER_HPP_
