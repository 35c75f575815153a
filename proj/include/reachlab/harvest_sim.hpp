#ifndef REACHLAB_HARVEST_SIM_HPP_
#define REACHLAB_HARVEST_SIM_HPP_

#include <Eigen/Core>

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "reachlab/kinematics.hpp"
#include "reachlab/metrics.hpp"
#include "reachlab/perception.hpp"
#include "reachlab/ppo.hpp"
#include "reachlab/reach_env.hpp"
#include "reachlab/streamer.hpp"

namespace reachlab {

// Segment labels used in the trajectory log.
namespace segment {
inline constexpr const char* kHomeToBerry = "home_to_strawberry";
inline constexpr const char* kBasketToBerry = "basket_to_strawberry";
inline constexpr const char* kPull = "pull";
inline constexpr const char* kBerryToBasket = "strawberry_to_basket";
inline constexpr const char* kReturnHome = "return_home";
}  // namespace segment

struct HarvestSetup {
  ArmModel model;
  EnvConfig env;
  PerceptionConfig perception;
  StreamerConfig streamer;
};

// One line of the phase audit. `kind` is "transition", "target_skipped",
// "halt" or "error"; unused fields stay at their defaults.
struct AuditEntry {
  double t = 0.0;
  std::string kind;
  std::string phase;
  std::string event;
  std::string next_phase;
  std::string gripper;
  int target = -1;  // track id
  std::string detail;
};

struct CommandRecord {
  int seq = 0;
  std::string phase;
  StreamCommand command;
};

struct HarvestReport {
  std::vector<TargetPoint> targets;        // every smoothed target emitted by perception
  std::vector<TargetPoint> plan_targets;   // latest target per track that passed the workspace check
  int tracks = 0;
  int rejected_detections = 0;
  std::vector<AuditEntry> audit;
  std::vector<CommandRecord> commands;
  std::vector<TrajectoryLog> trajectory;
  std::vector<SuccessRecord> attempts;
  int halts = 0;
  bool aborted = false;  // a stage error stopped the run
  double sim_time = 0.0;
};

// Runs the closed loop: detections -> targets -> nearest-first plan -> policy
// reaches streamed as time-parameterised commands -> grasp, pull, transfer,
// release -> rescan. Stage errors end the run and are recorded in the audit.
HarvestReport simulate_harvest(const ActorParams& actor, const std::vector<DetectionRecord>& detections,
                               const HarvestSetup& setup);

// Line-delimited JSON writers.
void write_audit_entry(std::ostream& out, const AuditEntry& e);
void write_command_record(std::ostream& out, const CommandRecord& c);

}  // namespace reachlab

#endif  // REACHLAB_HARVEST_SIM_HPP_
