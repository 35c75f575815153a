#ifndef REACHLAB_COMMANDS_HPP_
#define REACHLAB_COMMANDS_HPP_

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "reachlab/checkpoint.hpp"
#include "reachlab/config.hpp"
#include "reachlab/gradcheck.hpp"
#include "reachlab/harvest_sim.hpp"

namespace reachlab {

namespace fs = std::filesystem;

// Process exit statuses of the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitNumeric = 3;
inline constexpr int kExitIo = 4;

// Maps an exception raised by a command to its exit status.
int exit_code_for(const std::exception& e);

// Creates `dir` if needed and writes effective_config.json into it.
void prepare_out_dir(const fs::path& dir, const RootConfig& config);

// Writes learning_curve.csv, checkpoints/policy_<iter>.json and policy.json
// (the last checkpoint). `log` receives one progress line per iteration.
TrainResult cmd_train(const RootConfig& config, const fs::path& out_dir, std::ostream* log = nullptr);

void write_learning_curve_header(std::ostream& out);
void write_learning_curve_row(std::ostream& out, const IterationStats& s);

struct EvalReport {
  std::vector<EpisodeOutcome> episodes;
  double mean_final_distance = 0.0;
  double reach_rate = 0.0;  // percent
  double success_radius = 0.0;
};

// Deterministic-mean rollouts; writes eval_report.json when out_dir is set.
EvalReport cmd_eval(const PolicyCheckpoint& checkpoint, const RootConfig& config, int episodes,
                    const fs::path& out_dir = {});

struct SimulateSummary {
  HarvestReport report;
  std::vector<MetricsSummaryRow> metrics;
  int segments_too_short = 0;
};

// Closed-loop harvest over a recorded detection stream; writes targets.jsonl,
// audit.jsonl, commands.jsonl, trajectory.csv, success.jsonl, metrics.csv and
// summary.json.
SimulateSummary cmd_simulate(const PolicyCheckpoint& checkpoint, const std::vector<DetectionRecord>& stream,
                             const RootConfig& config, const fs::path& out_dir);

// Reads a trajectory CSV and writes the per-label metrics table.
std::vector<MetricsSummaryRow> cmd_analyze(std::istream& csv, const RootConfig& config, std::ostream& out);

// Synthetic detections of berries given in the robot frame.
std::vector<DetectionRecord> synthesize_robot_frame_stream(const std::vector<Eigen::Vector3d>& berries,
                                                           const RootConfig& config, SyntheticScene scene);

// Checks the checkpoint matches the environment's observation/action layout.
void check_policy_shape(const ActorParams& actor);

}  // namespace reachlab

#endif  // REACHLAB_COMMANDS_HPP_
