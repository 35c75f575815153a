#ifndef REACHLAB_REACH_ENV_HPP_
#define REACHLAB_REACH_ENV_HPP_

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cstdint>
#include <iosfwd>
#include <random>
#include <vector>

#include "reachlab/kinematics.hpp"

namespace reachlab {

using Rng = std::mt19937_64;

inline constexpr int kObsDim = 25;
inline constexpr int kActDim = kNumJoints;

using Observation = Eigen::Matrix<double, kObsDim, 1>;
using Action = JointVector;

// Offsets of each block inside an Observation.
namespace obs_layout {
inline constexpr int kJointPos = 0;
inline constexpr int kJointVel = 6;
inline constexpr int kCmdPos = 12;
inline constexpr int kCmdQuat = 15;  // w, x, y, z
inline constexpr int kPrevAction = 19;
}  // namespace obs_layout

struct PoseCommand {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  Eigen::Quaterniond orientation = Eigen::Quaterniond::Identity();
};

struct Workspace {
  Eigen::Vector3d min = Eigen::Vector3d::Zero();
  Eigen::Vector3d max = Eigen::Vector3d::Zero();

  bool contains(const Eigen::Vector3d& p, double tol = 0.0) const {
    return (p.array() >= min.array() - tol).all() && (p.array() <= max.array() + tol).all();
  }
};

struct RewardWeights {
  double w_pos = 1.0;
  double w_fine = 0.5;
  double w_ori = 0.5;
  double w_act = 0.01;
  double w_vel = 0.01;
  double sigma = 0.1;  // m

  void validate() const;
};

struct EnvConfig {
  double dt = 1.0 / 60.0;
  int decimation = 2;
  int horizon = 240;
  Workspace workspace;
  double action_scale = 0.5;
  RewardWeights weights;
  std::uint64_t seed = 1;
  // Commands are this orientation perturbed by a random rotation of at most
  // max_orientation_perturbation radians.
  Eigen::Quaterniond nominal_orientation = Eigen::Quaterniond::Identity();
  double max_orientation_perturbation = 0.2617993877991494;  // 15 deg
  // Uniform joint noise added to q_default at reset; 0 disables it.
  double reset_joint_jitter = 0.0;

  // Defaults tuned for the nominal UR10e home pose.
  static EnvConfig defaults_for(const ArmModel& model);

  // Throws ConfigError; checks the workspace against the arm's reach sphere.
  void validate(const ArmModel& model) const;
};

struct EnvState {
  JointVector q = JointVector::Zero();
  JointVector qdot = JointVector::Zero();
  Action a_prev = Action::Zero();
  PoseCommand command;
  int step = 0;
};

struct RewardTerms {
  double pos = 0.0;
  double fine = 0.0;
  double ori = 0.0;
  double act = 0.0;
  double vel = 0.0;
  double total = 0.0;
  double distance = 0.0;  // d_t, kept for diagnostics
};

struct StepResult {
  EnvState next;
  RewardTerms reward;
  bool done = false;
  Observation obs;
};

PoseCommand sample_command(Rng& rng, const EnvConfig& config, const ArmModel& model);

Observation build_observation(const EnvState& state, const ArmModel& model);

RewardTerms compute_reward(const EnvState& state, const Action& action, const ArmModel& model,
                           const RewardWeights& weights);

Action clamp_action(const Action& action);

StepResult step(const EnvState& state, const Action& action, const EnvConfig& config,
                const ArmModel& model);

std::pair<EnvState, Observation> reset(Rng& rng, const EnvConfig& config, const ArmModel& model);

// Per-entry offset and scale that map observations of this configuration to
// roughly unit range; used as the policy's fixed input standardisation.
struct ObservationTransform {
  Eigen::VectorXd offset;
  Eigen::VectorXd scale;
};
ObservationTransform observation_transform(const EnvConfig& config, const ArmModel& model);

// One line of the rollout trace: {"t", "q", "qdot", "action", "reward"}.
void write_trace_record(std::ostream& out, int t, const EnvState& state, const Action& action,
                        const RewardTerms& reward);

// A single environment instance owning its generator.
class ReachEnv {
 public:
  ReachEnv(const EnvConfig& config, const ArmModel& model, std::uint64_t seed);

  const Observation& reset();
  StepResult step(const Action& action);

  const EnvState& state() const { return state_; }
  const Observation& observation() const { return obs_; }
  // Shortens the running episode so that it ends after `remaining` more steps.
  void set_step_counter(int step) { state_.step = step; }
  double distance_to_command() const;

 private:
  EnvConfig config_;
  ArmModel model_;
  Rng rng_;
  EnvState state_;
  Observation obs_ = Observation::Zero();
};

// N independent environments stepped together. Finished episodes are reset in
// place and the returned observation is the first one of the new episode.
class VecEnv {
 public:
  VecEnv(const EnvConfig& config, const ArmModel& model, int num_envs, std::uint64_t seed,
         int num_threads = 1);

  int size() const { return static_cast<int>(envs_.size()); }
  ReachEnv& env(int i) { return envs_[i]; }
  const ReachEnv& env(int i) const { return envs_[i]; }

  // Columns are environments.
  Eigen::MatrixXd reset_all();
  Eigen::MatrixXd observations() const;

  struct Batch {
    Eigen::MatrixXd obs;             // kObsDim x N, post-reset where done
    Eigen::VectorXd reward;          // N
    std::vector<char> done;          // N
    Eigen::VectorXd final_distance;  // distance after the step, before any reset
    Eigen::MatrixXd final_obs;       // observation after the step, before any reset
  };
  Batch step(const Eigen::MatrixXd& actions);

 private:
  std::vector<ReachEnv> envs_;
  int num_threads_;
};

}  // namespace reachlab

#endif  // REACHLAB_REACH_ENV_HPP_
