#include "reachlab/reach_env.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <ostream>
#include <thread>

#include <json.hpp>

#include "reachlab/errors.hpp"

namespace reachlab {

namespace {

std::uint64_t env_seed(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), 0x5eedu};
  std::array<std::uint32_t, 2> out{};
  seq.generate(out.begin(), out.end());
  return (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
}

Eigen::Quaterniond random_bounded_rotation(Rng& rng, double max_angle) {
  if (max_angle <= 0.0) return Eigen::Quaterniond::Identity();
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::Vector3d axis;
  do {
    axis = Eigen::Vector3d(normal(rng), normal(rng), normal(rng));
  } while (axis.norm() < 1e-12);
  std::uniform_real_distribution<double> angle(0.0, max_angle);
  return Eigen::Quaterniond(Eigen::AngleAxisd(angle(rng), axis.normalized()));
}

std::vector<double> to_vec(const JointVector& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

void RewardWeights::validate() const {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw ConfigError("env.weights.sigma", "must be > 0");
  for (double w : {w_pos, w_fine, w_ori, w_act, w_vel})
    if (!std::isfinite(w)) throw ConfigError("env.weights", "weights must be finite");
}

EnvConfig EnvConfig::defaults_for(const ArmModel& model) {
  EnvConfig c;
  const EEPose home = forward_kinematics(model, model.q_default);
  c.nominal_orientation = home.orientation;
  // a box below and in front of the home tool position
  c.workspace.min = home.position + Eigen::Vector3d(-0.15, -0.15, -0.20);
  c.workspace.max = home.position + Eigen::Vector3d(0.15, 0.15, 0.05);
  return c;
}

void EnvConfig::validate(const ArmModel& model) const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("env.dt", "must be > 0");
  if (decimation < 1) throw ConfigError("env.decimation", "must be >= 1");
  if (horizon < 1) throw ConfigError("env.horizon", "must be >= 1");
  if (!(action_scale > 0.0) || !std::isfinite(action_scale))
    throw ConfigError("env.action_scale", "must be > 0");
  if (!workspace.min.allFinite() || !workspace.max.allFinite() ||
      !(workspace.min.array() <= workspace.max.array()).all())
    throw ConfigError("env.workspace", "min must not exceed max");
  weights.validate();
  if (std::abs(nominal_orientation.norm() - 1.0) > 1e-6)
    throw ConfigError("env.nominal_orientation", "must be a unit quaternion");
  if (!(max_orientation_perturbation >= 0.0) ||
      max_orientation_perturbation > std::numbers::pi)
    throw ConfigError("env.max_orientation_perturbation", "must be in [0, pi]");
  if (!(reset_joint_jitter >= 0.0)) throw ConfigError("env.reset_joint_jitter", "must be >= 0");

  const Eigen::Vector3d center = model.base_frame.translation();
  const double radius = model.reach_radius();
  for (int corner = 0; corner < 8; ++corner) {
    Eigen::Vector3d p;
    for (int k = 0; k < 3; ++k) p[k] = (corner >> k & 1) ? workspace.max[k] : workspace.min[k];
    if ((p - center).norm() > radius)
      throw ConfigError("env.workspace", "box extends outside the arm's reach sphere");
  }
}

PoseCommand sample_command(Rng& rng, const EnvConfig& config, const ArmModel& model) {
  const Eigen::Vector3d center = model.base_frame.translation();
  const double radius = model.reach_radius();
  constexpr int kMaxAttempts = 100;
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    PoseCommand cmd;
    for (int k = 0; k < 3; ++k) {
      const double lo = config.workspace.min[k], hi = config.workspace.max[k];
      cmd.position[k] = lo == hi ? lo : std::uniform_real_distribution<double>(lo, hi)(rng);
    }
    cmd.orientation =
        (config.nominal_orientation * random_bounded_rotation(rng, config.max_orientation_perturbation))
            .normalized();
    if ((cmd.position - center).norm() <= radius) return cmd;
  }
  throw ConfigError("env.workspace", "no reachable command after 100 attempts");
}

Observation build_observation(const EnvState& state, const ArmModel& model) {
  using namespace obs_layout;
  Observation obs;
  obs.segment<6>(kJointPos) = state.q - model.q_default;
  obs.segment<6>(kJointVel) = state.qdot;
  obs.segment<3>(kCmdPos) = state.command.position;
  const auto& q = state.command.orientation;
  obs.segment<4>(kCmdQuat) << q.w(), q.x(), q.y(), q.z();
  obs.segment<6>(kPrevAction) = state.a_prev;
  return obs;
}

RewardTerms compute_reward(const EnvState& state, const Action& action, const ArmModel& model,
                           const RewardWeights& weights) {
  if (!(weights.sigma > 0.0)) throw ConfigError("env.weights.sigma", "must be > 0");
  const EEPose ee = forward_kinematics(model, state.q);
  RewardTerms r;
  r.distance = (ee.position - state.command.position).norm();
  r.pos = -r.distance;
  r.fine = std::exp(-r.distance / weights.sigma);
  r.ori = -orientation_error(ee.orientation, state.command.orientation);
  r.act = -(action - state.a_prev).squaredNorm();
  r.vel = -state.qdot.squaredNorm();
  r.total = weights.w_pos * r.pos + weights.w_fine * r.fine + weights.w_ori * r.ori +
            weights.w_act * r.act + weights.w_vel * r.vel;
  return r;
}

Action clamp_action(const Action& action) {
  if (!action.allFinite()) throw DomainError("action contains non-finite entries");
  return action.cwiseMax(-1.0).cwiseMin(1.0);
}

StepResult step(const EnvState& state, const Action& action, const EnvConfig& config,
                const ArmModel& model) {
  if (state.step >= config.horizon) throw UsageError("step called on a finished episode");
  const Action a = clamp_action(action);
  const JointVector q_target = model.q_default + config.action_scale * a;

  StepResult out;
  out.next = state;
  for (int k = 0; k < config.decimation; ++k) {
    const TrackResult tr = track_joint_target(out.next.q, q_target, model.limits, config.dt);
    out.next.q = tr.q_next;
    out.next.qdot = tr.qdot;
  }
  out.reward = compute_reward(out.next, a, model, config.weights);
  out.next.a_prev = a;
  out.next.step = state.step + 1;
  out.done = out.next.step >= config.horizon;
  out.obs = build_observation(out.next, model);
  return out;
}

std::pair<EnvState, Observation> reset(Rng& rng, const EnvConfig& config, const ArmModel& model) {
  EnvState s;
  s.q = model.q_default;
  if (config.reset_joint_jitter > 0.0) {
    std::uniform_real_distribution<double> jitter(-config.reset_joint_jitter,
                                                  config.reset_joint_jitter);
    for (int i = 0; i < kNumJoints; ++i)
      s.q[i] = std::clamp(s.q[i] + jitter(rng), model.limits.pos_min[i], model.limits.pos_max[i]);
  }
  s.command = sample_command(rng, config, model);
  return {s, build_observation(s, model)};
}

ObservationTransform observation_transform(const EnvConfig& config, const ArmModel& model) {
  using namespace obs_layout;
  ObservationTransform t{Eigen::VectorXd::Zero(kObsDim), Eigen::VectorXd::Ones(kObsDim)};
  t.scale.segment<6>(kJointPos).setConstant(1.0 / config.action_scale);
  t.scale.segment<6>(kJointVel) = model.limits.vel_max.cwiseInverse();
  const Eigen::Vector3d center = 0.5 * (config.workspace.min + config.workspace.max);
  const Eigen::Vector3d half = 0.5 * (config.workspace.max - config.workspace.min);
  t.offset.segment<3>(kCmdPos) = center;
  for (int k = 0; k < 3; ++k) t.scale[kCmdPos + k] = half[k] > 1e-6 ? 1.0 / half[k] : 1.0;
  const auto& q = config.nominal_orientation;
  t.offset.segment<4>(kCmdQuat) << q.w(), q.x(), q.y(), q.z();
  t.scale.segment<4>(kCmdQuat).setConstant(
      1.0 / std::max(std::sin(0.5 * config.max_orientation_perturbation), 1e-2));
  return t;
}

void write_trace_record(std::ostream& out, int t, const EnvState& state, const Action& action,
                        const RewardTerms& reward) {
  nlohmann::json j;
  j["t"] = t;
  j["q"] = to_vec(state.q);
  j["qdot"] = to_vec(state.qdot);
  j["action"] = to_vec(action);
  j["reward"] = {{"pos", reward.pos}, {"fine", reward.fine}, {"ori", reward.ori},
                 {"act", reward.act}, {"vel", reward.vel},   {"total", reward.total}};
  out << j.dump() << '\n';
}

ReachEnv::ReachEnv(const EnvConfig& config, const ArmModel& model, std::uint64_t seed)
    : config_(config), model_(model), rng_(seed) {
  config_.validate(model_);
  reset();
}

const Observation& ReachEnv::reset() {
  auto [s, o] = reachlab::reset(rng_, config_, model_);
  state_ = s;
  obs_ = o;
  return obs_;
}

StepResult ReachEnv::step(const Action& action) {
  StepResult r = reachlab::step(state_, action, config_, model_);
  state_ = r.next;
  obs_ = r.obs;
  return r;
}

double ReachEnv::distance_to_command() const {
  return (forward_kinematics(model_, state_.q).position - state_.command.position).norm();
}

VecEnv::VecEnv(const EnvConfig& config, const ArmModel& model, int num_envs, std::uint64_t seed,
               int num_threads)
    : num_threads_(std::max(1, num_threads)) {
  if (num_envs < 1) throw ConfigError("ppo.num_envs", "must be >= 1");
  envs_.reserve(num_envs);
  for (int i = 0; i < num_envs; ++i) envs_.emplace_back(config, model, env_seed(seed, i));
}

Eigen::MatrixXd VecEnv::reset_all() {
  for (auto& e : envs_) e.reset();
  return observations();
}

Eigen::MatrixXd VecEnv::observations() const {
  Eigen::MatrixXd obs(kObsDim, size());
  for (int i = 0; i < size(); ++i) obs.col(i) = envs_[i].observation();
  return obs;
}

VecEnv::Batch VecEnv::step(const Eigen::MatrixXd& actions) {
  if (actions.rows() != kActDim || actions.cols() != size())
    throw DomainError("VecEnv::step: action matrix must be 6 x num_envs");
  Batch b;
  b.obs.resize(kObsDim, size());
  b.reward.resize(size());
  b.done.assign(size(), 0);
  b.final_distance.resize(size());
  b.final_obs.resize(kObsDim, size());

  auto work = [&](int first, int stride) {
    for (int i = first; i < size(); i += stride) {
      const StepResult r = envs_[i].step(actions.col(i));
      b.reward[i] = r.reward.total;
      b.final_distance[i] = r.reward.distance;
      b.done[i] = r.done ? 1 : 0;
      b.final_obs.col(i) = r.obs;
      b.obs.col(i) = r.done ? envs_[i].reset() : r.obs;
    }
  };
  const int threads = std::min(num_threads_, size());
  if (threads <= 1) {
    work(0, 1);
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(work, t, threads);
  }
  return b;
}

}  // namespace reachlab
