#ifndef REACHLAB_PPO_HPP_
#define REACHLAB_PPO_HPP_

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <vector>

#include "reachlab/mlp.hpp"
#include "reachlab/reach_env.hpp"

namespace reachlab {

inline constexpr double kLogStdMin = -20.0;
inline constexpr double kLogStdMax = 2.0;

// Diagonal Gaussian policy: mean = net(obs), std = exp(log_std), the latter
// independent of the observation.
struct ActorParams {
  Mlp net;
  Eigen::VectorXd log_std;

  static ActorParams make(const std::vector<int>& hidden, double init_std);
  Eigen::VectorXd clamped_log_std() const;
};

struct PolicyOutput {
  Eigen::MatrixXd mean;  // act_dim x batch
  Eigen::VectorXd std;   // act_dim
};

PolicyOutput policy_forward(const ActorParams& actor, const Eigen::MatrixXd& obs);

struct ActionSample {
  Eigen::VectorXd action;
  double logp = 0.0;
};

double gaussian_logp(const Eigen::VectorXd& action, const Eigen::VectorXd& mean,
                     const Eigen::VectorXd& std);
ActionSample sample_and_logprob(const Eigen::VectorXd& mean, const Eigen::VectorXd& std, Rng& rng);
double gaussian_entropy(const Eigen::VectorXd& log_std);

struct PpoConfig {
  double gamma = 0.99;
  double lam = 0.95;
  double clip_eps = 0.2;
  double value_coef = 1.0;
  double entropy_coef = 0.005;
  double learning_rate = 1e-3;
  int epochs = 5;
  int minibatches = 4;
  int steps_per_env = 24;
  int num_envs = 64;
  int iterations = 500;
  bool normalize_advantages = true;
  double max_grad_norm = 1.0;  // <= 0 disables clipping
  std::vector<int> hidden = {128, 128};
  double init_std = 1.0;
  int checkpoint_interval = 100;
  int num_threads = 1;
  // Spread the first episode of each environment over the horizon so that
  // episode ends are not synchronised across the batch.
  bool randomize_initial_episode = true;
  // Divide rewards by the running std of the discounted return before GAE.
  // Reported statistics always use raw rewards.
  bool scale_rewards = true;
  // Episodes end on a time limit the observation does not reveal. When set,
  // the last reward of an episode is augmented with gamma * V(final obs), so
  // the horizon acts as a truncation; otherwise it is a true termination.
  bool bootstrap_on_timeout = true;

  void validate() const;
};

// Per-step rollout storage for T steps x N environments. Step-major layout:
// column t * N + i of the observation/action matrices is step t of env i.
class RolloutBuffer {
 public:
  RolloutBuffer(int steps, int num_envs);

  int steps() const { return steps_; }
  int num_envs() const { return num_envs_; }
  bool full() const { return filled_ == steps_ && bootstrapped_; }
  void clear();

  void add(const Eigen::MatrixXd& obs, const Eigen::MatrixXd& actions, const Eigen::VectorXd& logp,
           const Eigen::VectorXd& values, const Eigen::VectorXd& rewards,
           const std::vector<char>& dones);
  void set_bootstrap(const Eigen::VectorXd& values);

  Eigen::MatrixXd obs;      // kObsDim x T*N
  Eigen::MatrixXd actions;  // kActDim x T*N
  Eigen::MatrixXd logp;     // T x N
  Eigen::MatrixXd rewards;  // T x N
  Eigen::MatrixXd values;   // T x N
  Eigen::MatrixXd dones;    // T x N, 1.0 where the episode ended after step t
  Eigen::VectorXd bootstrap;

 private:
  int steps_;
  int num_envs_;
  int filled_ = 0;
  bool bootstrapped_ = false;
};

struct AdvantageSet {
  Eigen::MatrixXd advantages;  // T x N (normalised when requested)
  Eigen::MatrixXd returns;     // T x N, raw advantages + values
  double mean = 0.0;
  double std = 1.0;
};

AdvantageSet compute_gae(const RolloutBuffer& buffer, double gamma, double lam,
                         bool normalize = false);

struct Minibatch {
  Eigen::MatrixXd obs;
  Eigen::MatrixXd actions;
  Eigen::VectorXd old_logp;
  Eigen::VectorXd advantages;
  Eigen::VectorXd returns;
};

struct Gradients {
  Eigen::VectorXd actor_net;
  Eigen::VectorXd log_std;
  Eigen::VectorXd critic;

  double norm() const;
  void scale(double s);
};

struct LossStats {
  double policy_loss = 0.0;  // -mean(surrogate)
  double value_loss = 0.0;
  double entropy = 0.0;
  double approx_kl = 0.0;
  double clip_fraction = 0.0;
};

struct LossResult {
  double total = 0.0;
  Gradients grads;
  LossStats stats;
};

// Clipped surrogate plus value regression minus entropy bonus, and the
// analytic gradient of that total with respect to every parameter.
LossResult ppo_losses(const ActorParams& actor, const Mlp& critic, const Minibatch& batch,
                      const PpoConfig& config);

// min(ratio * adv, clip(ratio, 1 - eps, 1 + eps) * adv)
double clipped_surrogate(double ratio, double advantage, double eps);

// Adam with bias correction.
class Adam {
 public:
  explicit Adam(Eigen::Index size, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);
  void step(Eigen::VectorXd& params, const Eigen::VectorXd& grad, double learning_rate);
  long steps() const { return t_; }

 private:
  Eigen::VectorXd m_, v_;
  double beta1_, beta2_, eps_;
  long t_ = 0;
};

struct IterationStats {
  int iteration = 0;
  double mean_reward = 0.0;          // per step, over the rollout
  double mean_episode_return = 0.0;  // last 100 finished episodes, NaN before any
  double mean_final_distance = 0.0;  // distance after the last rollout step
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double approx_kl = 0.0;
  double clip_fraction = 0.0;
  double mean_std = 0.0;
};

struct TrainResult {
  ActorParams actor;
  Mlp critic;
  std::vector<IterationStats> curve;
};

struct TrainHooks {
  std::function<void(const IterationStats&)> on_iteration;
  // Called with iteration 0 before training, every checkpoint_interval
  // iterations, and after the last one.
  std::function<void(int, const ActorParams&)> on_checkpoint;
};

TrainResult train(const EnvConfig& env_config, const ArmModel& model, const PpoConfig& config,
                  std::uint64_t seed, const TrainHooks& hooks = {});

struct EpisodeOutcome {
  double final_distance = 0.0;
  bool reached_in_time = false;  // distance <= eps_r at some step of the episode
  int steps = 0;
};

// Deterministic rollouts with the policy mean.
std::vector<EpisodeOutcome> evaluate_policy(const ActorParams& actor, const EnvConfig& env_config,
                                            const ArmModel& model, int episodes,
                                            std::uint64_t seed, double eps_r);

}  // namespace reachlab

#endif  // REACHLAB_PPO_HPP_
