#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>

#include "reachlab/errors.hpp"
#include "reachlab/ppo.hpp"

namespace reachlab {

namespace {

Minibatch gather(const RolloutBuffer& buf, const AdvantageSet& adv, const std::vector<int>& index,
                 std::size_t first, std::size_t count) {
  const int n = buf.num_envs();
  Minibatch mb;
  mb.obs.resize(kObsDim, count);
  mb.actions.resize(kActDim, count);
  mb.old_logp.resize(count);
  mb.advantages.resize(count);
  mb.returns.resize(count);
  for (std::size_t k = 0; k < count; ++k) {
    const int col = index[first + k];
    const int t = col / n, i = col % n;
    mb.obs.col(k) = buf.obs.col(col);
    mb.actions.col(k) = buf.actions.col(col);
    mb.old_logp[k] = buf.logp(t, i);
    mb.advantages[k] = adv.advantages(t, i);
    mb.returns[k] = adv.returns(t, i);
  }
  return mb;
}

// Welford accumulator for the discounted-return variance.
class ReturnScaler {
 public:
  ReturnScaler(int n, double gamma) : ret_(Eigen::VectorXd::Zero(n)), gamma_(gamma) {}

  Eigen::VectorXd scale(const Eigen::VectorXd& reward, const std::vector<char>& done) {
    ret_ = ret_ * gamma_ + reward;
    for (Eigen::Index i = 0; i < ret_.size(); ++i) {
      ++count_;
      const double d = ret_[i] - mean_;
      mean_ += d / count_;
      m2_ += d * (ret_[i] - mean_);
      if (done[i]) ret_[i] = 0.0;
    }
    const double var = count_ > 1 ? m2_ / (count_ - 1) : 1.0;
    return reward / std::sqrt(var + 1e-8);
  }

 private:
  Eigen::VectorXd ret_;
  double gamma_;
  double count_ = 0.0, mean_ = 0.0, m2_ = 0.0;
};

}  // namespace

TrainResult train(const EnvConfig& env_config, const ArmModel& model, const PpoConfig& config,
                  std::uint64_t seed, const TrainHooks& hooks) {
  config.validate();
  env_config.validate(model);

  Rng rng(seed);
  TrainResult result;
  result.actor = ActorParams::make(config.hidden, config.init_std);
  result.actor.net.init(rng, 0.01);
  result.critic = Mlp::make(kObsDim, config.hidden, 1);
  result.critic.init(rng, 1.0);
  const ObservationTransform norm = observation_transform(env_config, model);
  result.actor.net.set_input_transform(norm.offset, norm.scale);
  result.critic.set_input_transform(norm.offset, norm.scale);
  if (hooks.on_checkpoint) hooks.on_checkpoint(0, result.actor);
  if (config.iterations == 0) return result;

  ActorParams& actor = result.actor;
  Mlp& critic = result.critic;
  Adam adam_net(actor.net.num_params()), adam_log_std(actor.log_std.size()),
      adam_critic(critic.num_params());

  VecEnv envs(env_config, model, config.num_envs, seed, config.num_threads);
  if (config.randomize_initial_episode) {
    std::uniform_int_distribution<int> offset(0, env_config.horizon - 1);
    for (int i = 0; i < envs.size(); ++i) envs.env(i).set_step_counter(offset(rng));
  }
  Eigen::MatrixXd obs = envs.observations();

  const int steps = config.steps_per_env, n = config.num_envs;
  const int total = steps * n;
  RolloutBuffer buffer(steps, n);
  std::vector<int> index(total);
  std::vector<double> running_return(n, 0.0);
  std::deque<double> finished_returns;
  ReturnScaler scaler(n, config.gamma);

  for (int it = 1; it <= config.iterations; ++it) {
    buffer.clear();
    IterationStats stats;
    stats.iteration = it;
    Eigen::VectorXd last_distance;
    double raw_reward_sum = 0.0;

    for (int t = 0; t < steps; ++t) {
      const PolicyOutput pol = policy_forward(actor, obs);
      const Eigen::VectorXd values = critic.forward(obs).row(0).transpose();
      Eigen::MatrixXd actions(kActDim, n);
      Eigen::VectorXd logp(n);
      for (int i = 0; i < n; ++i) {
        const ActionSample s = sample_and_logprob(pol.mean.col(i), pol.std, rng);
        actions.col(i) = s.action;
        logp[i] = s.logp;
      }
      VecEnv::Batch b = envs.step(actions);
      Eigen::VectorXd learn_reward = config.scale_rewards ? scaler.scale(b.reward, b.done) : b.reward;
      if (config.bootstrap_on_timeout) {
        for (int i = 0; i < n; ++i)
          if (b.done[i]) learn_reward[i] += config.gamma * critic.forward(b.final_obs.col(i))(0, 0);
      }
      buffer.add(obs, actions, logp, values, learn_reward, b.done);
      raw_reward_sum += b.reward.sum();
      for (int i = 0; i < n; ++i) {
        running_return[i] += b.reward[i];
        if (b.done[i]) {
          finished_returns.push_back(running_return[i]);
          if (finished_returns.size() > 100) finished_returns.pop_front();
          running_return[i] = 0.0;
        }
      }
      obs = std::move(b.obs);
      last_distance = std::move(b.final_distance);
    }
    buffer.set_bootstrap(critic.forward(obs).row(0).transpose());
    const AdvantageSet adv = compute_gae(buffer, config.gamma, config.lam, config.normalize_advantages);

    std::iota(index.begin(), index.end(), 0);
    LossStats acc;
    int updates = 0;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
      std::shuffle(index.begin(), index.end(), rng);
      for (int m = 0; m < config.minibatches; ++m) {
        const std::size_t first = static_cast<std::size_t>(m) * total / config.minibatches;
        const std::size_t last = static_cast<std::size_t>(m + 1) * total / config.minibatches;
        const Minibatch mb = gather(buffer, adv, index, first, last - first);
        LossResult loss = ppo_losses(actor, critic, mb, config);
        const double gnorm = loss.grads.norm();
        if (!std::isfinite(loss.total) || !std::isfinite(gnorm))
          throw NumericAbort(it, "non-finite loss (policy " + std::to_string(loss.stats.policy_loss) +
                                     ", value " + std::to_string(loss.stats.value_loss) +
                                     ", grad norm " + std::to_string(gnorm) + ")");
        if (config.max_grad_norm > 0.0 && gnorm > config.max_grad_norm)
          loss.grads.scale(config.max_grad_norm / gnorm);
        adam_net.step(actor.net.params(), loss.grads.actor_net, config.learning_rate);
        adam_log_std.step(actor.log_std, loss.grads.log_std, config.learning_rate);
        adam_critic.step(critic.params(), loss.grads.critic, config.learning_rate);
        acc.policy_loss += loss.stats.policy_loss;
        acc.value_loss += loss.stats.value_loss;
        acc.entropy += loss.stats.entropy;
        acc.approx_kl += loss.stats.approx_kl;
        acc.clip_fraction += loss.stats.clip_fraction;
        ++updates;
      }
    }
    if (!actor.net.params().allFinite() || !actor.log_std.allFinite() || !critic.params().allFinite())
      throw NumericAbort(it, "non-finite parameters after update");

    stats.mean_reward = raw_reward_sum / total;
    stats.mean_episode_return =
        finished_returns.empty()
            ? std::numeric_limits<double>::quiet_NaN()
            : std::accumulate(finished_returns.begin(), finished_returns.end(), 0.0) /
                  static_cast<double>(finished_returns.size());
    stats.mean_final_distance = last_distance.mean();
    stats.policy_loss = acc.policy_loss / updates;
    stats.value_loss = acc.value_loss / updates;
    stats.entropy = acc.entropy / updates;
    stats.approx_kl = acc.approx_kl / updates;
    stats.clip_fraction = acc.clip_fraction / updates;
    stats.mean_std = actor.clamped_log_std().array().exp().mean();
    result.curve.push_back(stats);
    if (hooks.on_iteration) hooks.on_iteration(stats);
    if (hooks.on_checkpoint && (it % config.checkpoint_interval == 0 || it == config.iterations))
      hooks.on_checkpoint(it, actor);
  }
  return result;
}

std::vector<EpisodeOutcome> evaluate_policy(const ActorParams& actor, const EnvConfig& env_config,
                                            const ArmModel& model, int episodes,
                                            std::uint64_t seed, double eps_r) {
  if (episodes < 0) throw DomainError("evaluate_policy: episodes must be >= 0");
  std::vector<EpisodeOutcome> out;
  out.reserve(episodes);
  Rng seeder(seed);
  for (int e = 0; e < episodes; ++e) {
    ReachEnv env(env_config, model, seeder());
    EpisodeOutcome o;
    bool done = false;
    while (!done) {
      const Action a = actor.net.forward(env.observation());
      const StepResult r = env.step(a);
      done = r.done;
      o.final_distance = r.reward.distance;
      if (r.reward.distance <= eps_r) o.reached_in_time = true;
      ++o.steps;
    }
    out.push_back(o);
  }
  return out;
}

}  // namespace reachlab
