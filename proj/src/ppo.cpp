#include "reachlab/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "reachlab/errors.hpp"

namespace reachlab {

namespace {
const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);
}

ActorParams ActorParams::make(const std::vector<int>& hidden, double init_std) {
  if (!(init_std > 0.0)) throw DomainError("initial policy std must be > 0");
  ActorParams a;
  a.net = Mlp::make(kObsDim, hidden, kActDim);
  a.log_std = Eigen::VectorXd::Constant(kActDim, std::log(init_std));
  return a;
}

Eigen::VectorXd ActorParams::clamped_log_std() const {
  return log_std.cwiseMax(kLogStdMin).cwiseMin(kLogStdMax);
}

PolicyOutput policy_forward(const ActorParams& actor, const Eigen::MatrixXd& obs) {
  if (obs.rows() != actor.net.input_dim())
    throw DomainError("policy_forward: observation must have " +
                      std::to_string(actor.net.input_dim()) + " rows");
  if (actor.log_std.size() != actor.net.output_dim())
    throw DomainError("policy_forward: log_std size does not match action dimension");
  return {actor.net.forward(obs), actor.clamped_log_std().array().exp()};
}

double gaussian_logp(const Eigen::VectorXd& action, const Eigen::VectorXd& mean,
                     const Eigen::VectorXd& std) {
  const Eigen::ArrayXd z = (action - mean).array() / std.array();
  return (-0.5 * z.square() - std.array().log() - kHalfLog2Pi).sum();
}

ActionSample sample_and_logprob(const Eigen::VectorXd& mean, const Eigen::VectorXd& std, Rng& rng) {
  if (mean.size() != std.size()) throw DomainError("sample_and_logprob: size mismatch");
  if (!(std.array() > 0.0).all()) throw DomainError("sample_and_logprob: std must be positive");
  std::normal_distribution<double> normal(0.0, 1.0);
  ActionSample s;
  s.action.resize(mean.size());
  for (Eigen::Index i = 0; i < mean.size(); ++i) s.action[i] = mean[i] + std[i] * normal(rng);
  s.logp = gaussian_logp(s.action, mean, std);
  return s;
}

double gaussian_entropy(const Eigen::VectorXd& log_std) {
  return (log_std.array() + 0.5 + kHalfLog2Pi).sum();
}

void PpoConfig::validate() const {
  if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("ppo.gamma", "must be in (0, 1]");
  if (!(lam >= 0.0 && lam <= 1.0)) throw ConfigError("ppo.lam", "must be in [0, 1]");
  if (!(clip_eps > 0.0)) throw ConfigError("ppo.clip_eps", "must be > 0");
  if (!(value_coef >= 0.0)) throw ConfigError("ppo.value_coef", "must be >= 0");
  if (!std::isfinite(entropy_coef)) throw ConfigError("ppo.entropy_coef", "must be finite");
  if (!(learning_rate > 0.0)) throw ConfigError("ppo.learning_rate", "must be > 0");
  if (epochs < 1) throw ConfigError("ppo.epochs", "must be >= 1");
  if (minibatches < 1) throw ConfigError("ppo.minibatches", "must be >= 1");
  if (steps_per_env < 1) throw ConfigError("ppo.steps_per_env", "must be >= 1");
  if (num_envs < 1) throw ConfigError("ppo.num_envs", "must be >= 1");
  if (iterations < 0) throw ConfigError("ppo.iterations", "must be >= 0");
  if (minibatches > steps_per_env * num_envs)
    throw ConfigError("ppo.minibatches", "exceeds the number of samples per iteration");
  if (hidden.empty()) throw ConfigError("ppo.hidden", "at least one hidden layer is required");
  for (int h : hidden)
    if (h < 1) throw ConfigError("ppo.hidden", "layer widths must be positive");
  if (!(init_std > 0.0)) throw ConfigError("ppo.init_std", "must be > 0");
  if (checkpoint_interval < 1) throw ConfigError("ppo.checkpoint_interval", "must be >= 1");
  if (num_threads < 1) throw ConfigError("ppo.num_threads", "must be >= 1");
}

RolloutBuffer::RolloutBuffer(int steps, int num_envs) : steps_(steps), num_envs_(num_envs) {
  if (steps < 1 || num_envs < 1) throw DomainError("RolloutBuffer: empty shape");
  obs.resize(kObsDim, static_cast<Eigen::Index>(steps) * num_envs);
  actions.resize(kActDim, static_cast<Eigen::Index>(steps) * num_envs);
  logp.resize(steps, num_envs);
  rewards.resize(steps, num_envs);
  values.resize(steps, num_envs);
  dones.resize(steps, num_envs);
  bootstrap.resize(num_envs);
  clear();
}

void RolloutBuffer::clear() {
  filled_ = 0;
  bootstrapped_ = false;
}

void RolloutBuffer::add(const Eigen::MatrixXd& o, const Eigen::MatrixXd& a, const Eigen::VectorXd& lp,
                        const Eigen::VectorXd& v, const Eigen::VectorXd& r,
                        const std::vector<char>& d) {
  if (filled_ >= steps_) throw UsageError("RolloutBuffer::add: buffer already full");
  if (o.cols() != num_envs_ || a.cols() != num_envs_ || lp.size() != num_envs_ ||
      v.size() != num_envs_ || r.size() != num_envs_ || static_cast<int>(d.size()) != num_envs_)
    throw DomainError("RolloutBuffer::add: batch size mismatch");
  if (!lp.allFinite()) throw DomainError("RolloutBuffer::add: non-finite log-probability");
  const Eigen::Index col = static_cast<Eigen::Index>(filled_) * num_envs_;
  obs.middleCols(col, num_envs_) = o;
  actions.middleCols(col, num_envs_) = a;
  logp.row(filled_) = lp.transpose();
  values.row(filled_) = v.transpose();
  rewards.row(filled_) = r.transpose();
  for (int i = 0; i < num_envs_; ++i) dones(filled_, i) = d[i] ? 1.0 : 0.0;
  ++filled_;
}

void RolloutBuffer::set_bootstrap(const Eigen::VectorXd& v) {
  if (v.size() != num_envs_) throw DomainError("RolloutBuffer::set_bootstrap: size mismatch");
  bootstrap = v;
  bootstrapped_ = true;
}

AdvantageSet compute_gae(const RolloutBuffer& buffer, double gamma, double lam, bool normalize) {
  if (!buffer.full()) throw UsageError("compute_gae: rollout buffer is not filled");
  const int steps = buffer.steps(), n = buffer.num_envs();
  AdvantageSet out;
  out.advantages.resize(steps, n);
  for (int i = 0; i < n; ++i) {
    double next_adv = 0.0;
    for (int t = steps - 1; t >= 0; --t) {
      const double not_done = 1.0 - buffer.dones(t, i);
      const double next_value = t + 1 < steps ? buffer.values(t + 1, i) : buffer.bootstrap[i];
      const double delta = buffer.rewards(t, i) + gamma * next_value * not_done - buffer.values(t, i);
      next_adv = delta + gamma * lam * not_done * next_adv;
      out.advantages(t, i) = next_adv;
    }
  }
  out.returns = out.advantages + buffer.values;
  if (normalize) {
    const double count = static_cast<double>(out.advantages.size());
    out.mean = out.advantages.mean();
    const double var = (out.advantages.array() - out.mean).square().sum() / std::max(1.0, count - 1.0);
    out.std = std::sqrt(var);
    out.advantages = (out.advantages.array() - out.mean) / (out.std + 1e-8);
  }
  return out;
}

double Gradients::norm() const {
  return std::sqrt(actor_net.squaredNorm() + log_std.squaredNorm() + critic.squaredNorm());
}

void Gradients::scale(double s) {
  actor_net *= s;
  log_std *= s;
  critic *= s;
}

double clipped_surrogate(double ratio, double advantage, double eps) {
  return std::min(ratio * advantage, std::clamp(ratio, 1.0 - eps, 1.0 + eps) * advantage);
}

LossResult ppo_losses(const ActorParams& actor, const Mlp& critic, const Minibatch& batch,
                      const PpoConfig& config) {
  const Eigen::Index b = batch.obs.cols();
  if (b == 0) throw DomainError("ppo_losses: empty minibatch");
  if (batch.actions.cols() != b || batch.old_logp.size() != b || batch.advantages.size() != b ||
      batch.returns.size() != b || batch.actions.rows() != actor.net.output_dim())
    throw DomainError("ppo_losses: minibatch shape mismatch");
  if (critic.output_dim() != 1) throw DomainError("ppo_losses: critic must have one output");

  const double inv_b = 1.0 / static_cast<double>(b);
  const Eigen::VectorXd log_std = actor.clamped_log_std();
  const Eigen::ArrayXd std = log_std.array().exp();

  Mlp::Tape actor_tape, critic_tape;
  const Eigen::MatrixXd mean = actor.net.forward(batch.obs, actor_tape);
  const Eigen::MatrixXd value = critic.forward(batch.obs, critic_tape);

  const Eigen::ArrayXXd z = (batch.actions - mean).array().colwise() / std;
  const Eigen::ArrayXd logp =
      (-0.5 * z.square()).colwise().sum().transpose() - log_std.sum() -
      kHalfLog2Pi * static_cast<double>(log_std.size());

  LossResult out;
  Eigen::VectorXd dlogp(b);  // d total / d logp_i
  double surrogate_sum = 0.0;
  for (Eigen::Index i = 0; i < b; ++i) {
    const double log_ratio = logp[i] - batch.old_logp[i];
    const double ratio = std::exp(log_ratio);
    const double adv = batch.advantages[i];
    const double clipped = std::clamp(ratio, 1.0 - config.clip_eps, 1.0 + config.clip_eps);
    surrogate_sum += std::min(ratio * adv, clipped * adv);
    // the unclipped branch is active when it is the smaller of the two
    const bool unclipped = ratio * adv <= clipped * adv;
    dlogp[i] = unclipped ? -inv_b * ratio * adv : 0.0;
    out.stats.approx_kl += (ratio - 1.0) - log_ratio;
    if (std::abs(ratio - 1.0) > config.clip_eps) out.stats.clip_fraction += 1.0;
  }
  out.stats.approx_kl *= inv_b;
  out.stats.clip_fraction *= inv_b;
  out.stats.policy_loss = -surrogate_sum * inv_b;
  const Eigen::ArrayXd value_err = value.row(0).transpose().array() - batch.returns.array();
  out.stats.value_loss = value_err.square().mean();
  out.stats.entropy = gaussian_entropy(log_std);
  out.total = out.stats.policy_loss + config.value_coef * out.stats.value_loss -
              config.entropy_coef * out.stats.entropy;

  // d logp / d mean = z / std ; d logp / d log_std = z^2 - 1
  const Eigen::MatrixXd grad_mean =
      ((z.colwise() / std).rowwise() * dlogp.transpose().array()).matrix();
  out.grads.actor_net = Eigen::VectorXd::Zero(actor.net.num_params());
  actor.net.backward(actor_tape, grad_mean, out.grads.actor_net);

  Eigen::VectorXd g_log_std =
      ((z.square() - 1.0).rowwise() * dlogp.transpose().array()).rowwise().sum().matrix();
  g_log_std.array() -= config.entropy_coef;
  for (Eigen::Index j = 0; j < g_log_std.size(); ++j)
    if (actor.log_std[j] < kLogStdMin || actor.log_std[j] > kLogStdMax) g_log_std[j] = 0.0;
  out.grads.log_std = g_log_std;

  const Eigen::MatrixXd grad_value = (2.0 * config.value_coef * inv_b * value_err).matrix().transpose();
  out.grads.critic = Eigen::VectorXd::Zero(critic.num_params());
  critic.backward(critic_tape, grad_value, out.grads.critic);
  return out;
}

Adam::Adam(Eigen::Index size, double beta1, double beta2, double eps)
    : m_(Eigen::VectorXd::Zero(size)), v_(Eigen::VectorXd::Zero(size)),
      beta1_(beta1), beta2_(beta2), eps_(eps) {}

void Adam::step(Eigen::VectorXd& params, const Eigen::VectorXd& grad, double learning_rate) {
  if (params.size() != m_.size() || grad.size() != m_.size())
    throw DomainError("Adam::step: parameter/gradient size mismatch");
  ++t_;
  m_ = beta1_ * m_ + (1.0 - beta1_) * grad;
  v_ = beta2_ * v_ + (1.0 - beta2_) * grad.cwiseAbs2();
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  params.array() -= learning_rate * (m_.array() / c1) / ((v_.array() / c2).sqrt() + eps_);
}

}  // namespace reachlab
