#include "reachlab/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "reachlab/errors.hpp"

namespace reachlab {

namespace {

std::string block_name(const std::string& net, const Mlp& mlp, Eigen::Index k) {
  for (int l = 0; l < mlp.num_layers(); ++l) {
    const Eigen::Index end = mlp.bias_offset(l) + mlp.layers()[l].out;
    if (k < mlp.bias_offset(l)) return net + ".layer" + std::to_string(l) + ".weight";
    if (k < end) return net + ".layer" + std::to_string(l) + ".bias";
  }
  return net + ".?";
}

bool block_range(const Mlp& mlp, const std::string& rest, Eigen::Index& first, Eigen::Index& count) {
  for (int l = 0; l < mlp.num_layers(); ++l) {
    const std::string layer = "layer" + std::to_string(l);
    if (rest == layer + ".weight") {
      first = mlp.weight_offset(l);
      count = static_cast<Eigen::Index>(mlp.layers()[l].in) * mlp.layers()[l].out;
      return true;
    }
    if (rest == layer + ".bias") {
      first = mlp.bias_offset(l);
      count = mlp.layers()[l].out;
      return true;
    }
  }
  return false;
}

}  // namespace

void corrupt_block(Gradients& g, const ActorParams& actor, const Mlp& critic, const std::string& block,
                   double delta) {
  Eigen::Index first = 0, count = 0;
  if (block == "actor.log_std") {
    g.log_std.array() += delta;
  } else if (block.rfind("actor.", 0) == 0 && block_range(actor.net, block.substr(6), first, count)) {
    g.actor_net.segment(first, count).array() += delta;
  } else if (block.rfind("critic.", 0) == 0 && block_range(critic, block.substr(7), first, count)) {
    g.critic.segment(first, count).array() += delta;
  } else {
    throw DomainError("unknown parameter block '" + block + "'");
  }
}

GradcheckResult run_gradcheck(const GradcheckOptions& options) {
  if (options.instances < 1 || options.batch < 1 || !(options.step > 0.0))
    throw DomainError("gradcheck: instances, batch and step must be positive");
  Rng rng(options.seed);
  std::uniform_int_distribution<int> in_dim(3, 8), width(2, 6), depth(1, 2), out_dim(1, 4);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  const PpoConfig cfg;
  const double denom_floor = options.abs_floor / options.tolerance;

  GradcheckResult res;
  res.instances = options.instances;
  for (int inst = 0; inst < options.instances; ++inst) {
    const int in = in_dim(rng), out = out_dim(rng);
    std::vector<int> hidden_a(depth(rng)), hidden_c(depth(rng));
    for (int& h : hidden_a) h = width(rng);
    for (int& h : hidden_c) h = width(rng);

    ActorParams actor;
    actor.net = Mlp::make(in, hidden_a, out);
    actor.net.init(rng, 1.0);
    actor.log_std.resize(out);
    for (int i = 0; i < out; ++i) actor.log_std[i] = -0.25 + 0.75 * unit(rng);
    Mlp critic = Mlp::make(in, hidden_c, 1);
    critic.init(rng, 1.0);
    Eigen::VectorXd offset(in), scale(in);
    for (int i = 0; i < in; ++i) {
      offset[i] = 0.5 * unit(rng);
      scale[i] = 1.0 + 0.5 * unit(rng);
    }
    actor.net.set_input_transform(offset, scale);
    critic.set_input_transform(offset, scale);

    const int B = options.batch;
    Minibatch mb;
    mb.obs.resize(in, B);
    for (Eigen::Index i = 0; i < mb.obs.size(); ++i) mb.obs.data()[i] = normal(rng);
    const PolicyOutput pol = policy_forward(actor, mb.obs);
    mb.actions.resize(out, B);
    mb.old_logp.resize(B);
    mb.advantages.resize(B);
    mb.returns.resize(B);
    for (int b = 0; b < B; ++b) {
      for (int i = 0; i < out; ++i) mb.actions(i, b) = pol.mean(i, b) + pol.std[i] * normal(rng);
      const double logp = gaussian_logp(mb.actions.col(b), pol.mean.col(b), pol.std);
      // keep the ratio away from the clip corners, where the loss has a kink
      double shift = 0.0;
      do {
        shift = 0.4 * unit(rng);
      } while (std::abs(std::exp(-shift) - (1.0 + cfg.clip_eps)) < 1e-3 ||
               std::abs(std::exp(-shift) - (1.0 - cfg.clip_eps)) < 1e-3);
      mb.old_logp[b] = logp + shift;
      mb.advantages[b] = normal(rng);
      mb.returns[b] = normal(rng);
    }

    LossResult analytic = ppo_losses(actor, critic, mb, cfg);
    if (options.corrupt) options.corrupt(analytic.grads, actor, critic);

    auto check = [&](Eigen::VectorXd& params, const Eigen::VectorXd& grad, auto name_of) {
      for (Eigen::Index k = 0; k < params.size(); ++k) {
        const double orig = params[k];
        params[k] = orig + options.step;
        const double lp = ppo_losses(actor, critic, mb, cfg).total;
        params[k] = orig - options.step;
        const double lm = ppo_losses(actor, critic, mb, cfg).total;
        params[k] = orig;
        const double fd = (lp - lm) / (2.0 * options.step);
        const double err =
            std::abs(fd - grad[k]) / std::max({std::abs(fd), std::abs(grad[k]), denom_floor});
        ++res.parameters;
        if (err > res.max_rel_error) {
          res.max_rel_error = err;
          res.worst_block = name_of(k);
        }
      }
    };
    check(actor.net.params(), analytic.grads.actor_net,
          [&](Eigen::Index k) { return block_name("actor", actor.net, k); });
    check(actor.log_std, analytic.grads.log_std, [](Eigen::Index) { return std::string("actor.log_std"); });
    check(critic.params(), analytic.grads.critic,
          [&](Eigen::Index k) { return block_name("critic", critic, k); });
  }
  res.passed = res.max_rel_error < options.tolerance;
  return res;
}

}  // namespace reachlab
