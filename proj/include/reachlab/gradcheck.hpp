#ifndef REACHLAB_GRADCHECK_HPP_
#define REACHLAB_GRADCHECK_HPP_

#include <cstdint>
#include <functional>
#include <string>

#include "reachlab/ppo.hpp"

namespace reachlab {

struct GradcheckOptions {
  int instances = 20;
  int batch = 3;
  double step = 1e-6;
  double tolerance = 1e-4;
  // Absolute error below which a parameter passes regardless of its
  // relative error; both grads are treated as at least floor / tolerance.
  double abs_floor = 1e-6;
  std::uint64_t seed = 1;
  // Test hook applied to the analytic gradients before they are compared.
  std::function<void(Gradients&, const ActorParams&, const Mlp&)> corrupt;
};

struct GradcheckResult {
  int instances = 0;
  long parameters = 0;
  double max_rel_error = 0.0;
  std::string worst_block;  // e.g. "actor.layer1.weight"
  bool passed = false;
};

// Finite-difference check of ppo_losses on random small actor/critic pairs.
GradcheckResult run_gradcheck(const GradcheckOptions& options);

// Adds `delta` to every analytic gradient entry of the named block
// ("actor.layer<k>.weight|bias", "actor.log_std", "critic.layer<k>.weight|bias").
void corrupt_block(Gradients& g, const ActorParams& actor, const Mlp& critic, const std::string& block,
                   double delta);

}  // namespace reachlab

#endif  // REACHLAB_GRADCHECK_HPP_
