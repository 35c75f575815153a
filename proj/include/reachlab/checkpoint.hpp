#ifndef REACHLAB_CHECKPOINT_HPP_
#define REACHLAB_CHECKPOINT_HPP_

#include <filesystem>
#include <string>

#include "reachlab/ppo.hpp"

namespace reachlab {

inline constexpr int kCheckpointFormatVersion = 1;

// Exported actor: layer shapes with row-major weights, biases, the fixed
// input standardisation and log_std, tagged with the training iteration and
// the hash of the config that produced it.
struct PolicyCheckpoint {
  int format_version = kCheckpointFormatVersion;
  int iteration = 0;
  std::string config_hash;
  ActorParams actor;
};

std::string serialize_checkpoint(const PolicyCheckpoint& ckpt);
// Throws DataError when shapes do not chain or sizes disagree.
PolicyCheckpoint parse_checkpoint(const std::string& text);

void save_checkpoint(const PolicyCheckpoint& ckpt, const std::filesystem::path& path);
PolicyCheckpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace reachlab

#endif  // REACHLAB_CHECKPOINT_HPP_
