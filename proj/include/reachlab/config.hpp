#ifndef REACHLAB_CONFIG_HPP_
#define REACHLAB_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "reachlab/kinematics.hpp"
#include "reachlab/metrics.hpp"
#include "reachlab/perception.hpp"
#include "reachlab/ppo.hpp"
#include "reachlab/reach_env.hpp"
#include "reachlab/streamer.hpp"

namespace reachlab {

struct EvalConfig {
  int episodes = 100;
  double success_radius = 0.02;  // m

  void validate() const;
};

struct RootConfig {
  std::uint64_t seed = 1;
  ArmModel arm = ArmModel::ur10e();
  EnvConfig env;
  PpoConfig ppo;
  PerceptionConfig perception;
  StreamerConfig streamer;
  MetricsConfig metrics;
  EvalConfig eval;

  // Defaults that depend on the arm (workspace, nominal orientation, basket)
  // are derived from `arm`.
  static RootConfig defaults();
  static RootConfig defaults_for(const ArmModel& arm);

  // Every module's checks plus the cross-field ones; throws ConfigError.
  void validate() const;
};

// Default camera pose: looking straight down at the workspace from above.
Eigen::Matrix4d default_camera_extrinsics(const ArmModel& arm);

// Absent keys keep their defaults; unknown keys are rejected. Parse errors
// report line and column.
RootConfig parse_config(const std::string& text);
RootConfig load_config(const std::filesystem::path& path);

nlohmann::json to_json(const RootConfig& config);
std::string dump_config(const RootConfig& config);
void save_config(const RootConfig& config, const std::filesystem::path& path);

// 64-bit FNV-1a over the canonical dump, as 16 hex digits.
std::string config_hash(const RootConfig& config);
std::uint64_t fnv1a64(const std::string& bytes);

}  // namespace reachlab

#endif  // REACHLAB_CONFIG_HPP_
