#include "reachlab/config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "reachlab/errors.hpp"

namespace reachlab {

using nlohmann::json;

namespace {

const json& empty_object() {
  static const json e = json::object();
  return e;
}

// Typed, path-aware view of one config object.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "must be an object");
  }

  void allow(std::initializer_list<const char*> keys) const {
    for (const auto& [k, v] : j_.items()) {
      if (std::none_of(keys.begin(), keys.end(), [&](const char* a) { return k == a; }))
        throw ConfigError(field(k.c_str()), "unknown key");
    }
  }

  std::string field(const char* key) const { return path_.empty() ? key : path_ + "." + key; }
  bool has(const char* key) const { return j_.contains(key); }

  Section sub(const char* key) const {
    return Section(has(key) ? j_.at(key) : empty_object(), field(key));
  }

  void get(const char* key, double& out) const {
    if (!has(key)) return;
    const json& v = j_.at(key);
    if (!v.is_number()) throw ConfigError(field(key), "expected a number");
    out = v.get<double>();
  }

  void get(const char* key, int& out) const {
    if (!has(key)) return;
    const json& v = j_.at(key);
    if (!v.is_number_integer()) throw ConfigError(field(key), "expected an integer");
    const auto x = v.get<std::int64_t>();
    if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max())
      throw ConfigError(field(key), "integer out of range");
    out = static_cast<int>(x);
  }

  void get(const char* key, std::uint64_t& out) const {
    if (!has(key)) return;
    const json& v = j_.at(key);
    if (!v.is_number_unsigned()) throw ConfigError(field(key), "expected a non-negative integer");
    out = v.get<std::uint64_t>();
  }

  void get(const char* key, bool& out) const {
    if (!has(key)) return;
    const json& v = j_.at(key);
    if (!v.is_boolean()) throw ConfigError(field(key), "expected true or false");
    out = v.get<bool>();
  }

  void get(const char* key, std::vector<int>& out) const {
    if (!has(key)) return;
    const json& v = j_.at(key);
    if (!v.is_array()) throw ConfigError(field(key), "expected an array of integers");
    std::vector<int> r;
    for (const auto& e : v) {
      if (!e.is_number_integer()) throw ConfigError(field(key), "expected an array of integers");
      r.push_back(e.get<int>());
    }
    out = std::move(r);
  }

  template <int N>
  void get(const char* key, Eigen::Matrix<double, N, 1>& out) const {
    if (!has(key)) return;
    out = numbers(j_.at(key), field(key), N);
  }

  void get(const char* key, Eigen::Matrix4d& out) const {
    if (!has(key)) return;
    const json& v = j_.at(key);
    if (!v.is_array() || v.size() != 4) throw ConfigError(field(key), "expected 4 rows of 4 numbers");
    for (int r = 0; r < 4; ++r) out.row(r) = numbers(v[r], field(key), 4).transpose();
  }

 private:
  static Eigen::VectorXd numbers(const json& v, const std::string& name, int n) {
    if (!v.is_array() || static_cast<int>(v.size()) != n)
      throw ConfigError(name, "expected an array of " + std::to_string(n) + " numbers");
    Eigen::VectorXd r(n);
    for (int i = 0; i < n; ++i) {
      if (!v[i].is_number()) throw ConfigError(name, "expected an array of " + std::to_string(n) + " numbers");
      r[i] = v[i].get<double>();
    }
    return r;
  }

  const json& j_;
  std::string path_;
};

json vec(const Eigen::VectorXd& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

json mat4(const Eigen::Matrix4d& m) {
  json rows = json::array();
  for (int r = 0; r < 4; ++r) rows.push_back(vec(m.row(r).transpose()));
  return rows;
}

json quat(const Eigen::Quaterniond& q) { return json({q.w(), q.x(), q.y(), q.z()}); }

void read_arm(const Section& s, ArmModel& arm) {
  s.allow({"dh", "base_frame", "q_default", "pos_min", "pos_max", "vel_max"});
  s.get("q_default", arm.q_default);
  s.get("pos_min", arm.limits.pos_min);
  s.get("pos_max", arm.limits.pos_max);
  s.get("vel_max", arm.limits.vel_max);
  if (s.has("base_frame")) {
    Eigen::Matrix4d m;
    s.get("base_frame", m);
    if (!is_rigid(m)) throw ConfigError(s.field("base_frame"), "must be a rigid transform");
    arm.base_frame.matrix() = m;
  }
}

void read_dh(const json& root, ArmModel& arm) {
  if (!root.contains("arm") || !root.at("arm").is_object() || !root.at("arm").contains("dh")) return;
  const json& dh = root.at("arm").at("dh");
  if (!dh.is_array() || dh.size() != kNumJoints)
    throw ConfigError("arm.dh", "expected 6 rows of [a, d, alpha, theta_offset]");
  for (int i = 0; i < kNumJoints; ++i) {
    const json& row = dh[i];
    const std::string name = "arm.dh[" + std::to_string(i) + "]";
    if (!row.is_array() || row.size() != 4 ||
        !std::all_of(row.begin(), row.end(), [](const json& e) { return e.is_number(); }))
      throw ConfigError(name, "expected [a, d, alpha, theta_offset]");
    arm.dh[i] = {row[0].get<double>(), row[1].get<double>(), row[2].get<double>(), row[3].get<double>()};
  }
}

void read_env(const Section& s, EnvConfig& env) {
  s.allow({"dt", "decimation", "horizon", "workspace", "action_scale", "weights", "nominal_orientation",
           "max_orientation_perturbation", "reset_joint_jitter"});
  s.get("dt", env.dt);
  s.get("decimation", env.decimation);
  s.get("horizon", env.horizon);
  s.get("action_scale", env.action_scale);
  s.get("max_orientation_perturbation", env.max_orientation_perturbation);
  s.get("reset_joint_jitter", env.reset_joint_jitter);
  const Section ws = s.sub("workspace");
  ws.allow({"min", "max"});
  ws.get("min", env.workspace.min);
  ws.get("max", env.workspace.max);
  const Section w = s.sub("weights");
  w.allow({"w_pos", "w_fine", "w_ori", "w_act", "w_vel", "sigma"});
  w.get("w_pos", env.weights.w_pos);
  w.get("w_fine", env.weights.w_fine);
  w.get("w_ori", env.weights.w_ori);
  w.get("w_act", env.weights.w_act);
  w.get("w_vel", env.weights.w_vel);
  w.get("sigma", env.weights.sigma);
  if (s.has("nominal_orientation")) {
    Eigen::Vector4d q;
    s.get("nominal_orientation", q);
    env.nominal_orientation = Eigen::Quaterniond(q[0], q[1], q[2], q[3]);
  }
}

void read_ppo(const Section& s, PpoConfig& p) {
  s.allow({"gamma", "lam", "clip_eps", "value_coef", "entropy_coef", "learning_rate", "epochs",
           "minibatches", "steps_per_env", "num_envs", "iterations", "normalize_advantages",
           "max_grad_norm", "hidden", "init_std", "checkpoint_interval", "num_threads",
           "randomize_initial_episode", "scale_rewards", "bootstrap_on_timeout"});
  s.get("gamma", p.gamma);
  s.get("lam", p.lam);
  s.get("clip_eps", p.clip_eps);
  s.get("value_coef", p.value_coef);
  s.get("entropy_coef", p.entropy_coef);
  s.get("learning_rate", p.learning_rate);
  s.get("epochs", p.epochs);
  s.get("minibatches", p.minibatches);
  s.get("steps_per_env", p.steps_per_env);
  s.get("num_envs", p.num_envs);
  s.get("iterations", p.iterations);
  s.get("normalize_advantages", p.normalize_advantages);
  s.get("max_grad_norm", p.max_grad_norm);
  s.get("hidden", p.hidden);
  s.get("init_std", p.init_std);
  s.get("checkpoint_interval", p.checkpoint_interval);
  s.get("num_threads", p.num_threads);
  s.get("randomize_initial_episode", p.randomize_initial_episode);
  s.get("scale_rewards", p.scale_rewards);
  s.get("bootstrap_on_timeout", p.bootstrap_on_timeout);
}

void read_perception(const Section& s, PerceptionConfig& p) {
  s.allow({"intrinsics", "extrinsics", "tau_p", "buffer_size", "min_quality", "min_depth", "max_depth",
           "max_misses"});
  const Section in = s.sub("intrinsics");
  in.allow({"fx", "fy", "cx", "cy", "width", "height"});
  in.get("fx", p.intrinsics.fx);
  in.get("fy", p.intrinsics.fy);
  in.get("cx", p.intrinsics.cx);
  in.get("cy", p.intrinsics.cy);
  in.get("width", p.intrinsics.width);
  in.get("height", p.intrinsics.height);
  if (s.has("extrinsics")) {
    Eigen::Matrix4d m;
    s.get("extrinsics", m);
    p.extrinsics = ExtrinsicCalibration(m);
  }
  s.get("tau_p", p.tau_p);
  s.get("buffer_size", p.buffer_size);
  s.get("min_quality", p.min_quality);
  s.get("min_depth", p.min_depth);
  s.get("max_depth", p.max_depth);
  s.get("max_misses", p.max_misses);
}

void read_streamer(const Section& s, StreamerConfig& c) {
  s.allow({"vel_max", "convergence_radius", "halt_demand_threshold", "min_command_duration", "pull_offset",
           "basket_position", "settle_tolerance", "reach_tolerance", "deposit_tolerance", "log_rate"});
  s.get("vel_max", c.vel_max);
  s.get("convergence_radius", c.convergence_radius);
  s.get("halt_demand_threshold", c.halt_demand_threshold);
  s.get("min_command_duration", c.min_command_duration);
  s.get("pull_offset", c.pull_offset);
  s.get("basket_position", c.basket_position);
  s.get("settle_tolerance", c.settle_tolerance);
  s.get("reach_tolerance", c.reach_tolerance);
  s.get("deposit_tolerance", c.deposit_tolerance);
  s.get("log_rate", c.log_rate);
}

void read_metrics(const Section& s, MetricsConfig& m) {
  s.allow({"resample_rate", "ma_window", "rdp_epsilon", "jerk_percentile", "stillness_speed"});
  s.get("resample_rate", m.resample_rate);
  s.get("ma_window", m.ma_window);
  s.get("rdp_epsilon", m.rdp_epsilon);
  s.get("jerk_percentile", m.jerk_percentile);
  s.get("stillness_speed", m.stillness_speed);
}

std::pair<int, int> line_col(const std::string& text, std::size_t byte) {
  int line = 1, col = 1;
  for (std::size_t i = 0; i < std::min(byte > 0 ? byte - 1 : 0, text.size()); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

}  // namespace

void EvalConfig::validate() const {
  if (episodes < 1) throw ConfigError("eval.episodes", "must be >= 1");
  if (!(success_radius > 0.0)) throw ConfigError("eval.success_radius", "must be > 0");
}

Eigen::Matrix4d default_camera_extrinsics(const ArmModel& arm) {
  const Eigen::Vector3d home = forward_kinematics(arm, arm.q_default).position;
  Eigen::Matrix4d t = Eigen::Matrix4d::Identity();
  // optical axis along -z of the robot, image x along robot x
  t.block<3, 3>(0, 0) << 1, 0, 0, 0, -1, 0, 0, 0, -1;
  t.block<3, 1>(0, 3) = home + Eigen::Vector3d(0.0, 0.0, 0.75);
  return t;
}

RootConfig RootConfig::defaults() { return defaults_for(ArmModel::ur10e()); }

RootConfig RootConfig::defaults_for(const ArmModel& arm) {
  RootConfig c;
  c.arm = arm;
  c.env = EnvConfig::defaults_for(arm);
  c.perception.extrinsics = ExtrinsicCalibration(default_camera_extrinsics(arm));
  const Eigen::Vector3d home = forward_kinematics(arm, arm.q_default).position;
  c.streamer.basket_position = home + Eigen::Vector3d(0.10, 0.12, -0.05);
  return c;
}

void RootConfig::validate() const {
  arm.validate();
  env.validate(arm);
  ppo.validate();
  perception.validate();
  streamer.validate();
  metrics.validate();
  eval.validate();
  for (int i = 0; i < kNumJoints; ++i)
    if (streamer.vel_max[i] > arm.limits.vel_max[i])
      throw ConfigError("streamer.vel_max[" + std::to_string(i) + "]", "exceeds arm.vel_max");
  if (!env.workspace.contains(streamer.basket_position))
    throw ConfigError("streamer.basket_position", "outside env.workspace");
}

RootConfig parse_config(const std::string& text) {
  if (text.find_first_not_of(" \t\r\n") == std::string::npos) {
    RootConfig c = RootConfig::defaults();
    c.validate();
    return c;
  }
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    const auto [line, col] = line_col(text, e.byte);
    throw ConfigError("<parse>", "line " + std::to_string(line) + ", column " + std::to_string(col) +
                                     ": " + e.what());
  }
  const Section top(root, "");
  top.allow({"seed", "arm", "env", "ppo", "perception", "streamer", "metrics", "eval"});

  ArmModel arm = ArmModel::ur10e();
  read_dh(root, arm);
  read_arm(top.sub("arm"), arm);
  arm.validate();
  RootConfig c = RootConfig::defaults_for(arm);
  top.get("seed", c.seed);
  read_env(top.sub("env"), c.env);
  read_ppo(top.sub("ppo"), c.ppo);
  read_perception(top.sub("perception"), c.perception);
  read_streamer(top.sub("streamer"), c.streamer);
  read_metrics(top.sub("metrics"), c.metrics);
  const Section ev = top.sub("eval");
  ev.allow({"episodes", "success_radius"});
  ev.get("episodes", c.eval.episodes);
  ev.get("success_radius", c.eval.success_radius);
  c.validate();
  return c;
}

RootConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

json to_json(const RootConfig& c) {
  json j;
  j["seed"] = c.seed;

  json dh = json::array();
  for (const auto& r : c.arm.dh) dh.push_back({r.a, r.d, r.alpha, r.theta_offset});
  j["arm"] = {{"dh", dh},
              {"base_frame", mat4(c.arm.base_frame.matrix())},
              {"q_default", vec(c.arm.q_default)},
              {"pos_min", vec(c.arm.limits.pos_min)},
              {"pos_max", vec(c.arm.limits.pos_max)},
              {"vel_max", vec(c.arm.limits.vel_max)}};

  const auto& e = c.env;
  j["env"] = {{"dt", e.dt},
              {"decimation", e.decimation},
              {"horizon", e.horizon},
              {"workspace", {{"min", vec(e.workspace.min)}, {"max", vec(e.workspace.max)}}},
              {"action_scale", e.action_scale},
              {"weights",
               {{"w_pos", e.weights.w_pos},
                {"w_fine", e.weights.w_fine},
                {"w_ori", e.weights.w_ori},
                {"w_act", e.weights.w_act},
                {"w_vel", e.weights.w_vel},
                {"sigma", e.weights.sigma}}},
              {"nominal_orientation", quat(e.nominal_orientation)},
              {"max_orientation_perturbation", e.max_orientation_perturbation},
              {"reset_joint_jitter", e.reset_joint_jitter}};

  const auto& p = c.ppo;
  j["ppo"] = {{"gamma", p.gamma},
              {"lam", p.lam},
              {"clip_eps", p.clip_eps},
              {"value_coef", p.value_coef},
              {"entropy_coef", p.entropy_coef},
              {"learning_rate", p.learning_rate},
              {"epochs", p.epochs},
              {"minibatches", p.minibatches},
              {"steps_per_env", p.steps_per_env},
              {"num_envs", p.num_envs},
              {"iterations", p.iterations},
              {"normalize_advantages", p.normalize_advantages},
              {"max_grad_norm", p.max_grad_norm},
              {"hidden", p.hidden},
              {"init_std", p.init_std},
              {"checkpoint_interval", p.checkpoint_interval},
              {"num_threads", p.num_threads},
              {"randomize_initial_episode", p.randomize_initial_episode},
              {"scale_rewards", p.scale_rewards},
              {"bootstrap_on_timeout", p.bootstrap_on_timeout}};

  const auto& pc = c.perception;
  j["perception"] = {{"intrinsics",
                      {{"fx", pc.intrinsics.fx},
                       {"fy", pc.intrinsics.fy},
                       {"cx", pc.intrinsics.cx},
                       {"cy", pc.intrinsics.cy},
                       {"width", pc.intrinsics.width},
                       {"height", pc.intrinsics.height}}},
                     {"extrinsics", mat4(pc.extrinsics.matrix())},
                     {"tau_p", pc.tau_p},
                     {"buffer_size", pc.buffer_size},
                     {"min_quality", pc.min_quality},
                     {"min_depth", pc.min_depth},
                     {"max_depth", pc.max_depth},
                     {"max_misses", pc.max_misses}};

  const auto& s = c.streamer;
  j["streamer"] = {{"vel_max", vec(s.vel_max)},
                   {"convergence_radius", s.convergence_radius},
                   {"halt_demand_threshold", s.halt_demand_threshold},
                   {"min_command_duration", s.min_command_duration},
                   {"pull_offset", s.pull_offset},
                   {"basket_position", vec(s.basket_position)},
                   {"settle_tolerance", s.settle_tolerance},
                   {"reach_tolerance", s.reach_tolerance},
                   {"deposit_tolerance", s.deposit_tolerance},
                   {"log_rate", s.log_rate}};

  const auto& m = c.metrics;
  j["metrics"] = {{"resample_rate", m.resample_rate},
                  {"ma_window", m.ma_window},
                  {"rdp_epsilon", m.rdp_epsilon},
                  {"jerk_percentile", m.jerk_percentile},
                  {"stillness_speed", m.stillness_speed}};

  j["eval"] = {{"episodes", c.eval.episodes}, {"success_radius", c.eval.success_radius}};
  return j;
}

std::string dump_config(const RootConfig& config) { return to_json(config).dump(2) + "\n"; }

void save_config(const RootConfig& config, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << dump_config(config);
  if (!out) throw IoError("write failed for " + path.string());
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string config_hash(const RootConfig& config) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(to_json(config).dump())));
  return buf;
}

}  // namespace reachlab
