#include "reachlab/commands.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <ostream>

#include <json.hpp>

#include "reachlab/errors.hpp"

namespace reachlab {

namespace {

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

void finish(std::ofstream& out, const fs::path& path) {
  out.flush();
  if (!out) throw IoError("write failed for " + path.string());
}

std::string fmt(double x) {
  if (std::isnan(x)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  return buf;
}

}  // namespace

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const NumericAbort*>(&e)) return kExitNumeric;
  if (dynamic_cast<const IoError*>(&e) || dynamic_cast<const fs::filesystem_error*>(&e)) return kExitIo;
  return kExitValidation;
}

void prepare_out_dir(const fs::path& dir, const RootConfig& config) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory " + dir.string());
  save_config(config, dir / "effective_config.json");
}

void check_policy_shape(const ActorParams& actor) {
  if (actor.net.input_dim() != kObsDim || actor.net.output_dim() != kActDim)
    throw DataError("checkpoint maps " + std::to_string(actor.net.input_dim()) + " inputs to " +
                    std::to_string(actor.net.output_dim()) + " outputs; the environment needs " +
                    std::to_string(kObsDim) + " -> " + std::to_string(kActDim));
}

void write_learning_curve_header(std::ostream& out) {
  out << "iteration,mean_reward,mean_episode_return,mean_final_distance,policy_loss,value_loss,entropy,"
         "approx_kl,clip_fraction,mean_std\n";
}

void write_learning_curve_row(std::ostream& out, const IterationStats& s) {
  out << s.iteration << ',' << fmt(s.mean_reward) << ',' << fmt(s.mean_episode_return) << ','
      << fmt(s.mean_final_distance) << ',' << fmt(s.policy_loss) << ',' << fmt(s.value_loss) << ','
      << fmt(s.entropy) << ',' << fmt(s.approx_kl) << ',' << fmt(s.clip_fraction) << ',' << fmt(s.mean_std)
      << '\n';
}

TrainResult cmd_train(const RootConfig& config, const fs::path& out_dir, std::ostream* log) {
  config.validate();
  prepare_out_dir(out_dir, config);
  fs::create_directories(out_dir / "checkpoints");
  const std::string hash = config_hash(config);

  const fs::path curve_path = out_dir / "learning_curve.csv";
  std::ofstream curve = open_out(curve_path);
  write_learning_curve_header(curve);

  TrainHooks hooks;
  hooks.on_iteration = [&](const IterationStats& s) {
    write_learning_curve_row(curve, s);
    curve.flush();
    if (log)
      *log << "iter " << s.iteration << "  reward " << fmt(s.mean_reward) << "  final_dist "
           << fmt(s.mean_final_distance) << "  std " << fmt(s.mean_std) << std::endl;
  };
  hooks.on_checkpoint = [&](int iteration, const ActorParams& actor) {
    PolicyCheckpoint ck;
    ck.iteration = iteration;
    ck.config_hash = hash;
    ck.actor = actor;
    char name[40];
    std::snprintf(name, sizeof name, "policy_%06d.json", iteration);
    save_checkpoint(ck, out_dir / "checkpoints" / name);
    save_checkpoint(ck, out_dir / "policy.json");
  };
  TrainResult result = train(config.env, config.arm, config.ppo, config.seed, hooks);
  finish(curve, curve_path);
  return result;
}

EvalReport cmd_eval(const PolicyCheckpoint& checkpoint, const RootConfig& config, int episodes,
                    const fs::path& out_dir) {
  config.validate();
  check_policy_shape(checkpoint.actor);
  if (episodes < 1) throw ConfigError("episodes", "must be >= 1");
  EvalReport rep;
  rep.success_radius = config.eval.success_radius;
  rep.episodes =
      evaluate_policy(checkpoint.actor, config.env, config.arm, episodes, config.seed, rep.success_radius);
  std::vector<SuccessRecord> records;
  for (const auto& e : rep.episodes) {
    rep.mean_final_distance += e.final_distance;
    SuccessRecord r;
    r.final_distance = e.final_distance;
    r.reached_in_time = e.reached_in_time;
    records.push_back(r);
  }
  rep.mean_final_distance /= static_cast<double>(rep.episodes.size());
  rep.reach_rate = reach_success_rate(records, rep.success_radius);

  if (!out_dir.empty()) {
    prepare_out_dir(out_dir, config);
    nlohmann::json j;
    j["checkpoint_iteration"] = checkpoint.iteration;
    j["checkpoint_config_hash"] = checkpoint.config_hash;
    j["config_hash"] = config_hash(config);
    j["episodes"] = episodes;
    j["success_radius"] = rep.success_radius;
    j["mean_final_distance"] = rep.mean_final_distance;
    j["reach_rate"] = rep.reach_rate;
    nlohmann::json per = nlohmann::json::array();
    for (std::size_t i = 0; i < rep.episodes.size(); ++i) {
      const auto& e = rep.episodes[i];
      per.push_back({{"episode", i},
                     {"final_distance", e.final_distance},
                     {"reached_in_time", e.reached_in_time},
                     {"success", e.final_distance <= rep.success_radius && e.reached_in_time}});
    }
    j["records"] = per;
    const fs::path path = out_dir / "eval_report.json";
    std::ofstream out = open_out(path);
    out << j.dump(2) << '\n';
    finish(out, path);
  }
  return rep;
}

SimulateSummary cmd_simulate(const PolicyCheckpoint& checkpoint, const std::vector<DetectionRecord>& stream,
                             const RootConfig& config, const fs::path& out_dir) {
  config.validate();
  check_policy_shape(checkpoint.actor);
  prepare_out_dir(out_dir, config);
  SimulateSummary sum;
  const HarvestSetup setup{config.arm, config.env, config.perception, config.streamer};
  sum.report = simulate_harvest(checkpoint.actor, stream, setup);
  const HarvestReport& rep = sum.report;

  auto write = [&](const char* name, auto&& body) {
    const fs::path path = out_dir / name;
    std::ofstream out = open_out(path);
    body(out);
    finish(out, path);
  };
  write("targets.jsonl", [&](std::ostream& o) {
    for (const auto& t : rep.targets) write_target(o, t);
  });
  write("audit.jsonl", [&](std::ostream& o) {
    for (const auto& a : rep.audit) write_audit_entry(o, a);
  });
  write("commands.jsonl", [&](std::ostream& o) {
    for (const auto& c : rep.commands) write_command_record(o, c);
  });
  write("trajectory.csv", [&](std::ostream& o) {
    write_trajectory_csv_header(o);
    for (const auto& log : rep.trajectory) write_trajectory_rows(o, log);
  });
  write("success.jsonl", [&](std::ostream& o) {
    for (const auto& r : rep.attempts) write_success_record(o, r);
  });

  // segments shorter than the metric pipeline's minimum are counted, not analysed
  std::vector<TrajectoryLog> usable;
  for (const auto& log : rep.trajectory) {
    const double span = log.samples.back().t - log.samples.front().t;
    if (span * config.metrics.resample_rate >= 3.0)
      usable.push_back(log);
    else
      ++sum.segments_too_short;
  }
  sum.metrics = summarize(usable, config.metrics);
  write("metrics.csv", [&](std::ostream& o) { write_metrics_csv(o, sum.metrics); });

  int skipped = 0;
  for (const auto& a : rep.audit) skipped += a.kind == "target_skipped";
  nlohmann::json s;
  s["targets_emitted"] = rep.targets.size();
  s["tracks"] = rep.tracks;
  s["rejected_detections"] = rep.rejected_detections;
  s["planned_targets"] = rep.plan_targets.size();
  s["skipped_targets"] = skipped;
  s["attempts"] = rep.attempts.size();
  // rates over zero attempts are undefined and reported as null
  s["reach_success_rate"] = nullptr;
  s["harvest_success_rate"] = nullptr;
  if (!rep.attempts.empty()) {
    s["reach_success_rate"] = reach_success_rate(rep.attempts, config.streamer.reach_tolerance);
    s["harvest_success_rate"] = harvest_success_rate(rep.attempts);
  }
  s["halts"] = rep.halts;
  s["commands"] = rep.commands.size();
  s["segments"] = rep.trajectory.size();
  s["segments_too_short"] = sum.segments_too_short;
  s["sim_time"] = rep.sim_time;
  s["aborted"] = rep.aborted;
  write("summary.json", [&](std::ostream& o) { o << s.dump(2) << '\n'; });
  return sum;
}

std::vector<MetricsSummaryRow> cmd_analyze(std::istream& csv, const RootConfig& config, std::ostream& out) {
  config.metrics.validate();
  const auto logs = read_trajectory_csv(csv);
  auto rows = summarize(logs, config.metrics);
  write_metrics_csv(out, rows);
  return rows;
}

std::vector<DetectionRecord> synthesize_robot_frame_stream(const std::vector<Eigen::Vector3d>& berries,
                                                           const RootConfig& config, SyntheticScene scene) {
  const Eigen::Matrix4d inv = config.perception.extrinsics.matrix().inverse();
  scene.berries.clear();
  for (const auto& b : berries) scene.berries.push_back((inv * b.homogeneous()).head<3>());
  return synthesize_stream(scene, config.perception.intrinsics);
}

}  // namespace reachlab
