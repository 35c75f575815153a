// Command-line front end: train, eval, simulate, analyze, gradcheck and
// synth-stream. Exit status 0 on success, 2 on validation errors, 3 when
// training hits a non-finite value, 4 on I/O failures.

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "reachlab/commands.hpp"
#include "reachlab/errors.hpp"

namespace {

using namespace reachlab;

struct Common {
  std::string config;
  std::string out = "out";
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config, "JSON config file (absent keys take defaults)");
  app->add_option("--out", c.out, "output directory");
  app->add_option("--seed", c.seed, "override the config seed");
}

RootConfig resolve(const Common& c) {
  RootConfig cfg = c.config.empty() ? RootConfig::defaults() : load_config(c.config);
  if (c.seed) cfg.seed = *c.seed;
  cfg.validate();
  return cfg;
}

std::vector<DetectionRecord> read_stream_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open stream " + path);
  return read_detection_stream(in);
}

// "x,y,z;x,y,z;..."
std::vector<Eigen::Vector3d> parse_points(const std::string& text) {
  std::vector<Eigen::Vector3d> pts;
  std::stringstream all(text);
  std::string item;
  while (std::getline(all, item, ';')) {
    if (item.empty()) continue;
    std::stringstream ss(item);
    Eigen::Vector3d p;
    char c1 = 0, c2 = 0;
    if (!(ss >> p.x() >> c1 >> p.y() >> c2 >> p.z()) || c1 != ',' || c2 != ',')
      throw ConfigError("--berries", "expected x,y,z triples separated by ';', got '" + item + "'");
    pts.push_back(p);
  }
  return pts;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"reachlab: goal-conditioned reaching, perception and harvest pipeline tools"};
  app.require_subcommand(1);

  Common train_opt, eval_opt, sim_opt, analyze_opt, grad_opt, synth_opt;

  auto* train = app.add_subcommand("train", "train a reaching policy with PPO");
  add_common(train, train_opt);
  bool quiet = false;
  train->add_flag("--quiet", quiet, "no per-iteration progress");

  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint with deterministic actions");
  add_common(eval, eval_opt);
  std::string eval_ckpt;
  std::optional<int> episodes;
  eval->add_option("--checkpoint", eval_ckpt, "policy checkpoint")->required();
  eval->add_option("--episodes", episodes, "override eval.episodes");

  auto* sim = app.add_subcommand("simulate", "closed-loop harvest over a detection stream");
  add_common(sim, sim_opt);
  std::string sim_ckpt, sim_stream;
  sim->add_option("--checkpoint", sim_ckpt, "policy checkpoint")->required();
  sim->add_option("--stream", sim_stream, "detection stream (JSON lines)")->required();

  auto* analyze = app.add_subcommand("analyze", "motion metrics of a trajectory CSV");
  add_common(analyze, analyze_opt);
  std::string traj;
  analyze->add_option("--trajectory", traj, "CSV with t,x,y,z,segment_label")->required();

  auto* grad = app.add_subcommand("gradcheck", "finite-difference check of the PPO gradients");
  add_common(grad, grad_opt);
  int instances = 20;
  std::string corrupt;
  grad->add_option("--instances", instances, "random network/minibatch instances");
  grad->add_option("--corrupt", corrupt, "test hook: perturb the analytic gradient of this block")
      ->group("");

  auto* synth = app.add_subcommand("synth-stream", "write a synthetic detection stream");
  add_common(synth, synth_opt);
  std::string berries, synth_file = "stream.jsonl";
  SyntheticScene scene;
  synth->add_option("--berries", berries, "robot-frame berry positions x,y,z;...")->required();
  synth->add_option("--frames", scene.frames);
  synth->add_option("--dropout", scene.dropout);
  synth->add_option("--spurious", scene.spurious_rate);
  synth->add_option("--pixel-noise", scene.pixel_noise);
  synth->add_option("--depth-noise", scene.depth_noise);
  synth->add_option("--file", synth_file, "file name inside --out");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (*train) {
      const RootConfig cfg = resolve(train_opt);
      const TrainResult r = cmd_train(cfg, train_opt.out, quiet ? nullptr : &std::cout);
      if (!r.curve.empty())
        std::cout << "final mean distance " << r.curve.back().mean_final_distance << " m\n";
      std::cout << "wrote " << train_opt.out << "/policy.json\n";
    } else if (*eval) {
      const RootConfig cfg = resolve(eval_opt);
      const PolicyCheckpoint ck = load_checkpoint(eval_ckpt);
      if (ck.config_hash != config_hash(cfg))
        std::cerr << "note: checkpoint was trained with a different config (hash " << ck.config_hash << ")\n";
      const EvalReport r = cmd_eval(ck, cfg, episodes.value_or(cfg.eval.episodes), eval_opt.out);
      std::cout << "episodes " << r.episodes.size() << "  mean final distance " << r.mean_final_distance
                << " m  reach rate " << r.reach_rate << "% at " << r.success_radius << " m\n";
    } else if (*sim) {
      const RootConfig cfg = resolve(sim_opt);
      const PolicyCheckpoint ck = load_checkpoint(sim_ckpt);
      const SimulateSummary s = cmd_simulate(ck, read_stream_file(sim_stream), cfg, sim_opt.out);
      std::ifstream summary(std::filesystem::path(sim_opt.out) / "summary.json");
      std::cout << summary.rdbuf();
      if (s.report.aborted) {
        std::cerr << "simulation stopped: " << s.report.audit.back().detail << " (phase "
                  << s.report.audit.back().phase << ")\n";
        return kExitValidation;
      }
    } else if (*analyze) {
      const RootConfig cfg = resolve(analyze_opt);
      std::ifstream in(traj);
      if (!in) throw IoError("cannot open trajectory " + traj);
      prepare_out_dir(analyze_opt.out, cfg);
      const auto path = std::filesystem::path(analyze_opt.out) / "metrics.csv";
      std::ostringstream table;
      cmd_analyze(in, cfg, table);
      std::ofstream out(path, std::ios::binary);
      if (!(out << table.str())) throw IoError("cannot write " + path.string());
      std::cout << table.str();
    } else if (*grad) {
      const RootConfig cfg = resolve(grad_opt);
      GradcheckOptions opt;
      opt.instances = instances;
      opt.seed = cfg.seed;
      if (!corrupt.empty())
        opt.corrupt = [&](Gradients& g, const ActorParams& a, const Mlp& c) { corrupt_block(g, a, c, corrupt, 1e-2); };
      const GradcheckResult r = run_gradcheck(opt);
      std::cout << "gradcheck " << (r.passed ? "PASS" : "FAIL") << "  instances " << r.instances
                << "  parameters " << r.parameters << "  max relative error " << r.max_rel_error
                << "  worst block " << r.worst_block << '\n';
      return r.passed ? kExitOk : kExitValidation;
    } else if (*synth) {
      const RootConfig cfg = resolve(synth_opt);
      scene.seed = cfg.seed;
      const auto dets = synthesize_robot_frame_stream(parse_points(berries), cfg, scene);
      prepare_out_dir(synth_opt.out, cfg);
      const auto path = std::filesystem::path(synth_opt.out) / synth_file;
      std::ofstream out(path, std::ios::binary);
      for (const auto& d : dets) write_detection(out, d);
      if (!out) throw IoError("cannot write " + path.string());
      std::cout << "wrote " << dets.size() << " detections to " << path.string() << '\n';
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e);
  }
  return kExitOk;
}
