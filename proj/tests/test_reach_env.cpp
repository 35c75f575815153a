#include <doctest.h>

#include <cmath>
#include <sstream>

#include <json.hpp>

#include "reachlab/errors.hpp"
#include "reachlab/reach_env.hpp"

using namespace reachlab;

namespace {

struct Fixture {
  ArmModel arm = ArmModel::ur10e();
  EnvConfig cfg = EnvConfig::defaults_for(arm);
};

EnvState home_state(const ArmModel& arm) {
  EnvState s;
  s.q = arm.q_default;
  const EEPose ee = forward_kinematics(arm, s.q);
  s.command.position = ee.position;
  s.command.orientation = ee.orientation;
  return s;
}

}  // namespace

TEST_CASE_FIXTURE(Fixture, "default workspace sits around the home tool position") {
  const EEPose home = forward_kinematics(arm, arm.q_default);
  CHECK(cfg.workspace.contains(home.position));
  CHECK_NOTHROW(cfg.validate(arm));
  CHECK((cfg.workspace.max - cfg.workspace.min - Eigen::Vector3d(0.3, 0.3, 0.25)).norm() < 1e-12);
}

TEST_CASE_FIXTURE(Fixture, "sample_command support and determinism") {
  SUBCASE("degenerate box") {
    const Eigen::Vector3d p(-0.5, -0.2, 0.5);
    cfg.workspace = {p, p};
    Rng rng(1);
    for (int k = 0; k < 50; ++k) CHECK(sample_command(rng, cfg, arm).position == p);
  }
  SUBCASE("samples stay in the box and the orientation cone") {
    Rng rng(2);
    for (int k = 0; k < 10000; ++k) {
      const PoseCommand c = sample_command(rng, cfg, arm);
      REQUIRE(cfg.workspace.contains(c.position));
      REQUIRE(orientation_error(c.orientation, cfg.nominal_orientation) <=
              cfg.max_orientation_perturbation + 1e-9);
    }
  }
  SUBCASE("seeded replay") {
    Rng a(77), b(77);
    for (int k = 0; k < 20; ++k) {
      const PoseCommand x = sample_command(a, cfg, arm), y = sample_command(b, cfg, arm);
      CHECK(x.position == y.position);
      CHECK(x.orientation.coeffs() == y.orientation.coeffs());
    }
  }
}

TEST_CASE_FIXTURE(Fixture, "observation layout") {
  EnvState s = home_state(arm);
  Observation o = build_observation(s, arm);
  CHECK(o.head<12>().isZero());

  Rng rng(4);
  std::normal_distribution<double> n;
  for (int i = 0; i < 6; ++i) {
    s.q[i] += n(rng);
    s.qdot[i] = n(rng);
    s.a_prev[i] = n(rng);
  }
  o = build_observation(s, arm);
  using namespace obs_layout;
  CHECK(o.size() == 25);
  // slices reassemble the state bit-exactly
  CHECK((o.segment<6>(kJointPos) + arm.q_default).eval() == s.q);
  CHECK(o.segment<6>(kJointVel) == s.qdot);
  CHECK(o.segment<3>(kCmdPos) == s.command.position);
  CHECK(o[kCmdQuat] == s.command.orientation.w());
  CHECK(o[kCmdQuat + 3] == s.command.orientation.z());
  CHECK(o.segment<6>(kPrevAction) == s.a_prev);

  EnvState swapped = s;
  std::swap(swapped.q[1], swapped.q[4]);
  const Observation o2 = build_observation(swapped, arm);
  Observation diff = o2 - o;
  diff[1] = diff[4] = 0.0;
  CHECK(diff.isZero());
}

TEST_CASE_FIXTURE(Fixture, "reward terms") {
  SUBCASE("goal state") {
    const EnvState s = home_state(arm);
    const RewardTerms r = compute_reward(s, Action::Zero(), arm, cfg.weights);
    CHECK(r.pos == doctest::Approx(0.0));
    CHECK(r.fine == doctest::Approx(1.0));
    CHECK(r.ori == doctest::Approx(0.0).epsilon(1e-7));
    CHECK(r.act == 0.0);
    CHECK(r.vel == 0.0);
    CHECK(r.total == doctest::Approx(cfg.weights.w_fine).epsilon(1e-7));
  }
  SUBCASE("distance sigma gives exp(-1)") {
    EnvState s = home_state(arm);
    s.command.position += Eigen::Vector3d(0.0, 0.06, 0.08);
    const RewardTerms r = compute_reward(s, Action::Zero(), arm, cfg.weights);
    CHECK(r.distance == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(r.fine == doctest::Approx(0.367879).epsilon(1e-6));
  }
  SUBCASE("weighted sum") {
    // components (-0.2, exp(-0.2), 0, -0.04, -0.09) with sigma = 1
    EnvState s = home_state(arm);
    s.command.position += Eigen::Vector3d(0.2, 0.0, 0.0);
    s.qdot[2] = 0.3;
    Action a = Action::Zero();
    a[0] = 0.2;
    RewardWeights w;
    w.sigma = 1.0;
    const RewardTerms r = compute_reward(s, a, arm, w);
    CHECK(r.pos == doctest::Approx(-0.2));
    CHECK(r.fine == doctest::Approx(0.8187).epsilon(1e-4));
    CHECK(r.act == doctest::Approx(-0.04));
    CHECK(r.vel == doctest::Approx(-0.09));
    const double dot = 1.0 * -0.2 + 0.5 * 0.8187 + 0.5 * 0.0 + 0.01 * -0.04 + 0.01 * -0.09;
    CHECK(dot == doctest::Approx(0.20805).epsilon(1e-12));
    CHECK(r.total == doctest::Approx(0.20805).epsilon(1e-4));
  }
}

TEST_CASE_FIXTURE(Fixture, "step dynamics") {
  SUBCASE("null action keeps the arm at home") {
    const StepResult r = step(home_state(arm), Action::Zero(), cfg, arm);
    CHECK(r.next.q == arm.q_default);
    CHECK(r.next.qdot.isZero());
  }
  SUBCASE("constant action converges to the scaled offset") {
    Action a;
    a << 0.8, -0.6, 0.4, -1.0, 1.0, 0.2;
    EnvConfig long_cfg = cfg;
    long_cfg.horizon = 1000;
    EnvState s = home_state(arm);
    for (int k = 0; k < 200; ++k) s = step(s, a, long_cfg, arm).next;
    CHECK((s.q - (arm.q_default + cfg.action_scale * a)).norm() < 1e-12);
    CHECK(s.qdot.isZero());
  }
  SUBCASE("actions are clamped to [-1, 1]") {
    Action big = Action::Constant(5.0);
    const StepResult r = step(home_state(arm), big, cfg, arm);
    CHECK(r.next.a_prev == Action::Constant(1.0));
    CHECK_THROWS_AS(step(home_state(arm), Action::Constant(NAN), cfg, arm), DomainError);
  }
  SUBCASE("done exactly at the last index") {
    EnvState s = home_state(arm);
    for (int k = 0; k < cfg.horizon; ++k) {
      const StepResult r = step(s, Action::Zero(), cfg, arm);
      CHECK(r.done == (k == cfg.horizon - 1));
      s = r.next;
    }
    CHECK_THROWS_AS(step(s, Action::Zero(), cfg, arm), UsageError);
  }
}

TEST_CASE_FIXTURE(Fixture, "reset") {
  Rng a(5), b(5);
  const auto [s1, o1] = reset(a, cfg, arm);
  const auto [s2, o2] = reset(b, cfg, arm);
  CHECK(o1.head<12>().isZero());
  CHECK(s1.command.position == s2.command.position);
  CHECK(o1 == o2);

  ReachEnv env(cfg, arm, 3);
  env.reset();
  env.set_step_counter(cfg.horizon - 1);
  CHECK(env.step(Action::Zero()).done);
  env.reset();
  CHECK(env.state().step == 0);
}

TEST_CASE_FIXTURE(Fixture, "vector env resets finished episodes in place") {
  VecEnv venv(cfg, arm, 4, 9);
  venv.reset_all();
  venv.env(2).set_step_counter(cfg.horizon - 1);
  const auto batch = venv.step(Eigen::MatrixXd::Zero(6, 4));
  CHECK(batch.done[2]);
  CHECK_FALSE(batch.done[0]);
  CHECK(venv.env(2).state().step == 0);
  // the pre-reset observation still has the old command
  CHECK(batch.final_obs.col(2) != batch.obs.col(2));
  CHECK(batch.final_obs.col(0) == batch.obs.col(0));
  CHECK_THROWS_AS(venv.step(Eigen::MatrixXd::Zero(6, 3)), DomainError);
}

TEST_CASE_FIXTURE(Fixture, "vector env streams differ per environment and per seed") {
  VecEnv a(cfg, arm, 8, 1), b(cfg, arm, 8, 2), again(cfg, arm, 8, 1);
  for (int i = 0; i < 8; ++i) {
    const Eigen::Vector3d p = a.env(i).state().command.position;
    CHECK(p == again.env(i).state().command.position);
    CHECK(p != b.env(i).state().command.position);
    for (int j = 0; j < i; ++j) CHECK(p != a.env(j).state().command.position);
  }
}

TEST_CASE_FIXTURE(Fixture, "trace records are one JSON object per line") {
  std::ostringstream out;
  const EnvState s = home_state(arm);
  write_trace_record(out, 3, s, Action::Zero(), compute_reward(s, Action::Zero(), arm, cfg.weights));
  const auto j = nlohmann::json::parse(out.str());
  CHECK(j.at("t") == 3);
  CHECK(j.at("q").size() == 6);
  CHECK(out.str().back() == '\n');
}

TEST_CASE_FIXTURE(Fixture, "workspace validation") {
  cfg.workspace.max += Eigen::Vector3d(3.0, 0.0, 0.0);
  CHECK_THROWS_AS(cfg.validate(arm), ConfigError);
}
