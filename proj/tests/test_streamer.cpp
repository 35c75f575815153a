#include <doctest.h>

#include <algorithm>

#include "oracles.hpp"
#include "reachlab/errors.hpp"
#include "reachlab/streamer.hpp"

using namespace reachlab;

TEST_CASE("time parameterisation") {
  const JointVector ones = JointVector::Constant(1.0);
  CHECK(time_parameterize(JointVector::Zero(), ones, 0.02) == 0.0);

  JointVector dq = JointVector::Zero();
  dq[0] = 0.3;
  dq[1] = -0.6;
  CHECK(time_parameterize(dq, ones) == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(time_parameterize(2.0 * dq, ones) == doctest::Approx(1.2).epsilon(1e-15));

  JointVector vel = ones;
  vel[1] = 3.0;
  CHECK(time_parameterize(dq, vel) == doctest::Approx(0.3));  // joint 0 now dominates

  JointVector tiny = JointVector::Zero();
  tiny[4] = 1e-5;
  CHECK(time_parameterize(tiny, ones, 0.02) == 0.02);

  dq[2] = NAN;
  CHECK_THROWS_AS(time_parameterize(dq, ones), DomainError);

  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> v(0.1, 3.0);
  for (int k = 0; k < 10000; ++k) {
    const JointVector q = oracle::random_joints(rng, 1.0);
    JointVector vm;
    for (int i = 0; i < 6; ++i) vm[i] = v(rng);
    const double t = time_parameterize(q, vm, 0.02);
    for (int i = 0; i < 6; ++i) REQUIRE(t * vm[i] >= std::abs(q[i]));
  }
}

TEST_CASE("halt monitor") {
  StreamerConfig cfg;
  HaltMonitor m;
  JointVector dq = JointVector::Zero();
  dq[0] = 0.2;

  SUBCASE("inactive far from the target") {
    for (int k = 0; k < 10; ++k) {
      dq[0] = -dq[0];
      CHECK(stream_step(dq, 0.5, cfg, m).kind == StreamDecision::Kind::kCommand);
    }
    CHECK_FALSE(m.halted());
    CHECK(m.commands_seen() == 10);
  }
  SUBCASE("fast oscillation near the target latches") {
    const StreamDecision d = stream_step(dq, 0.01, cfg, m);
    CHECK(d.kind == StreamDecision::Kind::kHalt);
    CHECK(d.implied_speed == doctest::Approx(1.0));
    CHECK(m.halted());
    // even slow, far commands stay suppressed until reset
    JointVector slow = JointVector::Zero();
    slow[3] = 1e-3;
    CHECK(stream_step(slow, 1.0, cfg, m).kind == StreamDecision::Kind::kHalt);
    m.reset();
    CHECK(stream_step(slow, 1.0, cfg, m).kind == StreamDecision::Kind::kCommand);
  }
  SUBCASE("small residual commands pass") {
    JointVector small = JointVector::Zero();
    small[2] = 0.005;  // 0.005 / 0.02 s = 0.25 rad/s
    for (int k = 0; k < 20; ++k) {
      small = -small;
      CHECK(stream_step(small, 0.01, cfg, m).kind == StreamDecision::Kind::kCommand);
    }
  }
  SUBCASE("zero motion is skipped") {
    CHECK(stream_step(JointVector::Zero(), 0.01, cfg, m).kind == StreamDecision::Kind::kSkip);
  }
  SUBCASE("latching over random traces") {
    std::mt19937_64 rng(10);
    for (int trial = 0; trial < 200; ++trial) {
      bool halted = false;
      REQUIRE(oracle::halt_latches(cfg, 0.2, 60, rng, halted));
      CHECK(halted);
      REQUIRE(oracle::halt_latches(cfg, 0.005, 60, rng, halted));
      CHECK_FALSE(halted);
    }
  }
}

TEST_CASE("nearest-first plan") {
  const Eigen::Vector3d ee(0, 0, 0);
  CHECK(plan_harvest({}, ee).targets.empty());

  const std::vector<Eigen::Vector3d> t{{0.9, 0, 0}, {0, 0.4, 0}, {0, 0, -0.7}};
  const HarvestPlan p = plan_harvest(t, ee);
  CHECK(p.order == std::vector<int>{1, 2, 0});
  CHECK(p.targets[0] == t[1]);

  const HarvestPlan tie = plan_harvest({{0.5, 0, 0}, {0, 0.5, 0}, {0.1, 0, 0}}, ee);
  CHECK(tie.order == std::vector<int>{2, 0, 1});

  std::mt19937_64 rng(2);
  std::normal_distribution<double> n;
  std::vector<Eigen::Vector3d> many(30);
  for (auto& x : many) x = {n(rng), n(rng), n(rng)};
  const HarvestPlan big = plan_harvest(many, ee);
  std::vector<int> sorted = big.order;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < 30; ++i) CHECK(sorted[i] == i);
  for (int i = 1; i < 30; ++i) CHECK(big.targets[i - 1].norm() <= big.targets[i].norm());
}

TEST_CASE("phase machine edges") {
  const HarvestPhase home;
  CHECK(advance_phase(home, {EventKind::kStartScan}).phase.kind == PhaseKind::kScan);
  CHECK(advance_phase(home, {EventKind::kScanComplete, 0}).phase.kind == PhaseKind::kDone);
  CHECK(advance_phase({PhaseKind::kScan}, {EventKind::kScanComplete, 0}).phase.kind == PhaseKind::kDone);

  const Transition grasp = advance_phase({PhaseKind::kReach, 0}, {EventKind::kReachSucceeded});
  CHECK(grasp.phase.kind == PhaseKind::kGrasp);
  CHECK(grasp.gripper == GripperCommand::kClose);
  CHECK(advance_phase({PhaseKind::kReach, 0}, {EventKind::kReachFailed}).phase.kind == PhaseKind::kRescan);
  CHECK(advance_phase({PhaseKind::kRelease}, {EventKind::kReleased, 0}).phase.kind == PhaseKind::kRescan);
  CHECK(advance_phase({PhaseKind::kRescan}, {EventKind::kReturnedHome}).phase.kind == PhaseKind::kScan);

  try {
    advance_phase({PhaseKind::kPull}, {EventKind::kReachSucceeded});
    FAIL("expected a protocol error");
  } catch (const ProtocolError& e) {
    const std::string what = e.what();
    CHECK(what.find("Pull") != std::string::npos);
    CHECK(what.find("reach_succeeded") != std::string::npos);
  }
  CHECK_THROWS_AS(advance_phase({PhaseKind::kDone}, {EventKind::kStartScan}), ProtocolError);
  CHECK_THROWS_AS(advance_phase({PhaseKind::kScan}, {EventKind::kScanComplete, 2, -1}), ProtocolError);
}

TEST_CASE("three-target episode through the machine") {
  // three berries; after each release the remaining ones are re-sorted
  std::vector<Eigen::Vector3d> left{{0.9, 0, 0}, {0.4, 0, 0}, {0.7, 0, 0}};
  Eigen::Vector3d ee(0, 0, 0);
  HarvestPhase ph = advance_phase({}, {EventKind::kStartScan}).phase;
  HarvestPlan plan = plan_harvest(left, ee);
  ph = advance_phase(ph, {EventKind::kScanComplete, 3, plan.order[0]}).phase;
  std::vector<int> reached;
  std::vector<GripperCommand> gripper;
  while (ph.kind == PhaseKind::kReach) {
    reached.push_back(static_cast<int>(std::lround(left[ph.target].x() * 10)));
    left.erase(left.begin() + ph.target);
    for (const EventKind e : {EventKind::kReachSucceeded, EventKind::kGraspClosed, EventKind::kPullDone,
                              EventKind::kTransferDone}) {
      const Transition tr = advance_phase(ph, {e});
      if (tr.gripper != GripperCommand::kNone) gripper.push_back(tr.gripper);
      ph = tr.phase;
    }
    plan = plan_harvest(left, ee);
    ph = advance_phase(ph, {EventKind::kReleased, static_cast<int>(left.size()),
                            left.empty() ? -1 : plan.order[0]}).phase;
  }
  CHECK(reached == std::vector<int>{4, 7, 9});
  CHECK(ph.kind == PhaseKind::kRescan);
  CHECK(gripper.size() == 6);
  CHECK(gripper.back() == GripperCommand::kOpen);
}

TEST_CASE("random event fuzz never skips a stage") {
  std::mt19937_64 rng(99);
  for (int run = 0; run < 2000; ++run) REQUIRE(oracle::phase_fuzz(rng, 50) == 0);
}

TEST_CASE("streamer config validation") {
  StreamerConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.convergence_radius = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = StreamerConfig{};
  cfg.vel_max[2] = -1.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}
