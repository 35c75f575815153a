#include "reachlab/harvest_sim.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>

#include <json.hpp>

#include "reachlab/errors.hpp"

namespace reachlab {

namespace {

struct MotionOutcome {
  double final_distance = 0.0;
  bool ended = false;  // settled or halted inside the step budget
  bool halted = false;
};

class HarvestRun {
 public:
  HarvestRun(const ActorParams& actor, const HarvestSetup& setup, HarvestReport& report)
      : actor_(actor), setup_(setup), report_(report), q_(setup.model.q_default) {
    home_ = forward_kinematics(setup.model, setup.model.q_default).position;
  }

  void run(const std::vector<DetectionRecord>& detections) {
    try {
      apply({EventKind::kStartScan});
      scan(detections);
      announce_scan();
      bool from_home = true;
      while (phase_.kind != PhaseKind::kDone) {
        switch (phase_.kind) {
          case PhaseKind::kReach:
            harvest_one(from_home);
            from_home = false;
            break;
          case PhaseKind::kRescan:
            move(home_, segment::kReturnHome);
            apply({EventKind::kReturnedHome});
            announce_scan();
            from_home = true;
            break;
          default:
            throw ProtocolError("simulation stalled in phase " + to_string(phase_));
        }
      }
    } catch (const std::exception& e) {
      AuditEntry a = entry("error");
      a.detail = e.what();
      report_.audit.push_back(a);
      report_.aborted = true;
    }
    report_.sim_time = t_;
  }

 private:
  AuditEntry entry(const std::string& kind) const {
    AuditEntry a;
    a.t = t_;
    a.kind = kind;
    a.phase = to_string(phase_);
    return a;
  }

  void apply(const HarvestEvent& ev) {
    const Transition tr = advance_phase(phase_, ev);
    AuditEntry a = entry("transition");
    a.event = to_string(ev.kind);
    a.next_phase = to_string(tr.phase);
    a.gripper = to_string(tr.gripper);
    a.target = ev.target;
    report_.audit.push_back(a);
    phase_ = tr.phase;
  }

  Eigen::Vector3d ee() const { return forward_kinematics(setup_.model, q_).position; }

  void scan(const std::vector<DetectionRecord>& detections) {
    const StreamResult sr = process_stream(detections, setup_.perception);
    report_.targets = sr.targets;
    report_.tracks = sr.tracks_created;
    report_.rejected_detections = sr.rejected;
    // the latest smoothed estimate of each track, in track order
    std::map<int, TargetPoint> latest;
    for (const auto& tp : sr.targets) latest[tp.track_id] = tp;
    for (const auto& [id, tp] : latest) {
      if (!setup_.env.workspace.contains(tp.position)) {
        AuditEntry a = entry("target_skipped");
        a.target = id;
        a.detail = "outside_workspace";
        report_.audit.push_back(a);
        continue;
      }
      remaining_.push_back(tp);
      report_.plan_targets.push_back(tp);
    }
  }

  // Index into remaining_ of the target nearest to the end effector, or -1.
  int nearest() const {
    if (remaining_.empty()) return -1;
    std::vector<Eigen::Vector3d> pts;
    for (const auto& tp : remaining_) pts.push_back(tp.position);
    return plan_harvest(pts, ee()).order.front();
  }

  void announce_scan() {
    const int next = nearest();
    HarvestEvent ev{EventKind::kScanComplete, static_cast<int>(remaining_.size()), -1};
    if (next >= 0) ev.target = remaining_[next].track_id;
    apply(ev);
  }

  void harvest_one(bool from_home) {
    const int idx = nearest();
    const TargetPoint target = remaining_[idx];
    remaining_.erase(remaining_.begin() + idx);

    SuccessRecord rec;
    rec.attempt = static_cast<int>(report_.attempts.size()) + 1;
    const MotionOutcome reach =
        move(target.position, from_home ? segment::kHomeToBerry : segment::kBasketToBerry);
    rec.final_distance = reach.final_distance;
    rec.reached_in_time = reach.ended;
    if (!(reach.final_distance <= setup_.streamer.reach_tolerance && reach.ended)) {
      report_.attempts.push_back(rec);
      apply({EventKind::kReachFailed, 0, target.track_id});
      return;
    }
    rec.grasped = true;
    apply({EventKind::kReachSucceeded, 0, target.track_id});
    apply({EventKind::kGraspClosed, 0, target.track_id});

    const double z_before = ee().z();
    move(target.position - Eigen::Vector3d(0.0, 0.0, setup_.streamer.pull_offset), segment::kPull);
    rec.detached = z_before - ee().z() >= 0.5 * setup_.streamer.pull_offset;
    apply({EventKind::kPullDone, 0, target.track_id});

    const MotionOutcome transfer = move(setup_.streamer.basket_position, segment::kBerryToBasket);
    rec.deposited = rec.detached && transfer.final_distance <= setup_.streamer.deposit_tolerance;
    apply({EventKind::kTransferDone, 0, target.track_id});
    report_.attempts.push_back(rec);

    const int next = nearest();
    HarvestEvent ev{EventKind::kReleased, static_cast<int>(remaining_.size()), -1};
    if (next >= 0) ev.target = remaining_[next].track_id;
    apply(ev);
  }

  // Drives the policy toward `goal` until it settles, halts or runs out of
  // steps; every accepted command is executed as a linear joint move.
  MotionOutcome move(const Eigen::Vector3d& goal, const std::string& label) {
    const ArmModel& model = setup_.model;
    const StreamerConfig& sc = setup_.streamer;
    EnvState s;
    s.command.position = goal;
    s.command.orientation = setup_.env.nominal_orientation;
    a_prev_.setZero();
    qdot_.setZero();
    HaltMonitor monitor;
    TrajectoryLog log{label, {{t_, ee()}}};
    MotionOutcome out;
    for (int k = 0; k < setup_.env.horizon; ++k) {
      s.q = q_;
      s.qdot = qdot_;
      s.a_prev = a_prev_;
      s.step = k;
      const Observation obs = build_observation(s, model);
      const Action a = clamp_action(policy_forward(actor_, obs).mean.col(0));
      JointVector q_target = model.q_default + setup_.env.action_scale * a;
      q_target = q_target.cwiseMax(model.limits.pos_min).cwiseMin(model.limits.pos_max);
      const JointVector dq = q_target - q_;
      if (dq.cwiseAbs().maxCoeff() < sc.settle_tolerance) {
        out.ended = true;
        break;
      }
      const double dist = (ee() - goal).norm();
      const StreamDecision d = stream_step(dq, dist, sc, monitor);
      if (d.kind == StreamDecision::Kind::kHalt) {
        AuditEntry h = entry("halt");
        h.detail = label;
        report_.audit.push_back(h);
        ++report_.halts;
        out.ended = out.halted = true;
        break;
      }
      if (d.kind == StreamDecision::Kind::kSkip) {
        out.ended = true;
        break;
      }
      execute(d.command, log);
      report_.commands.push_back(
          {static_cast<int>(report_.commands.size()), to_string(phase_.kind), d.command});
      qdot_ = dq / d.command.duration;
      a_prev_ = a;
    }
    qdot_.setZero();
    out.final_distance = (ee() - goal).norm();
    // segments too short to differentiate are left out of the log
    if (log.samples.size() >= 4) report_.trajectory.push_back(std::move(log));
    return out;
  }

  void execute(const StreamCommand& cmd, TrajectoryLog& log) {
    const JointVector q0 = q_;
    const int n = std::max(1, static_cast<int>(std::ceil(cmd.duration * setup_.streamer.log_rate)));
    for (int j = 1; j <= n; ++j) {
      const double w = static_cast<double>(j) / n;
      const JointVector q = q0 + w * cmd.delta_q;
      log.samples.push_back({t_ + w * cmd.duration, forward_kinematics(setup_.model, q).position});
    }
    q_ = q0 + cmd.delta_q;
    t_ += cmd.duration;
  }

  const ActorParams& actor_;
  const HarvestSetup& setup_;
  HarvestReport& report_;
  HarvestPhase phase_;
  JointVector q_;
  JointVector qdot_ = JointVector::Zero();
  Action a_prev_ = Action::Zero();
  Eigen::Vector3d home_;
  double t_ = 0.0;
  std::vector<TargetPoint> remaining_;
};

nlohmann::json vec_json(const JointVector& v) {
  return nlohmann::json(std::vector<double>(v.data(), v.data() + v.size()));
}

}  // namespace

HarvestReport simulate_harvest(const ActorParams& actor, const std::vector<DetectionRecord>& detections,
                               const HarvestSetup& setup) {
  setup.model.validate();
  setup.env.validate(setup.model);
  setup.perception.validate();
  setup.streamer.validate();
  HarvestReport report;
  HarvestRun(actor, setup, report).run(detections);
  return report;
}

void write_audit_entry(std::ostream& out, const AuditEntry& e) {
  nlohmann::json j;
  j["t"] = e.t;
  j["kind"] = e.kind;
  j["phase"] = e.phase;
  if (!e.event.empty()) j["event"] = e.event;
  if (!e.next_phase.empty()) j["next_phase"] = e.next_phase;
  if (!e.gripper.empty()) j["gripper"] = e.gripper;
  if (e.target >= 0) j["target"] = e.target;
  if (!e.detail.empty()) j["detail"] = e.detail;
  out << j.dump() << '\n';
}

void write_command_record(std::ostream& out, const CommandRecord& c) {
  nlohmann::json j;
  j["seq"] = c.seq;
  j["phase"] = c.phase;
  j["delta_q"] = vec_json(c.command.delta_q);
  j["duration"] = c.command.duration;
  out << j.dump() << '\n';
}

}  // namespace reachlab
