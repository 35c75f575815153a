#include "reachlab/perception.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>

#include <json.hpp>

#include "reachlab/errors.hpp"
#include "reachlab/kinematics.hpp"

namespace reachlab {

void CameraIntrinsics::validate() const {
  if (!(fx > 0.0) || !std::isfinite(fx)) throw ConfigError("perception.intrinsics.fx", "must be > 0");
  if (!(fy > 0.0) || !std::isfinite(fy)) throw ConfigError("perception.intrinsics.fy", "must be > 0");
  if (!std::isfinite(cx) || !std::isfinite(cy))
    throw ConfigError("perception.intrinsics.cx", "principal point must be finite");
  if (width < 1 || height < 1) throw ConfigError("perception.intrinsics.width", "image size must be positive");
}

ExtrinsicCalibration::ExtrinsicCalibration(const Eigen::Matrix4d& t) : t_(t) {
  if (!is_rigid(t)) throw ConfigError("perception.extrinsics", "not a rigid transform");
}

Eigen::Vector3d ExtrinsicCalibration::apply(const Eigen::Vector3d& p_cam) const {
  return (t_ * p_cam.homogeneous()).head<3>();
}

void PerceptionConfig::validate() const {
  intrinsics.validate();
  if (!is_rigid(extrinsics.matrix())) throw ConfigError("perception.extrinsics", "not a rigid transform");
  if (!(tau_p > 0.0)) throw ConfigError("perception.tau_p", "must be > 0");
  if (buffer_size < 1) throw ConfigError("perception.buffer_size", "must be >= 1");
  if (!(min_quality >= 0.0 && min_quality <= 1.0))
    throw ConfigError("perception.min_quality", "must be in [0, 1]");
  if (!(min_depth >= 0.0 && min_depth < max_depth))
    throw ConfigError("perception.min_depth", "depth range must satisfy 0 <= min < max");
  if (max_misses < 1) throw ConfigError("perception.max_misses", "must be >= 1");
}

std::optional<Eigen::Vector3d> backproject(const CameraIntrinsics& intr, double u, double v,
                                           double depth) {
  if (!std::isfinite(depth) || !(depth > 0.0) || !std::isfinite(u) || !std::isfinite(v))
    return std::nullopt;
  return Eigen::Vector3d((u - intr.cx) * depth / intr.fx, (v - intr.cy) * depth / intr.fy, depth);
}

Eigen::Vector2d project(const CameraIntrinsics& intr, const Eigen::Vector3d& p) {
  return {intr.fx * p.x() / p.z() + intr.cx, intr.fy * p.y() / p.z() + intr.cy};
}

std::string to_string(GateResult g) {
  switch (g) {
    case GateResult::kAccept: return "accept";
    case GateResult::kLowQuality: return "low_quality";
    case GateResult::kInvalidDepth: return "invalid_depth";
    case GateResult::kOutOfImage: return "out_of_image";
  }
  return "unknown";
}

GateResult gate_detection(const DetectionRecord& det, double min_quality, double min_depth,
                          double max_depth) {
  if (!std::isfinite(det.u) || !std::isfinite(det.v)) return GateResult::kOutOfImage;
  if (!std::isfinite(det.quality) || det.quality <= min_quality) return GateResult::kLowQuality;
  if (!std::isfinite(det.depth) || det.depth <= 0.0 || det.depth < min_depth || det.depth > max_depth)
    return GateResult::kInvalidDepth;
  return GateResult::kAccept;
}

Association associate(const std::vector<Track>& tracks, const Eigen::Vector2d& center, double tau_p) {
  Association a;
  a.distance = std::numeric_limits<double>::infinity();
  const Track* best = nullptr;
  for (const auto& t : tracks) {
    const double d = (center - t.last_center).norm();
    if (best == nullptr || d < a.distance || (d == a.distance && t.id < best->id)) {
      best = &t;
      a.distance = d;
    }
  }
  if (best != nullptr && a.distance < tau_p) a.track_id = best->id;
  return a;
}

std::optional<Eigen::Vector3d> push_and_smooth(Track& track, const Eigen::Vector3d& p,
                                               int buffer_size) {
  track.buffer.push_back(p);
  while (static_cast<int>(track.buffer.size()) > buffer_size) track.buffer.pop_front();
  if (static_cast<int>(track.buffer.size()) < buffer_size) return std::nullopt;
  Eigen::Vector3d sum = Eigen::Vector3d::Zero();
  for (const auto& q : track.buffer) sum += q;
  return sum / static_cast<double>(buffer_size);
}

TargetTracker::TargetTracker(PerceptionConfig config) : config_(std::move(config)) {
  config_.validate();
}

TargetTracker::FrameReport TargetTracker::process_frame(const std::vector<DetectionRecord>& frame) {
  FrameReport report;
  if (frame.empty()) return report;
  const std::int64_t id = frame.front().frame_id;
  for (const auto& d : frame) {
    if (d.frame_id != id) throw StreamError("process_frame: mixed frame ids in one frame");
    if (!(d.stamp >= last_stamp_))
      throw StreamError("detection stamps go backwards at frame " + std::to_string(id));
    last_stamp_ = d.stamp;
  }
  if (last_frame_ && id <= *last_frame_)
    throw StreamError("frame " + std::to_string(id) + " arrives after frame " +
                      std::to_string(*last_frame_));

  // frames skipped entirely count as misses for every track
  if (last_frame_) {
    const auto gap = static_cast<int>(std::min<std::int64_t>(id - *last_frame_ - 1, config_.max_misses));
    for (auto& t : tracks_) t.misses += gap;
    std::erase_if(tracks_, [&](const Track& t) { return t.misses >= config_.max_misses; });
  }
  last_frame_ = id;

  // candidates are the tracks alive at the previous frame, one detection each
  std::vector<Track> candidates = tracks_;
  std::vector<int> matched;
  for (const auto& det : frame) {
    const auto& intr = config_.intrinsics;
    const bool in_image = det.u >= 0.0 && det.u < intr.width && det.v >= 0.0 && det.v < intr.height;
    const GateResult gate = in_image ? gate_detection(det, config_.min_quality, config_.min_depth,
                                                      config_.max_depth)
                                     : GateResult::kOutOfImage;
    const auto p_cam = backproject(config_.intrinsics, det.u, det.v, det.depth);
    if (gate != GateResult::kAccept || !p_cam) {
      report.rejected.emplace_back(det, gate == GateResult::kAccept ? GateResult::kInvalidDepth : gate);
      continue;
    }
    const Eigen::Vector2d center(det.u, det.v);
    const Association assoc = associate(candidates, center, config_.tau_p);
    Track* track = nullptr;
    if (assoc.track_id) {
      const int tid = *assoc.track_id;
      std::erase_if(candidates, [tid](const Track& t) { return t.id == tid; });
      matched.push_back(tid);
      track = &*std::find_if(tracks_.begin(), tracks_.end(), [tid](const Track& t) { return t.id == tid; });
    } else {
      Track fresh;
      fresh.id = next_id_++;
      tracks_.push_back(std::move(fresh));
      matched.push_back(tracks_.back().id);
      track = &tracks_.back();
    }
    track->last_center = center;
    track->misses = 0;
    ++track->hits;
    if (const auto mean = push_and_smooth(*track, *p_cam, config_.buffer_size)) {
      TargetPoint tp;
      tp.position = config_.extrinsics.apply(*mean);
      tp.track_id = track->id;
      tp.stamp = det.stamp;
      tp.frame_id = id;
      report.targets.push_back(tp);
    }
  }
  for (auto& t : tracks_)
    if (std::find(matched.begin(), matched.end(), t.id) == matched.end()) ++t.misses;
  std::erase_if(tracks_, [&](const Track& t) { return t.misses >= config_.max_misses; });
  return report;
}

StreamResult process_stream(const std::vector<DetectionRecord>& detections,
                            const PerceptionConfig& config) {
  TargetTracker tracker(config);
  StreamResult out;
  std::vector<DetectionRecord> frame;
  auto flush = [&] {
    auto report = tracker.process_frame(frame);
    out.rejected += static_cast<int>(report.rejected.size());
    out.targets.insert(out.targets.end(), report.targets.begin(), report.targets.end());
    frame.clear();
  };
  for (const auto& d : detections) {
    if (!frame.empty() && d.frame_id != frame.front().frame_id) flush();
    frame.push_back(d);
  }
  if (!frame.empty()) flush();
  out.tracks_created = tracker.tracks_created();
  return out;
}

std::vector<DetectionRecord> read_detection_stream(std::istream& in) {
  std::vector<DetectionRecord> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      DetectionRecord d;
      d.frame_id = j.at("frame").get<std::int64_t>();
      d.stamp = j.at("stamp").get<double>();
      d.u = j.at("u").get<double>();
      d.v = j.at("v").get<double>();
      // null depth encodes an invalid depth reading
      d.depth = j.at("depth").is_null() ? std::numeric_limits<double>::quiet_NaN()
                                        : j.at("depth").get<double>();
      d.quality = j.value("quality", 1.0);
      out.push_back(d);
    } catch (const nlohmann::json::exception& e) {
      throw DataError("detection stream line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

void write_detection(std::ostream& out, const DetectionRecord& d) {
  nlohmann::json j;
  j["frame"] = d.frame_id;
  j["stamp"] = d.stamp;
  j["u"] = d.u;
  j["v"] = d.v;
  j["depth"] = std::isfinite(d.depth) ? nlohmann::json(d.depth) : nlohmann::json(nullptr);
  j["quality"] = d.quality;
  out << j.dump() << '\n';
}

void write_target(std::ostream& out, const TargetPoint& t) {
  nlohmann::json j;
  j["stamp"] = t.stamp;
  j["track"] = t.track_id;
  j["x"] = t.position.x();
  j["y"] = t.position.y();
  j["z"] = t.position.z();
  out << j.dump() << '\n';
}

std::vector<DetectionRecord> synthesize_stream(const SyntheticScene& scene,
                                               const CameraIntrinsics& intr) {
  std::mt19937_64 rng(scene.seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> quality(scene.quality_min, scene.quality_max);
  std::poisson_distribution<int> spurious(std::max(scene.spurious_rate, 1e-12));
  std::vector<DetectionRecord> out;
  for (int f = 1; f <= scene.frames; ++f) {
    const double stamp = (f - 1) / scene.frame_rate;
    for (const auto& b : scene.berries) {
      if (scene.dropout > 0.0 && unit(rng) < scene.dropout) continue;
      const Eigen::Vector2d px = project(intr, b);
      DetectionRecord d;
      d.frame_id = f;
      d.stamp = stamp;
      d.u = px.x() + scene.pixel_noise * noise(rng);
      d.v = px.y() + scene.pixel_noise * noise(rng);
      d.depth = b.z() + scene.depth_noise * noise(rng);
      d.quality = quality(rng);
      out.push_back(d);
    }
    if (scene.spurious_rate > 0.0) {
      const int count = spurious(rng);
      for (int k = 0; k < count; ++k) {
        DetectionRecord d;
        d.frame_id = f;
        d.stamp = stamp;
        d.u = unit(rng) * intr.width;
        d.v = unit(rng) * intr.height;
        d.depth = 0.2 + 1.5 * unit(rng);
        d.quality = unit(rng);
        out.push_back(d);
      }
    }
  }
  return out;
}

}  // namespace reachlab
