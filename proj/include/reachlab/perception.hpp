#ifndef REACHLAB_PERCEPTION_HPP_
#define REACHLAB_PERCEPTION_HPP_

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cstdint>
#include <deque>
#include <iosfwd>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace reachlab {

struct CameraIntrinsics {
  double fx = 615.0;
  double fy = 615.0;
  double cx = 320.0;
  double cy = 240.0;
  int width = 640;
  int height = 480;

  void validate() const;
};

// Rigid camera-to-robot transform.
class ExtrinsicCalibration {
 public:
  ExtrinsicCalibration() = default;
  // Throws ConfigError unless the matrix is a proper rigid transform.
  explicit ExtrinsicCalibration(const Eigen::Matrix4d& t);

  const Eigen::Matrix4d& matrix() const { return t_; }
  Eigen::Vector3d apply(const Eigen::Vector3d& p_cam) const;

 private:
  Eigen::Matrix4d t_ = Eigen::Matrix4d::Identity();
};

struct DetectionRecord {
  std::int64_t frame_id = 0;
  double stamp = 0.0;
  double u = 0.0;
  double v = 0.0;
  double depth = 0.0;    // m
  double quality = 1.0;  // mask confidence in [0, 1]
};

struct TargetPoint {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();  // robot frame
  int track_id = 0;
  double stamp = 0.0;
  std::int64_t frame_id = 0;
};

struct PerceptionConfig {
  CameraIntrinsics intrinsics;
  ExtrinsicCalibration extrinsics;
  double tau_p = 40.0;  // px
  int buffer_size = 15;
  double min_quality = 0.75;
  double min_depth = 0.1;
  double max_depth = 2.0;
  int max_misses = 10;

  void validate() const;
};

std::optional<Eigen::Vector3d> backproject(const CameraIntrinsics& intr, double u, double v,
                                           double depth);

// Inverse of backproject for a point in front of the camera.
Eigen::Vector2d project(const CameraIntrinsics& intr, const Eigen::Vector3d& p_cam);

enum class GateResult { kAccept, kLowQuality, kInvalidDepth, kOutOfImage };

std::string to_string(GateResult g);

GateResult gate_detection(const DetectionRecord& det, double min_quality, double min_depth,
                          double max_depth);

struct Track {
  int id = 0;
  Eigen::Vector2d last_center = Eigen::Vector2d::Zero();
  std::deque<Eigen::Vector3d> buffer;  // camera frame
  int misses = 0;
  int hits = 0;
};

struct Association {
  std::optional<int> track_id;  // empty: start a new track
  double distance = 0.0;        // px, to the nearest track (infinity when none)
};

// Nearest active track in the image plane, accepted when strictly closer than
// tau_p. Ties go to the lower track id.
Association associate(const std::vector<Track>& tracks, const Eigen::Vector2d& center, double tau_p);

// Appends p; returns the buffer mean once the buffer holds `buffer_size`
// points. The oldest point is evicted after that (sliding window).
std::optional<Eigen::Vector3d> push_and_smooth(Track& track, const Eigen::Vector3d& p,
                                               int buffer_size);

// Owns the track table for one detection stream.
class TargetTracker {
 public:
  explicit TargetTracker(PerceptionConfig config);

  struct FrameReport {
    std::vector<TargetPoint> targets;
    std::vector<std::pair<DetectionRecord, GateResult>> rejected;
  };

  // All detections must share one frame id; frames and stamps must not go
  // backwards across calls.
  FrameReport process_frame(const std::vector<DetectionRecord>& frame);

  const std::vector<Track>& tracks() const { return tracks_; }
  int tracks_created() const { return next_id_ - 1; }

 private:
  PerceptionConfig config_;
  std::vector<Track> tracks_;
  int next_id_ = 1;
  std::optional<std::int64_t> last_frame_;
  double last_stamp_ = -std::numeric_limits<double>::infinity();
};

struct StreamResult {
  std::vector<TargetPoint> targets;
  int tracks_created = 0;
  int rejected = 0;
};

// Groups consecutive records by frame id and runs them through a tracker.
StreamResult process_stream(const std::vector<DetectionRecord>& detections,
                            const PerceptionConfig& config);

// Line-delimited JSON {frame, stamp, u, v, depth, quality}.
std::vector<DetectionRecord> read_detection_stream(std::istream& in);
void write_detection(std::ostream& out, const DetectionRecord& det);
// Line-delimited JSON {stamp, track, x, y, z}.
void write_target(std::ostream& out, const TargetPoint& target);

// Synthetic scenes: static berries (camera frame) observed for a number of
// frames with pixel/depth noise, random dropout and spurious detections.
struct SyntheticScene {
  std::vector<Eigen::Vector3d> berries;
  int frames = 30;
  double frame_rate = 30.0;
  double pixel_noise = 0.5;   // px std
  double depth_noise = 0.002; // m std
  double dropout = 0.0;       // probability a berry is missed in a frame
  double spurious_rate = 0.0; // expected spurious detections per frame
  double quality_min = 0.85;
  double quality_max = 0.98;
  std::uint64_t seed = 7;
};

std::vector<DetectionRecord> synthesize_stream(const SyntheticScene& scene,
                                               const CameraIntrinsics& intr);

}  // namespace reachlab

#endif  // REACHLAB_PERCEPTION_HPP_
