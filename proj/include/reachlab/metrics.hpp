#ifndef REACHLAB_METRICS_HPP_
#define REACHLAB_METRICS_HPP_

#include <Eigen/Core>

#include <iosfwd>
#include <string>
#include <vector>

namespace reachlab {

struct TrajectorySample {
  double t = 0.0;
  Eigen::Vector3d p = Eigen::Vector3d::Zero();
};

struct TrajectoryLog {
  std::string label;
  std::vector<TrajectorySample> samples;
};

struct MetricsConfig {
  double resample_rate = 100.0;  // Hz
  int ma_window = 9;             // samples, odd
  double rdp_epsilon = 0.002;    // m
  double jerk_percentile = 99.0;
  double stillness_speed = 0.001;  // m/s; leading/trailing samples below are trimmed

  void validate() const;
};

// Uniformly sampled positions p[k] at t0 + k * dt.
struct UniformSeries {
  double t0 = 0.0;
  double dt = 0.0;
  std::vector<Eigen::Vector3d> p;

  double time(std::size_t k) const { return t0 + dt * static_cast<double>(k); }
  double duration() const { return p.empty() ? 0.0 : dt * static_cast<double>(p.size() - 1); }
};

// Linear interpolation onto a grid of spacing 1/resample_rate starting at the
// first stamp, then a centred moving average. Near the ends the window reaches
// past the data, which is continued by point reflection through the end
// sample, so affine motion passes through unchanged.
UniformSeries resample_and_smooth(const TrajectoryLog& log, const MetricsConfig& config);

// Drops leading and trailing samples whose speed is below `speed`. Returns the
// input unchanged if fewer than four samples would remain.
UniformSeries trim_still(const UniformSeries& series, double speed);

// Ramer-Douglas-Peucker. epsilon <= 0 returns the input unchanged.
std::vector<Eigen::Vector3d> rdp_simplify(const std::vector<Eigen::Vector3d>& points, double epsilon);

// Central differences in the interior, second-order one-sided at the ends.
std::vector<Eigen::Vector3d> differentiate(const std::vector<Eigen::Vector3d>& x, double dt);

// Second-order stencils for d^3/dt^3: central in the interior, one-sided for
// the two samples at each end. Four samples fall back to the plain third
// difference.
std::vector<Eigen::Vector3d> third_derivative(const std::vector<Eigen::Vector3d>& x, double dt);

// |d^3 p / dt^3| per sample.
std::vector<double> jerk_magnitude(const UniformSeries& series);

// q-th percentile with linear interpolation between order statistics.
double percentile(std::vector<double> values, double q);

struct SegmentMetrics {
  double duration = 0.0;
  double straight_distance = 0.0;
  double traj_length = 0.0;
  double mean_speed = 0.0;
  double rms_jerk = 0.0;
  double peak_jerk_robust = 0.0;
};

SegmentMetrics segment_metrics(const UniformSeries& smoothed,
                               const std::vector<Eigen::Vector3d>& simplified,
                               const MetricsConfig& config);

// resample_and_smooth -> trim_still -> rdp_simplify -> segment_metrics
SegmentMetrics analyze_segment(const TrajectoryLog& log, const MetricsConfig& config);

struct SuccessRecord {
  int attempt = 0;
  double final_distance = 0.0;
  bool reached_in_time = false;
  bool grasped = false;
  bool detached = false;
  bool deposited = false;

  // deposited => detached => grasped
  bool stages_monotone() const {
    return (!deposited || detached) && (!detached || grasped);
  }
};

double reach_success_rate(const std::vector<SuccessRecord>& records, double eps_r);
double harvest_success_rate(const std::vector<SuccessRecord>& records);

std::vector<SuccessRecord> read_success_records(std::istream& in);
void write_success_record(std::ostream& out, const SuccessRecord& r);

// CSV with header t,x,y,z,segment_label. A new segment starts when the label
// changes or time stops increasing.
std::vector<TrajectoryLog> read_trajectory_csv(std::istream& in);
void write_trajectory_csv_header(std::ostream& out);
void write_trajectory_rows(std::ostream& out, const TrajectoryLog& log);

struct SummaryStat {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation, 0 for a single segment
};

struct MetricsSummaryRow {
  std::string label;
  int count = 0;
  SummaryStat duration, straight_distance, traj_length, mean_speed, rms_jerk, peak_jerk_robust;
};

// One row per label, in order of first appearance.
std::vector<MetricsSummaryRow> summarize(const std::vector<TrajectoryLog>& logs,
                                         const MetricsConfig& config);
void write_metrics_csv(std::ostream& out, const std::vector<MetricsSummaryRow>& rows);

}  // namespace reachlab

#endif  // REACHLAB_METRICS_HPP_
