#include "reachlab/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "reachlab/errors.hpp"

namespace reachlab {

void MetricsConfig::validate() const {
  if (!(resample_rate > 0.0)) throw ConfigError("metrics.resample_rate", "must be > 0");
  if (ma_window < 1 || ma_window % 2 == 0) throw ConfigError("metrics.ma_window", "must be a positive odd count");
  if (!(rdp_epsilon >= 0.0)) throw ConfigError("metrics.rdp_epsilon", "must be >= 0");
  if (!(jerk_percentile > 0.0 && jerk_percentile < 100.0))
    throw ConfigError("metrics.jerk_percentile", "must be in (0, 100)");
  if (!(stillness_speed >= 0.0)) throw ConfigError("metrics.stillness_speed", "must be >= 0");
}

UniformSeries resample_and_smooth(const TrajectoryLog& log, const MetricsConfig& config) {
  const auto& s = log.samples;
  if (s.size() < 2) throw DataError("segment '" + log.label + "': at least 2 samples required");
  for (std::size_t i = 1; i < s.size(); ++i)
    if (!(s[i].t > s[i - 1].t))
      throw DataError("segment '" + log.label + "': timestamps must be strictly increasing (sample " +
                      std::to_string(i) + ")");

  UniformSeries raw;
  raw.t0 = s.front().t;
  raw.dt = 1.0 / config.resample_rate;
  const double span = s.back().t - s.front().t;
  const auto count = static_cast<std::size_t>(std::floor(span * config.resample_rate + 1e-9)) + 1;
  raw.p.reserve(count);
  std::size_t j = 0;
  for (std::size_t k = 0; k < count; ++k) {
    const double t = raw.time(k);
    while (j + 2 < s.size() && s[j + 1].t < t) ++j;
    const double w = std::clamp((t - s[j].t) / (s[j + 1].t - s[j].t), 0.0, 1.0);
    raw.p.push_back((1.0 - w) * s[j].p + w * s[j + 1].p);
  }

  // Past the ends the series is continued by point reflection through the
  // end samples, which leaves affine motion and rest-to-rest profiles intact.
  const int n = static_cast<int>(raw.p.size());
  auto at = [&](int m) -> Eigen::Vector3d {
    if (m < 0) return 2.0 * raw.p[0] - raw.p[std::min(-m, n - 1)];
    if (m >= n) return 2.0 * raw.p[n - 1] - raw.p[std::max(2 * (n - 1) - m, 0)];
    return raw.p[m];
  };
  UniformSeries out = raw;
  const int half = config.ma_window / 2;
  for (int k = 0; k < n; ++k) {
    Eigen::Vector3d sum = Eigen::Vector3d::Zero();
    for (int i = k - half; i <= k + half; ++i) sum += at(i);
    out.p[k] = sum / static_cast<double>(2 * half + 1);
  }
  return out;
}

UniformSeries trim_still(const UniformSeries& series, double speed) {
  if (series.p.size() < 4 || speed <= 0.0) return series;
  const auto v = differentiate(series.p, series.dt);
  std::size_t first = 0, last = v.size() - 1;
  while (first < v.size() && v[first].norm() < speed) ++first;
  while (last > first && v[last].norm() < speed) --last;
  if (first >= v.size() || last - first + 1 < 4) return series;
  UniformSeries out;
  out.dt = series.dt;
  out.t0 = series.time(first);
  out.p.assign(series.p.begin() + static_cast<std::ptrdiff_t>(first),
               series.p.begin() + static_cast<std::ptrdiff_t>(last) + 1);
  return out;
}

namespace {

double point_segment_distance(const Eigen::Vector3d& p, const Eigen::Vector3d& a,
                              const Eigen::Vector3d& b) {
  const Eigen::Vector3d ab = b - a;
  const double len2 = ab.squaredNorm();
  if (len2 == 0.0) return (p - a).norm();
  const double s = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
  return (p - (a + s * ab)).norm();
}

}  // namespace

std::vector<Eigen::Vector3d> rdp_simplify(const std::vector<Eigen::Vector3d>& points, double epsilon) {
  if (points.size() < 2) throw DataError("rdp_simplify: at least 2 points required");
  if (epsilon <= 0.0) return points;
  std::vector<bool> keep(points.size(), false);
  keep[0] = true;
  keep[points.size() - 1] = true;
  std::vector<std::pair<std::size_t, std::size_t>> stack{{0, points.size() - 1}};
  while (!stack.empty()) {
    const auto [lo, hi] = stack.back();
    stack.pop_back();
    double dmax = 0.0;
    std::size_t imax = lo;
    for (std::size_t i = lo + 1; i < hi; ++i) {
      const double d = point_segment_distance(points[i], points[lo], points[hi]);
      if (d > dmax) {
        dmax = d;
        imax = i;
      }
    }
    if (dmax > epsilon) {
      keep[imax] = true;
      stack.emplace_back(lo, imax);
      stack.emplace_back(imax, hi);
    }
  }
  std::vector<Eigen::Vector3d> out;
  for (std::size_t i = 0; i < points.size(); ++i)
    if (keep[i]) out.push_back(points[i]);
  return out;
}

std::vector<Eigen::Vector3d> differentiate(const std::vector<Eigen::Vector3d>& x, double dt) {
  const std::size_t n = x.size();
  if (n < 2) throw DataError("differentiate: at least 2 samples required");
  std::vector<Eigen::Vector3d> d(n);
  if (n == 2) {
    d[0] = d[1] = (x[1] - x[0]) / dt;
    return d;
  }
  for (std::size_t k = 1; k + 1 < n; ++k) d[k] = (x[k + 1] - x[k - 1]) / (2.0 * dt);
  d[0] = (-3.0 * x[0] + 4.0 * x[1] - x[2]) / (2.0 * dt);
  d[n - 1] = (3.0 * x[n - 1] - 4.0 * x[n - 2] + x[n - 3]) / (2.0 * dt);
  return d;
}

std::vector<Eigen::Vector3d> third_derivative(const std::vector<Eigen::Vector3d>& x, double dt) {
  const std::size_t n = x.size();
  if (n < 4) throw DataError("third_derivative: at least 4 samples required");
  const double h3 = dt * dt * dt;
  std::vector<Eigen::Vector3d> d(n);
  if (n == 4) {
    const Eigen::Vector3d j = (x[3] - 3.0 * x[2] + 3.0 * x[1] - x[0]) / h3;
    std::fill(d.begin(), d.end(), j);
    return d;
  }
  for (std::size_t k = 0; k < n; ++k) {
    if (k >= 2 && k + 2 < n) {
      d[k] = (x[k + 2] - 2.0 * x[k + 1] + 2.0 * x[k - 1] - x[k - 2]) / (2.0 * h3);
    } else if (k < 2) {
      const std::size_t b = std::min(k, n - 5);
      d[k] = (-2.5 * x[b] + 9.0 * x[b + 1] - 12.0 * x[b + 2] + 7.0 * x[b + 3] - 1.5 * x[b + 4]) / h3;
    } else {
      const std::size_t b = std::max(k, std::size_t{4});
      d[k] = (2.5 * x[b] - 9.0 * x[b - 1] + 12.0 * x[b - 2] - 7.0 * x[b - 3] + 1.5 * x[b - 4]) / h3;
    }
  }
  return d;
}

std::vector<double> jerk_magnitude(const UniformSeries& series) {
  const auto jerk = third_derivative(series.p, series.dt);
  std::vector<double> out(jerk.size());
  std::transform(jerk.begin(), jerk.end(), out.begin(), [](const Eigen::Vector3d& j) { return j.norm(); });
  return out;
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw DataError("percentile of an empty sequence");
  std::sort(values.begin(), values.end());
  const double pos = std::clamp(q, 0.0, 100.0) / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double w = pos - static_cast<double>(lo);
  return values[lo] + w * (values[hi] - values[lo]);
}

SegmentMetrics segment_metrics(const UniformSeries& smoothed,
                               const std::vector<Eigen::Vector3d>& simplified,
                               const MetricsConfig& config) {
  if (smoothed.p.size() < 4) throw DataError("segment_metrics: at least 4 samples required");
  if (simplified.size() < 2) throw DataError("segment_metrics: simplified path needs 2 points");
  SegmentMetrics m;
  m.duration = smoothed.duration();
  m.straight_distance = (smoothed.p.back() - smoothed.p.front()).norm();
  for (std::size_t i = 1; i < simplified.size(); ++i) m.traj_length += (simplified[i] - simplified[i - 1]).norm();
  m.mean_speed = m.traj_length / m.duration;
  const auto j = jerk_magnitude(smoothed);
  double sq = 0.0;
  for (double x : j) sq += x * x;
  m.rms_jerk = std::sqrt(sq / static_cast<double>(j.size()));
  m.peak_jerk_robust = percentile(j, config.jerk_percentile);
  return m;
}

SegmentMetrics analyze_segment(const TrajectoryLog& log, const MetricsConfig& config) {
  const UniformSeries smoothed = trim_still(resample_and_smooth(log, config), config.stillness_speed);
  if (smoothed.p.size() < 4)
    throw DataError("segment '" + log.label + "': fewer than 4 resampled samples");
  return segment_metrics(smoothed, rdp_simplify(smoothed.p, config.rdp_epsilon), config);
}

double reach_success_rate(const std::vector<SuccessRecord>& records, double eps_r) {
  if (records.empty()) throw DataError("reach success rate of an empty record set is undefined");
  const auto ok = std::count_if(records.begin(), records.end(), [&](const SuccessRecord& r) {
    return r.final_distance <= eps_r && r.reached_in_time;
  });
  return 100.0 * static_cast<double>(ok) / static_cast<double>(records.size());
}

double harvest_success_rate(const std::vector<SuccessRecord>& records) {
  if (records.empty()) throw DataError("harvest success rate of an empty record set is undefined");
  const auto ok = std::count_if(records.begin(), records.end(), [](const SuccessRecord& r) {
    return r.grasped && r.detached && r.deposited;
  });
  return 100.0 * static_cast<double>(ok) / static_cast<double>(records.size());
}

std::vector<SuccessRecord> read_success_records(std::istream& in) {
  std::vector<SuccessRecord> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    SuccessRecord r;
    try {
      const auto j = nlohmann::json::parse(line);
      r.attempt = j.at("attempt").get<int>();
      r.final_distance = j.at("final_distance").get<double>();
      r.reached_in_time = j.at("reached_in_time").get<bool>();
      r.grasped = j.at("grasped").get<bool>();
      r.detached = j.at("detached").get<bool>();
      r.deposited = j.at("deposited").get<bool>();
    } catch (const nlohmann::json::exception& e) {
      throw DataError("success records line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!r.stages_monotone())
      throw DataError("success records line " + std::to_string(line_no) +
                      ": stage flags must satisfy deposited => detached => grasped");
    out.push_back(r);
  }
  return out;
}

void write_success_record(std::ostream& out, const SuccessRecord& r) {
  nlohmann::json j;
  j["attempt"] = r.attempt;
  j["final_distance"] = r.final_distance;
  j["reached_in_time"] = r.reached_in_time;
  j["grasped"] = r.grasped;
  j["detached"] = r.detached;
  j["deposited"] = r.deposited;
  out << j.dump() << '\n';
}

std::vector<TrajectoryLog> read_trajectory_csv(std::istream& in) {
  std::vector<TrajectoryLog> logs;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    if (line_no == 1 && line.rfind("t,", 0) == 0) continue;  // header
    std::stringstream ss(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() != 5)
      throw DataError("trajectory CSV line " + std::to_string(line_no) + ": expected 5 fields, got " +
                      std::to_string(fields.size()));
    TrajectorySample s;
    try {
      std::size_t used = 0;
      double v[4];
      for (int k = 0; k < 4; ++k) {
        v[k] = std::stod(fields[k], &used);
        if (used != fields[k].size() || !std::isfinite(v[k])) throw std::invalid_argument(fields[k]);
      }
      s.t = v[0];
      s.p = Eigen::Vector3d(v[1], v[2], v[3]);
    } catch (const std::exception&) {
      throw DataError("trajectory CSV line " + std::to_string(line_no) + ": malformed number");
    }
    const std::string& label = fields[4];
    if (logs.empty() || logs.back().label != label || !(s.t > logs.back().samples.back().t))
      logs.push_back({label, {}});
    logs.back().samples.push_back(s);
  }
  return logs;
}

void write_trajectory_csv_header(std::ostream& out) { out << "t,x,y,z,segment_label\n"; }

void write_trajectory_rows(std::ostream& out, const TrajectoryLog& log) {
  std::ostringstream row;
  row << std::setprecision(10);
  for (const auto& s : log.samples)
    row << s.t << ',' << s.p.x() << ',' << s.p.y() << ',' << s.p.z() << ',' << log.label << '\n';
  out << row.str();
}

namespace {

SummaryStat stat_of(const std::vector<double>& x) {
  SummaryStat s;
  if (x.empty()) return s;
  for (double v : x) s.mean += v;
  s.mean /= static_cast<double>(x.size());
  if (x.size() > 1) {
    double ss = 0.0;
    for (double v : x) ss += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(x.size() - 1));
  }
  return s;
}

}  // namespace

std::vector<MetricsSummaryRow> summarize(const std::vector<TrajectoryLog>& logs,
                                         const MetricsConfig& config) {
  std::vector<std::string> labels;
  std::vector<std::vector<SegmentMetrics>> per_label;
  for (const auto& log : logs) {
    auto it = std::find(labels.begin(), labels.end(), log.label);
    if (it == labels.end()) {
      labels.push_back(log.label);
      per_label.emplace_back();
      it = labels.end() - 1;
    }
    per_label[it - labels.begin()].push_back(analyze_segment(log, config));
  }
  std::vector<MetricsSummaryRow> rows;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto& ms = per_label[i];
    auto collect = [&](double SegmentMetrics::*field) {
      std::vector<double> v;
      for (const auto& m : ms) v.push_back(m.*field);
      return stat_of(v);
    };
    MetricsSummaryRow r;
    r.label = labels[i];
    r.count = static_cast<int>(ms.size());
    r.duration = collect(&SegmentMetrics::duration);
    r.straight_distance = collect(&SegmentMetrics::straight_distance);
    r.traj_length = collect(&SegmentMetrics::traj_length);
    r.mean_speed = collect(&SegmentMetrics::mean_speed);
    r.rms_jerk = collect(&SegmentMetrics::rms_jerk);
    r.peak_jerk_robust = collect(&SegmentMetrics::peak_jerk_robust);
    rows.push_back(r);
  }
  return rows;
}

void write_metrics_csv(std::ostream& out, const std::vector<MetricsSummaryRow>& rows) {
  out << "segment,count,duration_mean,duration_std,straight_distance_mean,straight_distance_std,"
         "traj_length_mean,traj_length_std,mean_speed_mean,mean_speed_std,rms_jerk_mean,rms_jerk_std,"
         "peak_jerk_robust_mean,peak_jerk_robust_std\n";
  std::ostringstream s;
  s << std::setprecision(8);
  for (const auto& r : rows) {
    s << r.label << ',' << r.count;
    for (const SummaryStat* st : {&r.duration, &r.straight_distance, &r.traj_length, &r.mean_speed,
                                  &r.rms_jerk, &r.peak_jerk_robust})
      s << ',' << st->mean << ',' << st->std;
    s << '\n';
  }
  out << s.str();
}

}  // namespace reachlab
