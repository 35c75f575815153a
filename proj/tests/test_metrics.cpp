#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "oracles.hpp"
#include "reachlab/errors.hpp"
#include "reachlab/metrics.hpp"

using namespace reachlab;

TEST_CASE("resampling onto a uniform grid") {
  MetricsConfig cfg;
  SUBCASE("constant trajectory is a fixed point") {
    TrajectoryLog log{"c", {{0.0, {1, 2, 3}}, {0.37, {1, 2, 3}}, {1.0, {1, 2, 3}}}};
    const UniformSeries s = resample_and_smooth(log, cfg);
    CHECK(s.p.size() == 101);
    for (const auto& p : s.p) CHECK(p == Eigen::Vector3d(1, 2, 3));
  }
  SUBCASE("linear motion passes through") {
    TrajectoryLog log{"l", {}};
    for (double t : {0.0, 0.013, 0.2, 0.55, 0.61, 1.0}) log.samples.push_back({t, Eigen::Vector3d(0.3 * t, -t, 2.0)});
    const UniformSeries s = resample_and_smooth(log, cfg);
    for (std::size_t k = 0; k < s.p.size(); ++k)
      REQUIRE((s.p[k] - Eigen::Vector3d(0.3 * s.time(k), -s.time(k), 2.0)).norm() < 1e-12);
  }
  SUBCASE("irregular stamps of a sine path") {
    TrajectoryLog log{"sin", {}};
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> gap(0.001, 0.03);
    for (double t = 0.2; t < 2.0; t += gap(rng)) log.samples.push_back({t, Eigen::Vector3d(std::sin(t), 0, 0)});
    const UniformSeries s = resample_and_smooth(log, cfg);
    CHECK(s.dt == doctest::Approx(0.01).epsilon(1e-15));
    CHECK(s.t0 == 0.2);
    CHECK(s.time(s.p.size() - 1) <= log.samples.back().t + 1e-12);
  }
  SUBCASE("bad logs") {
    CHECK_THROWS_AS(resample_and_smooth(TrajectoryLog{"x", {{0.0, {0, 0, 0}}}}, cfg), DataError);
    CHECK_THROWS_AS(resample_and_smooth(TrajectoryLog{"x", {{0.0, {0, 0, 0}}, {0.0, {1, 0, 0}}}}, cfg),
                    DataError);
  }
  SUBCASE("window must be odd") {
    cfg.ma_window = 4;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
  }
}

TEST_CASE("rdp simplification") {
  std::vector<Eigen::Vector3d> line;
  for (int k = 0; k <= 10; ++k) line.emplace_back(0.1 * k, 0.2 * k, 0);
  auto s = rdp_simplify(line, 1e-3);
  REQUIRE(s.size() == 2);
  CHECK(s.front() == line.front());
  CHECK(s.back() == line.back());

  const std::vector<Eigen::Vector3d> corner{{0, 0, 0}, {0.5, 0, 0}, {1, 0, 0}, {1, 0.5, 0}, {1, 1, 0}};
  s = rdp_simplify(corner, 0.01);
  REQUIRE(s.size() == 3);
  CHECK(s[1] == Eigen::Vector3d(1, 0, 0));

  CHECK(rdp_simplify(corner, 0.0).size() == corner.size());
  CHECK(rdp_simplify(corner, 1e9).size() == 2);

  SUBCASE("removed points stay within epsilon of the polyline") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> n(0.0, 0.01);
    std::vector<Eigen::Vector3d> pts;
    for (int k = 0; k < 300; ++k) pts.emplace_back(0.01 * k, std::sin(0.05 * k) * 0.1 + n(rng), n(rng));
    const double eps = 0.005;
    const auto simp = rdp_simplify(pts, eps);
    auto seg_dist = [](const Eigen::Vector3d& p, const Eigen::Vector3d& a, const Eigen::Vector3d& b) {
      const Eigen::Vector3d ab = b - a;
      const double t = std::clamp((p - a).dot(ab) / ab.squaredNorm(), 0.0, 1.0);
      return (p - (a + t * ab)).norm();
    };
    std::size_t j = 0;  // output is a subsequence
    for (const auto& p : pts) {
      double best = 1e9;
      for (std::size_t k = 0; k + 1 < simp.size(); ++k) best = std::min(best, seg_dist(p, simp[k], simp[k + 1]));
      REQUIRE(best <= eps + 1e-12);
      if (j < simp.size() && p == simp[j]) ++j;
    }
    CHECK(j == simp.size());
  }
}

TEST_CASE("differentiation stencils") {
  std::vector<Eigen::Vector3d> x;
  for (int k = 0; k < 6; ++k) x.emplace_back(k * k * 0.01, 0, 0);  // t^2 at dt = 0.1
  const auto d = differentiate(x, 0.1);
  for (int k = 0; k < 6; ++k) CHECK(d[k].x() == doctest::Approx(2 * 0.1 * k).epsilon(1e-12));
  CHECK_THROWS_AS(differentiate({{0, 0, 0}}, 0.1), DataError);

  // cubics have a constant third derivative, edges included
  std::vector<Eigen::Vector3d> c;
  for (int k = 0; k < 9; ++k) {
    const double t = 0.1 * k;
    c.emplace_back(t * t * t, 2.0 * t * t - t, -0.5 * t * t * t + 1.0);
  }
  for (const auto& j : third_derivative(c, 0.1)) CHECK((j - Eigen::Vector3d(6, 0, -3)).norm() < 1e-8);
  CHECK_THROWS_AS(third_derivative({c[0], c[1], c[2]}, 0.1), DataError);
}

TEST_CASE("percentile") {
  CHECK(percentile({1, 2, 3, 4, 5}, 50) == 3.0);
  CHECK(percentile({1, 2, 3, 4, 5}, 100) == 5.0);
  CHECK(percentile({0, 10}, 25) == doctest::Approx(2.5));
  std::vector<double> v{3, 9, 1, 7, 2, 8};
  double prev = 0;
  for (double q = 1; q < 100; q += 7) {
    const double p = percentile(v, q);
    CHECK(p >= prev);
    CHECK(p <= 9.0);
    prev = p;
  }
}

TEST_CASE("segment fixtures") {
  MetricsConfig cfg;
  SUBCASE("straight constant velocity") {
    const SegmentMetrics m = analyze_segment(oracle::straight_line(), cfg);
    CHECK(m.duration == doctest::Approx(4.0).epsilon(1e-12));
    CHECK(m.straight_distance == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(m.traj_length == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(m.mean_speed == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(m.rms_jerk < 1e-6);
  }
  SUBCASE("minimum-jerk quintic") {
    cfg.resample_rate = 200.0;
    const UniformSeries s = resample_and_smooth(oracle::quintic(), cfg);
    const auto j = jerk_magnitude(s);
    double err = 0.0, ref = 0.0;
    for (std::size_t k = 0; k < j.size(); ++k) {
      const double a = std::abs(oracle::quintic_jerk(s.time(k), 1.0));
      err += (j[k] - a) * (j[k] - a);
      ref += a * a;
    }
    CHECK(std::sqrt(err / ref) < 0.02);
    const SegmentMetrics m = analyze_segment(oracle::quintic(), cfg);
    CHECK(m.straight_distance == doctest::Approx(1.0).epsilon(1e-3));
    // analytic RMS jerk of the unit quintic is sqrt(720)
    CHECK(m.rms_jerk == doctest::Approx(std::sqrt(720.0)).epsilon(0.03));
    const SegmentMetrics raw = segment_metrics(s, rdp_simplify(s.p, cfg.rdp_epsilon), cfg);
    CHECK(raw.peak_jerk_robust <= *std::max_element(j.begin(), j.end()));
  }
  SUBCASE("semicircle") {
    const SegmentMetrics m = analyze_segment(oracle::semicircle(), cfg);
    CHECK(m.straight_distance == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(std::abs(m.traj_length - std::numbers::pi / 2) / (std::numbers::pi / 2) < 0.01);
    CHECK(m.traj_length >= m.straight_distance);
  }
  SUBCASE("too short") {
    TrajectoryLog tiny{"t", {{0.0, {0, 0, 0}}, {0.02, {0.01, 0, 0}}}};
    CHECK_THROWS_AS(analyze_segment(tiny, cfg), DataError);
  }
}

TEST_CASE("jerk ignores affine terms") {
  MetricsConfig cfg;
  TrajectoryLog base = oracle::quintic(1.0, 100.0), shifted = base;
  for (auto& s : shifted.samples) s.p += Eigen::Vector3d(0.3, -1.0, 2.0) + s.t * Eigen::Vector3d(0.0, 0.2, -0.1);
  auto rms = [&](const TrajectoryLog& log) {
    const UniformSeries s = resample_and_smooth(log, cfg);
    return segment_metrics(s, {s.p.front(), s.p.back()}, cfg).rms_jerk;
  };
  const double a = rms(base), b = rms(shifted);
  CHECK(b == doctest::Approx(a).epsilon(1e-6));
}

TEST_CASE("stillness trimming") {
  TrajectoryLog log{"s", {}};
  for (int k = 0; k <= 300; ++k) {
    const double t = k * 0.01;
    const double x = t < 1.0 ? 0.0 : (t < 2.0 ? 0.2 * (t - 1.0) : 0.2);
    log.samples.push_back({t, Eigen::Vector3d(x, 0, 0)});
  }
  const SegmentMetrics m = analyze_segment(log, MetricsConfig{});
  CHECK(m.duration < 1.2);
  CHECK(m.duration > 0.9);
  CHECK(m.traj_length == doctest::Approx(0.2).epsilon(1e-3));
}

TEST_CASE("success rates") {
  CHECK(reach_success_rate(oracle::success_records(30, 29, 0), 0.02) == doctest::Approx(96.6667).epsilon(1e-5));
  CHECK(reach_success_rate(oracle::success_records(5, 0, 0), 0.02) == 0.0);
  CHECK(std::round(10 * reach_success_rate(oracle::success_records(281, 272, 0), 0.02)) / 10 == 96.8);
  CHECK(std::round(10 * harvest_success_rate(oracle::success_records(281, 281, 237))) / 10 == 84.3);
  CHECK(harvest_success_rate(oracle::success_records(4, 4, 4)) == 100.0);
  CHECK_THROWS_AS(reach_success_rate({}, 0.02), DataError);
  CHECK_THROWS_AS(harvest_success_rate({}), DataError);

  // reached late does not count
  auto recs = oracle::success_records(4, 4, 0);
  recs[0].reached_in_time = false;
  CHECK(reach_success_rate(recs, 0.02) == 75.0);

  std::mt19937_64 rng(1);
  auto perm = oracle::success_records(50, 31, 17);
  const double r0 = reach_success_rate(perm, 0.02), h0 = harvest_success_rate(perm);
  std::shuffle(perm.begin(), perm.end(), rng);
  CHECK(reach_success_rate(perm, 0.02) == r0);
  CHECK(harvest_success_rate(perm) == h0);
}

TEST_CASE("success record JSON lines") {
  std::stringstream buf;
  for (const auto& r : oracle::success_records(3, 2, 1)) write_success_record(buf, r);
  const auto back = read_success_records(buf);
  REQUIRE(back.size() == 3);
  CHECK(back[0].deposited);
  CHECK_FALSE(back[2].reached_in_time);

  std::istringstream bad(
      R"({"attempt":0,"final_distance":0.01,"reached_in_time":true,"grasped":false,"detached":true,"deposited":false})"
      "\n");
  CHECK_THROWS_AS(read_success_records(bad), DataError);
}

TEST_CASE("trajectory CSV and summary table") {
  std::stringstream csv;
  write_trajectory_csv_header(csv);
  const TrajectoryLog a = oracle::straight_line(0.25, 1.0, 100.0);
  TrajectoryLog b = a;
  b.label = "other";
  write_trajectory_rows(csv, a);
  write_trajectory_rows(csv, a);  // time restarts: a second segment with the same label
  write_trajectory_rows(csv, b);
  const auto logs = read_trajectory_csv(csv);
  REQUIRE(logs.size() == 3);
  CHECK(logs[0].samples.size() == a.samples.size());

  const auto rows = summarize(logs, MetricsConfig{});
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].label == "straight");
  CHECK(rows[0].count == 2);
  CHECK(rows[0].duration.std == doctest::Approx(0.0));
  CHECK(rows[1].count == 1);

  std::ostringstream out;
  write_metrics_csv(out, rows);
  CHECK(out.str().rfind("segment,count,", 0) == 0);

  std::istringstream broken("t,x,y,z,segment_label\n0.0,1,2\n");
  try {
    read_trajectory_csv(broken);
    FAIL("expected a data error");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
}
