#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>

#include <Eigen/Geometry>

#include "test_tracks.hpp"
#include "vpmpcc/error.hpp"
#include "vpmpcc/track.hpp"

using namespace vpmpcc;
using vpmpcc::testing::make_circle_track;
using vpmpcc::testing::make_sharp_corner_track;
using vpmpcc::testing::make_square_track;
using vpmpcc::testing::make_stadium_track;

namespace {

constexpr double kPi = std::numbers::pi;

// independent length oracle: dense polyline over the fitted curve
double polyline_length(const TrackModel& track, int samples = 200000) {
  double len = 0.0;
  Eigen::Vector2d prev = track.position_at(0.0);
  for (int i = 1; i <= samples; ++i) {
    const Eigen::Vector2d p = track.position_at(track.length() * i / samples);
    len += (p - prev).norm();
    prev = p;
  }
  return len;
}

std::string write_temp(const std::string& name, const std::string& content) {
  const std::string path = (std::filesystem::temp_directory_path() / name).string();
  std::ofstream out(path);
  out << content;
  return path;
}

}  // namespace

TEST_CASE("build_track length matches oracles") {
  SUBCASE("rounded square") {
    const TrackModel track = make_square_track(10.0);
    CHECK(std::abs(track.length() - 40.0) / 40.0 < 0.05);
    CHECK(std::abs(track.length() - polyline_length(track)) < 1e-4);
  }
  SUBCASE("64-gon circle") {
    const TrackModel track = make_circle_track(10.0, 64);
    CHECK(std::abs(track.length() - 2.0 * kPi * 10.0) / (2.0 * kPi * 10.0) < 0.005);
  }
}

TEST_CASE("build_track rejects bad inputs") {
  std::vector<Eigen::Vector2d> tri = {{0, 0}, {1, 0}, {0, 1}};
  CHECK_THROWS_WITH_AS(TrackModel::build(tri, {}, 0.8), doctest::Contains("TooFewPoints"),
                       Error);

  std::vector<Eigen::Vector2d> dup = {{0, 0}, {1, 0}, {1, 1}, {1, 0}, {0, 1}};
  CHECK_THROWS_AS(TrackModel::build(dup, {}, 0.8), Error);
  try {
    TrackModel::build(dup, {}, 0.8);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DuplicatePoints);
  }

  // bow-tie: segments cross
  std::vector<Eigen::Vector2d> bow = {{0, 0}, {2, 2}, {2, 0}, {0, 2}};
  try {
    TrackModel::build(bow, {}, 0.8);
    FAIL("expected SelfIntersecting");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SelfIntersecting);
  }
}

TEST_CASE("frame_at on a straight segment") {
  const TrackModel track = make_stadium_track();
  // mid bottom straight, far from the arcs
  const TrackFrame f = track.frame_at(8.0);
  CHECK(f.tangent.x() == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(std::abs(f.tangent.y()) < 1e-7);
  CHECK(f.normal.y() == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(std::abs(f.curvature) < 1e-6);
}

TEST_CASE("frame_at on a circle") {
  const double r = 10.0;
  const TrackModel track = make_circle_track(r, 64);
  for (int i = 0; i < 64; ++i) {
    const double s = track.length() * i / 64.0;
    const TrackFrame f = track.frame_at(s);
    CHECK(std::abs(f.curvature - 1.0 / r) / (1.0 / r) < 0.01);
  }
}

TEST_CASE("frame_at is periodic") {
  const TrackModel track = make_circle_track(10.0, 64);
  const TrackFrame a = track.frame_at(track.length() + 1.0);
  const TrackFrame b = track.frame_at(1.0);
  CHECK((a.point - b.point).norm() < 1e-9);
  CHECK((a.tangent - b.tangent).norm() < 1e-12);
}

TEST_CASE("frames are orthonormal and arc-length parameterized") {
  const TrackModel tracks[] = {make_circle_track(10.0, 64), make_square_track(10.0),
                               make_sharp_corner_track()};
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (const TrackModel& track : tracks) {
    for (int i = 0; i < 200; ++i) {
      const double s = unit(rng) * track.length();
      const TrackFrame f = track.frame_at(s);
      CHECK(std::abs(f.tangent.dot(f.normal)) < 1e-12);
      CHECK(std::abs(f.tangent.norm() - 1.0) < 1e-12);
      CHECK(std::abs(f.normal.norm() - 1.0) < 1e-12);
      // unit-speed parameterization
      const double h = 1e-4;
      const double speed =
          (track.position_at(s + h) - track.position_at(s - h)).norm() / (2.0 * h);
      CHECK(std::abs(speed - 1.0) < 1e-3);
    }
  }
}

TEST_CASE("project recovers points on and off the line") {
  const double r = 10.0;
  const TrackModel track = make_circle_track(r, 128);

  SUBCASE("point on the line") {
    const double s = 13.7;
    const Eigen::Vector2d p = track.position_at(s);
    const Projection proj = track.project(p);
    CHECK(std::abs(proj.distance) < 1e-9);
    CHECK(std::abs(proj.s - s) < 1e-6);
  }

  SUBCASE("radial offset is signed by the normal convention") {
    const double theta = 0.7;
    const Eigen::Vector2d p(10.4 * std::cos(theta), 10.4 * std::sin(theta));
    const Projection proj = track.project(p);
    // CCW circle: the normal points toward the center, so outside is negative
    CHECK(proj.distance == doctest::Approx(-0.4).epsilon(1e-3));
    CHECK(proj.s == doctest::Approx(r * theta).epsilon(1e-3));
  }

  SUBCASE("center is ambiguous") {
    const Projection proj = track.project(Eigen::Vector2d(0.0, 0.0));
    CHECK(proj.ambiguous);
  }

  SUBCASE("hint window agrees with the global search") {
    const Eigen::Vector2d p(10.2 * std::cos(1.1), 10.2 * std::sin(1.1));
    const Projection global = track.project(p);
    const Projection hinted = track.project(p, global.s + 2.0);
    CHECK(std::abs(global.s - hinted.s) < 1e-6);
    CHECK(std::abs(global.distance - hinted.distance) < 1e-9);
  }
}

TEST_CASE("projection is orthogonal at the optimum") {
  const TrackModel tracks[] = {make_circle_track(10.0, 64), make_stadium_track(),
                               make_sharp_corner_track()};
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (const TrackModel& track : tracks) {
    for (int i = 0; i < 100; ++i) {
      const double s = unit(rng) * track.length();
      const TrackFrame f = track.frame_at(s);
      const Eigen::Vector2d p = f.point + (unit(rng) - 0.5) * 0.8 * f.normal;
      const Projection proj = track.project(p, s);
      if (proj.ambiguous) continue;
      const TrackFrame fp = track.frame_at(proj.s);
      CHECK(std::abs((p - fp.point).dot(fp.tangent)) < 1e-9);
    }
  }
}

TEST_CASE("generate_rvp obeys the analytic limits") {
  SUBCASE("negligible curvature saturates at the cap") {
    const TrackModel track = make_circle_track(200.0, 128);
    const ReferenceVelocityProfile rvp = generate_rvp(track, 5.0, 4.0, 3.0, 4.0);
    for (double s = 0.0; s < track.length(); s += track.length() / 50.0) {
      CHECK(rvp.value(s) == doctest::Approx(5.0).epsilon(1e-6));
    }
  }

  SUBCASE("constant-curvature circle pins v = sqrt(a_lat R)") {
    const TrackModel track = make_circle_track(2.0, 96);
    const ReferenceVelocityProfile rvp = generate_rvp(track, 15.0, 4.0, 3.0, 4.0);
    const double expect = std::sqrt(4.0 * 2.0);
    for (double s = 0.0; s < track.length(); s += track.length() / 37.0) {
      CHECK(rvp.value(s) == doctest::Approx(expect).epsilon(0.01));
    }
  }

  SUBCASE("corner exit follows constant-acceleration kinematics") {
    const TrackModel track = make_stadium_track(20.0, 2.0);
    const double a_long = 3.0;
    const ReferenceVelocityProfile rvp = generate_rvp(track, 12.0, 4.0, a_long, 6.0);
    // the bottom straight starts at s=0 after the left arc; v grows from the
    // corner speed with v^2 = v0^2 + 2 a ds until the cap
    const double v0 = rvp.value(0.0);
    for (double ds = 1.0; ds < 8.0; ds += 1.0) {
      const double expect = std::min(12.0, std::sqrt(v0 * v0 + 2.0 * a_long * ds));
      CHECK(rvp.value(ds) == doctest::Approx(expect).epsilon(0.03));
    }
  }

  SUBCASE("non-positive limits are rejected") {
    const TrackModel track = make_circle_track(5.0, 64);
    CHECK_THROWS_AS(generate_rvp(track, -1.0, 4.0, 3.0, 4.0), Error);
    CHECK_THROWS_AS(generate_rvp(track, 5.0, 0.0, 3.0, 4.0), Error);
  }
}

TEST_CASE("generate_rvp is invariant under rotation and translation") {
  const double angle = 0.83;
  const Eigen::Rotation2D<double> rot(angle);
  const Eigen::Vector2d shift(31.0, -17.0);

  std::vector<Eigen::Vector2d> base, moved;
  for (int i = 0; i < 96; ++i) {
    const double a = 2.0 * kPi * i / 96;
    const Eigen::Vector2d p(6.0 * std::cos(a), 6.0 * std::sin(a));
    base.push_back(p);
    moved.push_back(rot * p + shift);
  }
  const TrackModel t1 = TrackModel::build(base, {}, 0.8);
  const TrackModel t2 = TrackModel::build(moved, {}, 0.8);
  const ReferenceVelocityProfile r1 = generate_rvp(t1, 8.0, 4.0, 3.0, 4.0);
  const ReferenceVelocityProfile r2 = generate_rvp(t2, 8.0, 4.0, 3.0, 4.0);
  double worst = 0.0;
  for (double s = 0.0; s < t1.length(); s += t1.length() / 97.0) {
    worst = std::max(worst, std::abs(r1.value(s) - r2.value(s)));
  }
  CHECK(worst < 1e-9);
}

TEST_CASE("rvp interpolation") {
  ReferenceVelocityProfile rvp({0.0, 1.0, 2.0, 3.0}, {2.0, 4.0, 3.0, 5.0}, 4.0);
  CHECK(rvp.value(0.5) == doctest::Approx(3.0));
  CHECK(rvp.value(3.5) == doctest::Approx(3.5));  // wraps toward v[0]=2
  CHECK(rvp.value(4.0 + 1.0) == doctest::Approx(4.0));
  // the smooth lookup interpolates the same samples
  for (int i = 0; i < 4; ++i) {
    CHECK(rvp.smooth_value(static_cast<double>(i)) == doctest::Approx(rvp.sample_v()[static_cast<size_t>(i)]).epsilon(1e-12));
  }
}

TEST_CASE("track file loading") {
  SUBCASE("centerline with widths") {
    std::string csv = "x_m,y_m,w_tr_left_m,w_tr_right_m\n";
    for (int i = 0; i < 32; ++i) {
      const double a = 2.0 * kPi * i / 32;
      csv += std::to_string(8.0 * std::cos(a)) + "," + std::to_string(8.0 * std::sin(a)) +
             ",0.9,0.7\n";
    }
    const std::string path = write_temp("vpmpcc_track.csv", csv);
    const TrackModel track = load_track_file(path);
    CHECK(track.length() == doctest::Approx(2.0 * kPi * 8.0).epsilon(0.01));
    CHECK(track.half_width(3.0) == doctest::Approx(0.7).epsilon(1e-9));
  }

  SUBCASE("malformed csv") {
    const std::string path = write_temp("vpmpcc_bad.csv", "x_m,y_m\n1.0,banana\n");
    CHECK_THROWS_AS(load_track_file(path), Error);
  }
}

TEST_CASE("raceline loading") {
  auto circle_raceline = [](int n, bool close, double gap) {
    std::string csv = "s_m,x_m,y_m,v_mps\n";
    for (int i = 0; i < n; ++i) {
      const double a = 2.0 * kPi * i / n;
      const double r = 8.0 + ((i == n - 1 && !close) ? gap : 0.0);
      csv += std::to_string(8.0 * a) + "," + std::to_string(r * std::cos(a)) + "," +
             std::to_string(r * std::sin(a)) + ",3.5\n";
    }
    if (close) csv += std::to_string(2.0 * kPi * 8.0) + ",8.0,0.0,3.5\n";  // closure row
    return csv;
  };

  SUBCASE("round trip with constant velocity") {
    const std::string path = write_temp("vpmpcc_rl.csv", circle_raceline(48, true, 0.0));
    const TrackModel track = load_raceline(path);
    CHECK(track.has_rvp());
    CHECK(track.length() == doctest::Approx(2.0 * kPi * 8.0).epsilon(0.01));
    for (double s = 0.0; s < track.length(); s += 5.0) {
      CHECK(track.rvp().value(s) == doctest::Approx(3.5).epsilon(1e-9));
    }
  }

  SUBCASE("non-monotone s") {
    std::string csv = "s_m,x_m,y_m,v_mps\n0,8,0,3\n2,7,3,3\n1,5,5,3\n3,0,8,3\n";
    const std::string path = write_temp("vpmpcc_rl_bad.csv", csv);
    try {
      load_raceline(path);
      FAIL("expected ParseError");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::ParseError);
    }
  }

  SUBCASE("open polyline") {
    const std::string path = write_temp("vpmpcc_rl_open.csv", circle_raceline(48, false, 2.0));
    try {
      load_raceline(path);
      FAIL("expected NonClosedRaceline");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::NonClosedRaceline);
    }
  }
}

TEST_CASE("bundled sharp-corner circuit") {
  const TrackModel track = make_sharp_corner_track();
  CHECK(track.length() == doctest::Approx(62.8).epsilon(0.02));

  // four curvature plateaus
  const int n = 2048;
  double kmax = 0.0;
  std::vector<double> kappa(n);
  for (int i = 0; i < n; ++i) {
    kappa[static_cast<size_t>(i)] = std::abs(track.frame_at(track.length() * i / n).curvature);
    kmax = std::max(kmax, kappa[static_cast<size_t>(i)]);
  }
  const double thresh = 0.5 * kmax;
  int peaks = 0;
  bool in_peak = kappa[0] > thresh;
  for (int i = 1; i < n; ++i) {
    const bool now = kappa[static_cast<size_t>(i)] > thresh;
    if (now && !in_peak) ++peaks;
    in_peak = now;
  }
  if (kappa[0] > thresh && kappa[static_cast<size_t>(n - 1)] > thresh) {
    // the seam would double-count a peak spanning s = 0
  } else if (kappa[0] > thresh) {
    ++peaks;
  }
  CHECK(peaks == 4);
}
