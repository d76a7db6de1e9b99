#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "vpmpcc/track.hpp"

namespace vpmpcc::testing {

inline TrackModel make_circle_track(double radius, int n = 64, double half_width = 0.8,
                                    double cx = 0.0, double cy = 0.0) {
  std::vector<Eigen::Vector2d> pts;
  for (int i = 0; i < n; ++i) {
    const double a = 2.0 * std::numbers::pi * i / n;
    pts.emplace_back(cx + radius * std::cos(a), cy + radius * std::sin(a));
  }
  return TrackModel::build(pts, {}, half_width);
}

/// Axis-aligned square of the given side, sampled along the edges; the
/// spline rounds the corners. Starts at the origin corner, CCW.
inline TrackModel make_square_track(double side = 10.0, double spacing = 1.0,
                                    double half_width = 0.8) {
  std::vector<Eigen::Vector2d> pts;
  const int steps = static_cast<int>(side / spacing);
  for (int i = 0; i < steps; ++i) pts.emplace_back(i * spacing, 0.0);
  for (int i = 0; i < steps; ++i) pts.emplace_back(side, i * spacing);
  for (int i = 0; i < steps; ++i) pts.emplace_back(side - i * spacing, side);
  for (int i = 0; i < steps; ++i) pts.emplace_back(0.0, side - i * spacing);
  return TrackModel::build(pts, {}, half_width);
}

/// Two straights joined by semicircles (stadium); the bottom straight runs
/// along +x from the origin, so s=0 starts on a straight segment.
inline TrackModel make_stadium_track(double straight = 20.0, double radius = 5.0,
                                     double half_width = 0.8) {
  std::vector<Eigen::Vector2d> pts;
  const double pi = std::numbers::pi;
  const int ns = static_cast<int>(straight / 0.5);
  const int na = static_cast<int>(pi * radius / 0.3);
  for (int i = 0; i < ns; ++i) pts.emplace_back(i * 0.5, 0.0);
  for (int i = 0; i < na; ++i) {
    const double a = -0.5 * pi + pi * i / na;
    pts.emplace_back(straight + radius * std::cos(a), radius + radius * std::sin(a));
  }
  for (int i = 0; i < ns; ++i) pts.emplace_back(straight - i * 0.5, 2.0 * radius);
  for (int i = 0; i < na; ++i) {
    const double a = 0.5 * pi + pi * i / na;
    pts.emplace_back(radius * std::cos(a), radius + radius * std::sin(a));
  }
  return TrackModel::build(pts, {}, half_width);
}

inline TrackModel make_sharp_corner_track(double half_width = 0.8) {
  const Centerline line = sharp_corner_centerline(1.2, half_width);
  return TrackModel::build(line.points, line.half_widths, half_width);
}

}  // namespace vpmpcc::testing
