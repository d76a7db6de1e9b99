#pragma once

#include <Eigen/Core>
#include <optional>
#include <string>
#include <vector>

#include "vpmpcc/spline.hpp"

namespace vpmpcc {

/// Arc-length-parameterized target speeds along the track. The contract
/// interpolation is piecewise linear and periodic; smooth_value() exposes a
/// C2 periodic spline through the same samples for use inside the planner's
/// NLP, where the cost must be differentiable in s. Both agree exactly at
/// the sample points.
class ReferenceVelocityProfile {
 public:
  ReferenceVelocityProfile() = default;
  ReferenceVelocityProfile(std::vector<double> s, std::vector<double> v, double period);

  bool empty() const { return s_.empty(); }
  double period() const { return period_; }
  const std::vector<double>& sample_s() const { return s_; }
  const std::vector<double>& sample_v() const { return v_; }

  double value(double s) const;         // piecewise linear, periodic
  double smooth_value(double s) const;  // C2 spline through the samples
  double smooth_slope(double s) const;

 private:
  std::vector<double> s_, v_;
  double period_ = 0.0;
  PeriodicSpline1D smooth_;
};

struct TrackFrame {
  Eigen::Vector2d point;
  Eigen::Vector2d tangent;  // unit
  Eigen::Vector2d normal;   // tangent rotated +90 deg CCW
  double curvature;         // signed, left turn positive
};

struct Projection {
  double s = 0.0;         // arc position of the closest reference point
  double distance = 0.0;  // signed along the normal at s
  bool ambiguous = false; // two minima tied within 1e-9 m (warning, not failure)
};

/// Closed reference line with frames, curvature, width and attached RVP.
/// Immutable after construction; safe to share across concurrent readers.
class TrackModel {
 public:
  /// Fits a periodic spline through the centerline points. half_widths is
  /// either empty (constant fallback applies) or one entry per point.
  static TrackModel build(const std::vector<Eigen::Vector2d>& centerline,
                          const std::vector<double>& half_widths,
                          double fallback_half_width = 0.8);

  double length() const { return total_length_; }

  TrackFrame frame_at(double s) const;
  Eigen::Vector2d position_at(double s) const;

  /// Orthogonal projection of p onto the reference line. With a hint, the
  /// search is restricted to +-5 m around it; otherwise a 0.05 m global scan
  /// seeds local refinement.
  Projection project(const Eigen::Vector2d& p, std::optional<double> hint = std::nullopt) const;

  double half_width(double s) const;
  double half_width_slope(double s) const;

  const ReferenceVelocityProfile& rvp() const { return rvp_; }
  bool has_rvp() const { return !rvp_.empty(); }
  void attach_rvp(ReferenceVelocityProfile rvp) { rvp_ = std::move(rvp); }

  /// Arc position of control point i (useful for attaching per-point data).
  double control_point_s(int i) const { return knot_s_[static_cast<size_t>(i)]; }
  int control_point_count() const { return static_cast<int>(knot_s_.size()) - 1; }

  double wrap(double s) const;

 private:
  double param_at(double s) const;  // arc length -> spline parameter
  Projection refine(const Eigen::Vector2d& p, double s0, double lo, double hi) const;

  PeriodicSpline2D spline_;
  double total_length_ = 0.0;
  std::vector<double> knot_s_;    // arc length at spline knots (size n+1)
  std::vector<double> lut_s_;     // uniform arc-length grid
  std::vector<double> lut_t_;     // spline parameter at grid nodes
  std::vector<double> lut_dtds_;  // 1/speed at grid nodes (Hermite slopes)
  std::vector<double> widths_;    // per control point (size n+1, wrapped), or empty
  double const_width_ = 0.8;
  ReferenceVelocityProfile rvp_;
};

/// Curvature-limited velocity profile: v_curv = min(v_cap, sqrt(a_lat/|k|)),
/// then periodic forward/backward passes limited by a_long/a_brake iterated
/// to a fixed point.
ReferenceVelocityProfile generate_rvp(const TrackModel& track, double v_cap, double a_lat_max,
                                      double a_long_max, double a_brake_max);

/// Reads a raceline file (header s_m,x_m,y_m,v_mps), rebuilds the reference
/// line from its x/y columns and attaches the RVP from its velocity column.
TrackModel load_raceline(const std::string& path, double fallback_half_width = 0.8);

/// Reads a centerline file (header x_m,y_m[,w_tr_left_m,w_tr_right_m]).
TrackModel load_track_file(const std::string& path, double fallback_half_width = 0.8);

struct Centerline {
  std::vector<Eigen::Vector2d> points;
  std::vector<double> half_widths;
};

/// Bundled synthetic test circuit: a rounded rectangle with four
/// tight-radius corners, total length close to 62.8 m.
Centerline sharp_corner_centerline(double corner_radius = 1.2, double half_width = 0.8);

}  // namespace vpmpcc
