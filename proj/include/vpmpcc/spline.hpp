#pragma once

#include <Eigen/Core>
#include <vector>

namespace vpmpcc {

/// Periodic cubic interpolating spline in one dimension. Knots are strictly
/// increasing; the value sequence wraps (y(t + period) = y(t)) with C2
/// continuity across the seam.
class PeriodicSpline1D {
 public:
  PeriodicSpline1D() = default;

  /// knots: size n+1 with knots.front()=0 and knots.back()=period;
  /// values: size n (value at the last knot equals values[0]).
  static PeriodicSpline1D fit(std::vector<double> knots, std::vector<double> values);

  double period() const { return knots_.empty() ? 0.0 : knots_.back(); }
  double value(double t) const;
  double derivative(double t) const;
  double second_derivative(double t) const;

 private:
  int locate(double& t) const;  // wraps t into [0, period), returns segment

  std::vector<double> knots_;  // n+1
  std::vector<double> vals_;   // n+1 (wrapped)
  std::vector<double> m_;      // n+1 second derivatives (wrapped)
};

/// Periodic cubic spline through 2-D points, parameterized by cumulative
/// chord length.
class PeriodicSpline2D {
 public:
  PeriodicSpline2D() = default;

  /// points: closed-polygon vertices, closure implied (first point is not
  /// repeated at the end).
  static PeriodicSpline2D fit(const std::vector<Eigen::Vector2d>& points);

  double period() const { return x_.period(); }
  int segment_count() const { return static_cast<int>(knots_.size()) - 1; }
  double knot(int i) const { return knots_[static_cast<size_t>(i)]; }

  Eigen::Vector2d position(double t) const { return {x_.value(t), y_.value(t)}; }
  Eigen::Vector2d derivative(double t) const { return {x_.derivative(t), y_.derivative(t)}; }
  Eigen::Vector2d second_derivative(double t) const {
    return {x_.second_derivative(t), y_.second_derivative(t)};
  }
  double speed(double t) const { return derivative(t).norm(); }

 private:
  PeriodicSpline1D x_, y_;
  std::vector<double> knots_;
};

/// Solves a cyclically tridiagonal system (Thomas + Sherman-Morrison).
/// diag/sub/sup have size n; sub[i] couples row i with i-1 (sub[0] is the
/// corner term row 0 / col n-1), sup[i] couples row i with i+1 (sup[n-1] is
/// the corner term row n-1 / col 0).
std::vector<double> solve_cyclic_tridiagonal(const std::vector<double>& sub,
                                             const std::vector<double>& diag,
                                             const std::vector<double>& sup,
                                             const std::vector<double>& rhs);

}  // namespace vpmpcc
