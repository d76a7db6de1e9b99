#include "vpmpcc/track.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "vpmpcc/csv.hpp"
#include "vpmpcc/error.hpp"

namespace vpmpcc {

namespace {

double wrap_into(double v, double period) {
  double w = v - period * std::floor(v / period);
  if (w >= period) w -= period;  // guard against w == period from rounding
  return w;
}

double simpson(double a, double b, double fa, double fm, double fb) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

template <typename F>
double adaptive_simpson_impl(const F& f, double a, double b, double fa, double fm, double fb,
                             double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = simpson(a, m, fa, flm, fm);
  const double right = simpson(m, b, fm, frm, fb);
  if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * tol) {
    return left + right + (left + right - whole) / 15.0;
  }
  return adaptive_simpson_impl(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adaptive_simpson_impl(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

template <typename F>
double adaptive_simpson(const F& f, double a, double b, double tol) {
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  const double whole = simpson(a, b, fa, fm, fb);
  return adaptive_simpson_impl(f, a, b, fa, fm, fb, whole, tol, 24);
}

bool segments_intersect(const Eigen::Vector2d& p1, const Eigen::Vector2d& p2,
                        const Eigen::Vector2d& q1, const Eigen::Vector2d& q2) {
  auto cross = [](const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
    return a.x() * b.y() - a.y() * b.x();
  };
  const Eigen::Vector2d r = p2 - p1, s = q2 - q1;
  const double denom = cross(r, s);
  const Eigen::Vector2d qp = q1 - p1;
  if (std::abs(denom) < 1e-15) return false;  // parallel; treated as non-crossing
  const double t = cross(qp, s) / denom;
  const double u = cross(qp, r) / denom;
  const double eps = 1e-12;
  return t > eps && t < 1.0 - eps && u > eps && u < 1.0 - eps;
}

double hermite(double u, double p0, double m0, double p1, double m1, double dx) {
  const double u2 = u * u, u3 = u2 * u;
  return (2.0 * u3 - 3.0 * u2 + 1.0) * p0 + (u3 - 2.0 * u2 + u) * dx * m0 +
         (-2.0 * u3 + 3.0 * u2) * p1 + (u3 - u2) * dx * m1;
}

}  // namespace

// ---------------------------------------------------------------------------
// ReferenceVelocityProfile

ReferenceVelocityProfile::ReferenceVelocityProfile(std::vector<double> s, std::vector<double> v,
                                                   double period)
    : s_(std::move(s)), v_(std::move(v)), period_(period) {
  if (s_.size() != v_.size() || s_.size() < 2) {
    throw Error(ErrorCode::InvalidArgument, "RVP needs matching s/v samples (>= 2)");
  }
  for (size_t i = 0; i < s_.size(); ++i) {
    if (v_[i] <= 0.0) throw Error(ErrorCode::InvalidArgument, "RVP velocities must be > 0");
    if (i > 0 && s_[i] <= s_[i - 1]) {
      throw Error(ErrorCode::InvalidArgument, "RVP s samples must be strictly increasing");
    }
  }
  if (s_.front() < 0.0 || s_.back() >= period_) {
    throw Error(ErrorCode::InvalidArgument, "RVP s samples must lie in [0, period)");
  }
  if (s_.size() >= 3) {
    std::vector<double> knots(s_.begin(), s_.end());
    knots.push_back(s_.front() + period_);
    smooth_ = PeriodicSpline1D::fit(std::move(knots), v_);
  }
}

double ReferenceVelocityProfile::value(double s) const {
  const double offset = s_.front();
  double u = wrap_into(s - offset, period_);
  // segment i spans [s_i, s_{i+1}); the final segment wraps to s_0 + period
  auto it = std::upper_bound(s_.begin(), s_.end(), u + offset);
  size_t i = static_cast<size_t>(it - s_.begin());
  i = (i == 0) ? s_.size() - 1 : i - 1;
  const double s0 = s_[i] - offset;
  const double s1 = (i + 1 < s_.size()) ? s_[i + 1] - offset : period_;
  const double v0 = v_[i];
  const double v1 = (i + 1 < s_.size()) ? v_[i + 1] : v_[0];
  const double w = (u - s0) / (s1 - s0);
  return v0 + w * (v1 - v0);
}

double ReferenceVelocityProfile::smooth_value(double s) const {
  if (s_.size() < 3) return value(s);  // too few samples for a spline
  return smooth_.value(s - s_.front());
}

double ReferenceVelocityProfile::smooth_slope(double s) const {
  if (s_.size() < 3) {
    const double h = 1e-5 * period_;
    return (value(s + h) - value(s - h)) / (2.0 * h);
  }
  return smooth_.derivative(s - s_.front());
}

// ---------------------------------------------------------------------------
// TrackModel

TrackModel TrackModel::build(const std::vector<Eigen::Vector2d>& centerline,
                             const std::vector<double>& half_widths,
                             double fallback_half_width) {
  if (centerline.size() < 4) {
    throw Error(ErrorCode::TooFewPoints,
                "need >= 4 centerline points, got " + std::to_string(centerline.size()));
  }
  if (!half_widths.empty() && half_widths.size() != centerline.size()) {
    throw Error(ErrorCode::InvalidArgument, "one half-width per centerline point expected");
  }
  for (double w : half_widths) {
    if (w <= 0.0) throw Error(ErrorCode::InvalidArgument, "half widths must be > 0");
  }
  if (fallback_half_width <= 0.0) {
    throw Error(ErrorCode::InvalidArgument, "half width must be > 0");
  }

  const size_t n = centerline.size();
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = i + 1; j < n; ++j) {
      if ((centerline[i] - centerline[j]).norm() < 1e-9) {
        throw Error(ErrorCode::DuplicatePoints,
                    "points " + std::to_string(i) + " and " + std::to_string(j) + " coincide");
      }
    }
  }
  for (size_t i = 0; i < n; ++i) {
    const Eigen::Vector2d& a1 = centerline[i];
    const Eigen::Vector2d& a2 = centerline[(i + 1) % n];
    for (size_t j = i + 1; j < n; ++j) {
      if (j == i || (j + 1) % n == i || (i + 1) % n == j) continue;  // adjacent share a vertex
      const Eigen::Vector2d& b1 = centerline[j];
      const Eigen::Vector2d& b2 = centerline[(j + 1) % n];
      if (segments_intersect(a1, a2, b1, b2)) {
        throw Error(ErrorCode::SelfIntersecting, "centerline segments " + std::to_string(i) +
                                                     " and " + std::to_string(j) + " cross");
      }
    }
  }

  TrackModel track;
  track.spline_ = PeriodicSpline2D::fit(centerline);
  track.const_width_ = fallback_half_width;
  if (!half_widths.empty()) {
    track.widths_ = half_widths;
    track.widths_.push_back(half_widths[0]);
  }

  const int segs = track.spline_.segment_count();
  auto speed = [&](double t) { return track.spline_.speed(t); };
  track.knot_s_.assign(static_cast<size_t>(segs) + 1, 0.0);
  for (int i = 0; i < segs; ++i) {
    const double a = track.spline_.knot(i);
    const double b = track.spline_.knot(i + 1);
    const double len = adaptive_simpson(speed, a, b, std::max(1e-13, 1e-10 * (b - a)));
    track.knot_s_[static_cast<size_t>(i) + 1] = track.knot_s_[static_cast<size_t>(i)] + len;
  }
  track.total_length_ = track.knot_s_.back();

  // Uniform arc-length lookup, refined until the parameterization is
  // uniform to 1e-3 (it lands far below that in practice).
  int lut_n = std::max(1024, 4 * segs);
  for (int attempt = 0; attempt < 4; ++attempt) {
    track.lut_s_.assign(static_cast<size_t>(lut_n) + 1, 0.0);
    track.lut_t_.assign(static_cast<size_t>(lut_n) + 1, 0.0);
    track.lut_dtds_.assign(static_cast<size_t>(lut_n) + 1, 0.0);
    const double ds = track.total_length_ / lut_n;
    int seg = 0;
    double seg_start_t = track.spline_.knot(0);
    double seg_start_s = 0.0;
    for (int i = 0; i <= lut_n; ++i) {
      const double target = std::min(static_cast<double>(i) * ds, track.total_length_);
      while (seg + 1 < segs && target > track.knot_s_[static_cast<size_t>(seg) + 1]) {
        ++seg;
        seg_start_t = track.spline_.knot(seg);
        seg_start_s = track.knot_s_[static_cast<size_t>(seg)];
      }
      const double t_hi = track.spline_.knot(seg + 1);
      // Newton on local arc length from the segment start
      double local = target - seg_start_s;
      double t = seg_start_t + local / std::max(speed(seg_start_t), 1e-12);
      t = std::clamp(t, seg_start_t, t_hi);
      for (int it = 0; it < 8; ++it) {
        const double arc = adaptive_simpson(speed, seg_start_t, t, 1e-13);
        const double err = arc - local;
        const double sp = std::max(speed(t), 1e-12);
        const double step = err / sp;
        t = std::clamp(t - step, seg_start_t, t_hi);
        if (std::abs(step) < 1e-13) break;
      }
      track.lut_s_[static_cast<size_t>(i)] = target;
      track.lut_t_[static_cast<size_t>(i)] = t;
      track.lut_dtds_[static_cast<size_t>(i)] = 1.0 / std::max(speed(t), 1e-12);
    }
    track.lut_t_.back() = track.spline_.period();

    // verify uniformity by finite differences
    double worst = 0.0;
    const double h = 1e-4 * track.total_length_;
    for (int i = 0; i < 64; ++i) {
      const double s = (i + 0.37) / 64.0 * track.total_length_;
      const Eigen::Vector2d p1 = track.position_at(s + h);
      const Eigen::Vector2d p0 = track.position_at(s - h);
      worst = std::max(worst, std::abs((p1 - p0).norm() / (2.0 * h) - 1.0));
    }
    if (worst <= 1e-3) break;
    lut_n *= 2;
  }

  return track;
}

double TrackModel::wrap(double s) const { return wrap_into(s, total_length_); }

double TrackModel::param_at(double s) const {
  const double sw = wrap(s);
  const double ds = total_length_ / static_cast<double>(lut_s_.size() - 1);
  size_t i = std::min(static_cast<size_t>(sw / ds), lut_s_.size() - 2);
  const double u = (sw - lut_s_[i]) / ds;
  return hermite(u, lut_t_[i], lut_dtds_[i], lut_t_[i + 1], lut_dtds_[i + 1], ds);
}

Eigen::Vector2d TrackModel::position_at(double s) const {
  return spline_.position(param_at(s));
}

TrackFrame TrackModel::frame_at(double s) const {
  const double t = param_at(s);
  const Eigen::Vector2d d1 = spline_.derivative(t);
  const Eigen::Vector2d d2 = spline_.second_derivative(t);
  const double sp = d1.norm();
  TrackFrame f;
  f.point = spline_.position(t);
  f.tangent = d1 / sp;
  f.normal = Eigen::Vector2d(-f.tangent.y(), f.tangent.x());
  f.curvature = (d1.x() * d2.y() - d1.y() * d2.x()) / (sp * sp * sp);
  return f;
}

double TrackModel::half_width(double s) const {
  if (widths_.empty()) return const_width_;
  const double sw = wrap(s);
  auto it = std::upper_bound(knot_s_.begin(), knot_s_.end(), sw);
  size_t i = static_cast<size_t>(it - knot_s_.begin());
  i = (i == 0) ? 0 : i - 1;
  i = std::min(i, knot_s_.size() - 2);
  const double w = (sw - knot_s_[i]) / (knot_s_[i + 1] - knot_s_[i]);
  return widths_[i] + w * (widths_[i + 1] - widths_[i]);
}

double TrackModel::half_width_slope(double s) const {
  if (widths_.empty()) return 0.0;
  const double sw = wrap(s);
  auto it = std::upper_bound(knot_s_.begin(), knot_s_.end(), sw);
  size_t i = static_cast<size_t>(it - knot_s_.begin());
  i = (i == 0) ? 0 : i - 1;
  i = std::min(i, knot_s_.size() - 2);
  return (widths_[i + 1] - widths_[i]) / (knot_s_[i + 1] - knot_s_[i]);
}

Projection TrackModel::refine(const Eigen::Vector2d& p, double s0, double lo, double hi) const {
  double s = s0;
  for (int it = 0; it < 30; ++it) {
    const TrackFrame f = frame_at(s);
    const Eigen::Vector2d r = p - f.point;
    const double g = r.dot(f.tangent);
    const double e_con = r.dot(f.normal);
    const double gp = f.curvature * e_con - 1.0;
    if (std::abs(gp) < 1e-12) break;
    double step = g / gp;
    step = std::clamp(step, -0.2, 0.2);  // grid spacing bounds the basin
    s = std::clamp(s - step, lo, hi);
    if (std::abs(step) < 1e-13) break;
  }
  const TrackFrame f = frame_at(s);
  Projection out;
  out.s = wrap(s);
  out.distance = (p - f.point).dot(f.normal);
  return out;
}

Projection TrackModel::project(const Eigen::Vector2d& p, std::optional<double> hint) const {
  constexpr double kGrid = 0.05;
  constexpr double kWindow = 5.0;

  double lo, hi;
  if (hint) {
    lo = *hint - kWindow;
    hi = *hint + kWindow;
  } else {
    lo = 0.0;
    hi = total_length_;
  }
  const int count = std::max(8, static_cast<int>(std::ceil((hi - lo) / kGrid)));
  std::vector<double> dist2(static_cast<size_t>(count));
  std::vector<double> svals(static_cast<size_t>(count));
  for (int i = 0; i < count; ++i) {
    const double s = lo + (hi - lo) * (static_cast<double>(i) / count);
    svals[static_cast<size_t>(i)] = s;
    dist2[static_cast<size_t>(i)] = (p - position_at(s)).squaredNorm();
  }

  const bool cyclic = !hint;
  std::vector<int> candidates;
  for (int i = 0; i < count; ++i) {
    const double prev = dist2[static_cast<size_t>((i + count - 1) % count)];
    const double next = dist2[static_cast<size_t>((i + 1) % count)];
    const double cur = dist2[static_cast<size_t>(i)];
    bool is_min = cur <= prev && cur <= next;
    if (!cyclic && (i == 0 || i == count - 1)) {
      is_min = (i == 0) ? cur <= next : cur <= prev;
    }
    if (is_min) candidates.push_back(i);
  }
  std::sort(candidates.begin(), candidates.end(),
            [&](int a, int b) { return dist2[static_cast<size_t>(a)] < dist2[static_cast<size_t>(b)]; });
  if (candidates.size() > 16) candidates.resize(16);

  Projection best;
  double best_abs = std::numeric_limits<double>::infinity();
  Projection second;
  double second_abs = std::numeric_limits<double>::infinity();
  const double rlo = hint ? lo : -total_length_;  // let Newton roam across the seam
  const double rhi = hint ? hi : 2.0 * total_length_;
  for (int idx : candidates) {
    Projection cand = refine(p, svals[static_cast<size_t>(idx)], rlo, rhi);
    const double a = std::abs(cand.distance);
    const bool same_as_best =
        std::isfinite(best_abs) &&
        std::abs(wrap(cand.s - best.s + 0.5 * total_length_) - 0.5 * total_length_) < 1e-4;
    if (same_as_best) continue;
    if (a < best_abs) {
      second = best;
      second_abs = best_abs;
      best = cand;
      best_abs = a;
    } else if (a < second_abs) {
      second = cand;
      second_abs = a;
    }
  }
  if (std::isfinite(second_abs) && std::abs(best_abs - second_abs) < 1e-9) {
    if (second.s < best.s) best = second;
    best.ambiguous = true;
  }
  return best;
}

// ---------------------------------------------------------------------------
// RVP generation

ReferenceVelocityProfile generate_rvp(const TrackModel& track, double v_cap, double a_lat_max,
                                      double a_long_max, double a_brake_max) {
  if (v_cap <= 0.0 || a_lat_max <= 0.0 || a_long_max <= 0.0 || a_brake_max <= 0.0) {
    throw Error(ErrorCode::NonPositiveLimit, "all RVP limits must be > 0");
  }
  const int n = 2048;
  const double ds = track.length() / n;
  std::vector<double> s(static_cast<size_t>(n)), v2(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    s[static_cast<size_t>(i)] = i * ds;
    const double kappa = std::abs(track.frame_at(s[static_cast<size_t>(i)]).curvature);
    const double v_curv = std::min(v_cap, std::sqrt(a_lat_max / std::max(kappa, 1e-12)));
    v2[static_cast<size_t>(i)] = v_curv * v_curv;
  }

  for (int pass = 0; pass < 100; ++pass) {
    bool changed = false;
    for (int i = 0; i < 2 * n; ++i) {  // two wraps settle the seam
      const int j = i % n, jn = (i + 1) % n;
      const double cand = v2[static_cast<size_t>(j)] + 2.0 * a_long_max * ds;
      if (v2[static_cast<size_t>(jn)] > cand + 1e-14) {
        v2[static_cast<size_t>(jn)] = cand;
        changed = true;
      }
    }
    for (int i = 2 * n; i-- > 0;) {
      const int j = i % n, jn = (i + 1) % n;
      const double cand = v2[static_cast<size_t>(jn)] + 2.0 * a_brake_max * ds;
      if (v2[static_cast<size_t>(j)] > cand + 1e-14) {
        v2[static_cast<size_t>(j)] = cand;
        changed = true;
      }
    }
    if (!changed) break;
  }

  std::vector<double> v(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) v[static_cast<size_t>(i)] = std::sqrt(v2[static_cast<size_t>(i)]);
  return ReferenceVelocityProfile(std::move(s), std::move(v), track.length());
}

// ---------------------------------------------------------------------------
// File IO

TrackModel load_track_file(const std::string& path, double fallback_half_width) {
  CsvTable table = read_csv(path);
  const int cx = table.column("x_m");
  const int cy = table.column("y_m");
  if (cx < 0 || cy < 0) {
    throw Error(ErrorCode::ParseError, path + ": expected columns x_m,y_m");
  }
  const int cl = table.column("w_tr_left_m");
  const int cr = table.column("w_tr_right_m");
  if ((cl >= 0) != (cr >= 0)) {
    throw Error(ErrorCode::ParseError, path + ": width columns must come in pairs");
  }

  std::vector<Eigen::Vector2d> points;
  std::vector<double> widths;
  for (const auto& row : table.rows) {
    points.emplace_back(row[static_cast<size_t>(cx)], row[static_cast<size_t>(cy)]);
    if (cl >= 0) {
      widths.push_back(std::min(row[static_cast<size_t>(cl)], row[static_cast<size_t>(cr)]));
    }
  }
  if (points.size() >= 2 && (points.front() - points.back()).norm() < 1e-9) {
    points.pop_back();
    if (!widths.empty()) widths.pop_back();
  }
  return TrackModel::build(points, widths, fallback_half_width);
}

TrackModel load_raceline(const std::string& path, double fallback_half_width) {
  CsvTable table = read_csv(path);
  const int cs = table.column("s_m");
  const int cx = table.column("x_m");
  const int cy = table.column("y_m");
  const int cv = table.column("v_mps");
  if (cs < 0 || cx < 0 || cy < 0 || cv < 0) {
    throw Error(ErrorCode::ParseError, path + ": expected columns s_m,x_m,y_m,v_mps");
  }
  if (table.rows.size() < 4) {
    throw Error(ErrorCode::TooFewPoints, path + ": need >= 4 raceline points");
  }
  for (size_t i = 1; i < table.rows.size(); ++i) {
    if (table.rows[i][static_cast<size_t>(cs)] <= table.rows[i - 1][static_cast<size_t>(cs)]) {
      throw Error(ErrorCode::ParseError, path + ": s_m column must be strictly increasing");
    }
  }

  std::vector<Eigen::Vector2d> points;
  std::vector<double> vels;
  for (const auto& row : table.rows) {
    points.emplace_back(row[static_cast<size_t>(cx)], row[static_cast<size_t>(cy)]);
    vels.push_back(row[static_cast<size_t>(cv)]);
  }
  if ((points.front() - points.back()).norm() < 1e-9) {
    points.pop_back();
    vels.pop_back();
  } else if ((points.front() - points.back()).norm() > 0.5) {
    throw Error(ErrorCode::NonClosedRaceline,
                path + ": endpoints are " + std::to_string((points.front() - points.back()).norm()) +
                    " m apart");
  }

  TrackModel track = TrackModel::build(points, {}, fallback_half_width);
  std::vector<double> rvp_s(points.size());
  for (size_t i = 0; i < points.size(); ++i) {
    rvp_s[i] = track.control_point_s(static_cast<int>(i));
  }
  track.attach_rvp(ReferenceVelocityProfile(std::move(rvp_s), std::move(vels), track.length()));
  return track;
}

// ---------------------------------------------------------------------------
// Bundled synthetic circuit

Centerline sharp_corner_centerline(double corner_radius, double half_width) {
  const double r = corner_radius;
  const double long_straight = 20.0;
  // close the loop at ~62.8 m total
  const double target = 62.8;
  const double short_straight = 0.5 * (target - 2.0 * long_straight - 2.0 * std::numbers::pi * r);

  const double x0 = -0.5 * long_straight, x1 = 0.5 * long_straight;
  const double y0 = 0.0, y1 = short_straight + 2.0 * r;
  // corner centers
  const Eigen::Vector2d c_br(x1, y0 + r), c_tr(x1, y1 - r), c_tl(x0, y1 - r), c_bl(x0, y0 + r);

  Centerline line;
  auto add_straight = [&](const Eigen::Vector2d& a, const Eigen::Vector2d& b, double spacing) {
    const double len = (b - a).norm();
    const int steps = std::max(2, static_cast<int>(std::round(len / spacing)));
    for (int i = 0; i < steps; ++i) {
      line.points.push_back(a + (b - a) * (static_cast<double>(i) / steps));
    }
  };
  auto add_arc = [&](const Eigen::Vector2d& center, double a0, double a1, double spacing) {
    const double len = std::abs(a1 - a0) * r;
    const int steps = std::max(4, static_cast<int>(std::round(len / spacing)));
    for (int i = 0; i < steps; ++i) {
      const double a = a0 + (a1 - a0) * (static_cast<double>(i) / steps);
      line.points.push_back(center + r * Eigen::Vector2d(std::cos(a), std::sin(a)));
    }
  };

  const double pi = std::numbers::pi;
  add_straight({x0, y0}, {x1, y0}, 0.5);
  add_arc(c_br, -0.5 * pi, 0.0, 0.2);
  add_straight({x1 + r, y0 + r}, {x1 + r, y1 - r}, 0.5);
  add_arc(c_tr, 0.0, 0.5 * pi, 0.2);
  add_straight({x1, y1}, {x0, y1}, 0.5);
  add_arc(c_tl, 0.5 * pi, pi, 0.2);
  add_straight({x0 - r, y1 - r}, {x0 - r, y0 + r}, 0.5);
  add_arc(c_bl, pi, 1.5 * pi, 0.2);

  line.half_widths.assign(line.points.size(), half_width);
  return line;
}

}  // namespace vpmpcc
