#include "vpmpcc/spline.hpp"

#include <algorithm>
#include <cmath>

#include "vpmpcc/error.hpp"

namespace vpmpcc {

namespace {

// Thomas algorithm, no pivoting (systems here are diagonally dominant).
std::vector<double> solve_tridiagonal(const std::vector<double>& sub,
                                      const std::vector<double>& diag,
                                      const std::vector<double>& sup,
                                      const std::vector<double>& rhs) {
  const size_t n = diag.size();
  std::vector<double> c(n), d(n), x(n);
  c[0] = sup[0] / diag[0];
  d[0] = rhs[0] / diag[0];
  for (size_t i = 1; i < n; ++i) {
    double denom = diag[i] - sub[i] * c[i - 1];
    c[i] = (i + 1 < n) ? sup[i] / denom : 0.0;
    d[i] = (rhs[i] - sub[i] * d[i - 1]) / denom;
  }
  x[n - 1] = d[n - 1];
  for (size_t i = n - 1; i-- > 0;) x[i] = d[i] - c[i] * x[i + 1];
  return x;
}

}  // namespace

std::vector<double> solve_cyclic_tridiagonal(const std::vector<double>& sub,
                                             const std::vector<double>& diag,
                                             const std::vector<double>& sup,
                                             const std::vector<double>& rhs) {
  const size_t n = diag.size();
  if (n == 1) return {rhs[0] / (diag[0] + sub[0] + sup[0])};
  if (n == 2) {
    // fully coupled 2x2 (corner terms add to the off-diagonals)
    double a = diag[0], b = sup[0] + sub[0];
    double c = sub[1] + sup[1], d = diag[1];
    double det = a * d - b * c;
    return {(rhs[0] * d - b * rhs[1]) / det, (a * rhs[1] - rhs[0] * c) / det};
  }

  const double corner_top = sub[0];      // A[0][n-1]
  const double corner_bot = sup[n - 1];  // A[n-1][0]
  const double gamma = -diag[0];

  std::vector<double> diag_mod = diag;
  diag_mod[0] -= gamma;
  diag_mod[n - 1] -= corner_top * corner_bot / gamma;

  std::vector<double> y = solve_tridiagonal(sub, diag_mod, sup, rhs);

  std::vector<double> u(n, 0.0);
  u[0] = gamma;
  u[n - 1] = corner_bot;
  std::vector<double> z = solve_tridiagonal(sub, diag_mod, sup, u);

  const double vy = y[0] + corner_top / gamma * y[n - 1];
  const double vz = z[0] + corner_top / gamma * z[n - 1];
  const double factor = vy / (1.0 + vz);
  std::vector<double> x(n);
  for (size_t i = 0; i < n; ++i) x[i] = y[i] - factor * z[i];
  return x;
}

PeriodicSpline1D PeriodicSpline1D::fit(std::vector<double> knots, std::vector<double> values) {
  const size_t n = values.size();
  if (knots.size() != n + 1 || n < 3) {
    throw Error(ErrorCode::InvalidArgument, "periodic spline needs >= 3 values and n+1 knots");
  }

  std::vector<double> h(n);
  for (size_t i = 0; i < n; ++i) h[i] = knots[i + 1] - knots[i];

  auto value_at = [&](size_t i) { return values[i % n]; };
  std::vector<double> sub(n), diag(n), sup(n), rhs(n);
  for (size_t i = 0; i < n; ++i) {
    const double h_prev = h[(i + n - 1) % n];
    const double h_cur = h[i];
    sub[i] = h_prev / 6.0;
    diag[i] = (h_prev + h_cur) / 3.0;
    sup[i] = h_cur / 6.0;
    rhs[i] = (value_at(i + 1) - value_at(i)) / h_cur -
             (value_at(i) - value_at(i + n - 1)) / h_prev;
  }

  std::vector<double> m = solve_cyclic_tridiagonal(sub, diag, sup, rhs);

  PeriodicSpline1D s;
  s.knots_ = std::move(knots);
  s.vals_ = std::move(values);
  s.vals_.push_back(s.vals_[0]);
  s.m_ = std::move(m);
  s.m_.push_back(s.m_[0]);
  return s;
}

int PeriodicSpline1D::locate(double& t) const {
  const double period = knots_.back();
  t -= period * std::floor(t / period);
  auto it = std::upper_bound(knots_.begin(), knots_.end(), t);
  int seg = static_cast<int>(it - knots_.begin()) - 1;
  seg = std::clamp(seg, 0, static_cast<int>(knots_.size()) - 2);
  return seg;
}

double PeriodicSpline1D::value(double t) const {
  const int i = locate(t);
  const double h = knots_[i + 1] - knots_[i];
  const double a = (knots_[i + 1] - t) / h;
  const double b = (t - knots_[i]) / h;
  return a * vals_[i] + b * vals_[i + 1] +
         ((a * a * a - a) * m_[i] + (b * b * b - b) * m_[i + 1]) * h * h / 6.0;
}

double PeriodicSpline1D::derivative(double t) const {
  const int i = locate(t);
  const double h = knots_[i + 1] - knots_[i];
  const double a = (knots_[i + 1] - t) / h;
  const double b = (t - knots_[i]) / h;
  return (vals_[i + 1] - vals_[i]) / h - (3.0 * a * a - 1.0) / 6.0 * h * m_[i] +
         (3.0 * b * b - 1.0) / 6.0 * h * m_[i + 1];
}

double PeriodicSpline1D::second_derivative(double t) const {
  const int i = locate(t);
  const double h = knots_[i + 1] - knots_[i];
  const double a = (knots_[i + 1] - t) / h;
  const double b = (t - knots_[i]) / h;
  return a * m_[i] + b * m_[i + 1];
}

PeriodicSpline2D PeriodicSpline2D::fit(const std::vector<Eigen::Vector2d>& points) {
  const size_t n = points.size();
  if (n < 3) throw Error(ErrorCode::TooFewPoints, "need >= 3 points for a closed spline");

  std::vector<double> knots(n + 1, 0.0);
  for (size_t i = 0; i < n; ++i) {
    const Eigen::Vector2d& a = points[i];
    const Eigen::Vector2d& b = points[(i + 1) % n];
    knots[i + 1] = knots[i] + (b - a).norm();
  }

  std::vector<double> xs(n), ys(n);
  for (size_t i = 0; i < n; ++i) {
    xs[i] = points[i].x();
    ys[i] = points[i].y();
  }

  PeriodicSpline2D s;
  s.x_ = PeriodicSpline1D::fit(knots, std::move(xs));
  s.y_ = PeriodicSpline1D::fit(knots, std::move(ys));
  s.knots_ = std::move(knots);
  return s;
}

}  // namespace vpmpcc
