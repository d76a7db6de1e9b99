#include "vpmpcc/vehicle.hpp"

#include <cmath>
#include <numbers>

#include "vpmpcc/error.hpp"

namespace vpmpcc {

KinState kin_derivative(const KinState& z, const Control& u, double wheelbase) {
  if (wheelbase <= 0.0) throw Error(ErrorCode::InvalidArgument, "wheelbase must be > 0");
  if (std::abs(u.delta) >= 0.5 * std::numbers::pi) {
    throw Error(ErrorCode::SteeringOutOfRange, "|delta| must stay below pi/2");
  }
  KinState d;
  d.x = std::cos(z.phi) * u.v;
  d.y = std::sin(z.phi) * u.v;
  d.phi = u.v * std::tan(u.delta) / wheelbase;
  d.s = u.vp;
  return d;
}

KinState kin_euler_step(const KinState& z, const Control& u, double ts, double wheelbase) {
  if (ts <= 0.0) throw Error(ErrorCode::InvalidArgument, "Ts must be > 0");
  const KinState d = kin_derivative(z, u, wheelbase);
  KinState next;
  next.x = z.x + ts * d.x;
  next.y = z.y + ts * d.y;
  next.phi = z.phi + ts * d.phi;
  next.s = z.s + ts * d.s;
  return next;
}

namespace {

struct DynDerivative {
  double x, y, phi, vx, vy, omega, delta;
};

DynDerivative dyn_derivative(const DynState& st, const Control& u, const DynParams& p) {
  const double L = p.wheelbase();

  // longitudinal: speed-command tracking, saturated
  double ax = p.kv * (u.v - st.vx);
  ax = std::clamp(ax, -p.a_max, p.a_max);

  // steering actuator slews toward the command at the rate limit
  const double steer_gain = 50.0;
  double ddelta = std::clamp(steer_gain * (u.delta - st.delta), -p.steer_rate, p.steer_rate);

  // linear-tire lateral dynamics, regularized at low speed
  const double vx_eff = std::max(st.vx, 0.3 * p.v_blend);
  const double alpha_f = st.delta - std::atan2(st.vy + p.lf * st.omega, vx_eff);
  const double alpha_r = -std::atan2(st.vy - p.lr * st.omega, vx_eff);
  const double fyf = p.cf * alpha_f;
  const double fyr = p.cr * alpha_r;
  const double cos_d = std::cos(st.delta);
  const double sin_d = std::sin(st.delta);

  DynDerivative dyn;
  dyn.vx = ax - fyf * sin_d / p.mass + st.vy * st.omega;
  dyn.vy = (fyf * cos_d + fyr) / p.mass - st.vx * st.omega;
  dyn.omega = (p.lf * fyf * cos_d - p.lr * fyr) / p.inertia_z;

  // kinematic relations for the lateral states; first-order relaxation makes
  // them usable as derivatives
  const double t_relax = 0.05;
  const double omega_kin = st.vx * std::tan(st.delta) / L;
  DynDerivative kin;
  kin.vx = ax;
  kin.vy = (0.0 - st.vy) / t_relax;
  kin.omega = (omega_kin - st.omega) / t_relax;

  const double lam = std::clamp(st.vx / p.v_blend, 0.0, 1.0);
  DynDerivative d;
  d.x = st.vx * std::cos(st.phi) - st.vy * std::sin(st.phi);
  d.y = st.vx * std::sin(st.phi) + st.vy * std::cos(st.phi);
  d.phi = st.omega;
  d.vx = lam * dyn.vx + (1.0 - lam) * kin.vx;
  d.vy = lam * dyn.vy + (1.0 - lam) * kin.vy;
  d.omega = lam * dyn.omega + (1.0 - lam) * kin.omega;
  d.delta = ddelta;
  return d;
}

DynState advance(const DynState& st, const DynDerivative& d, double h) {
  DynState out;
  out.x = st.x + h * d.x;
  out.y = st.y + h * d.y;
  out.phi = st.phi + h * d.phi;
  out.vx = st.vx + h * d.vx;
  out.vy = st.vy + h * d.vy;
  out.omega = st.omega + h * d.omega;
  out.delta = st.delta + h * d.delta;
  return out;
}

}  // namespace

DynState dyn_step(const DynState& state, const Control& u, const DynParams& p, double dt) {
  if (dt <= 0.0) throw Error(ErrorCode::InvalidArgument, "dt must be > 0");
  const DynDerivative k1 = dyn_derivative(state, u, p);
  const DynDerivative k2 = dyn_derivative(advance(state, k1, 0.5 * dt), u, p);
  const DynDerivative k3 = dyn_derivative(advance(state, k2, 0.5 * dt), u, p);
  const DynDerivative k4 = dyn_derivative(advance(state, k3, dt), u, p);
  DynState out = state;
  out.x += dt / 6.0 * (k1.x + 2.0 * k2.x + 2.0 * k3.x + k4.x);
  out.y += dt / 6.0 * (k1.y + 2.0 * k2.y + 2.0 * k3.y + k4.y);
  out.phi += dt / 6.0 * (k1.phi + 2.0 * k2.phi + 2.0 * k3.phi + k4.phi);
  out.vx += dt / 6.0 * (k1.vx + 2.0 * k2.vx + 2.0 * k3.vx + k4.vx);
  out.vy += dt / 6.0 * (k1.vy + 2.0 * k2.vy + 2.0 * k3.vy + k4.vy);
  out.omega += dt / 6.0 * (k1.omega + 2.0 * k2.omega + 2.0 * k3.omega + k4.omega);
  out.delta += dt / 6.0 * (k1.delta + 2.0 * k2.delta + 2.0 * k3.delta + k4.delta);
  return out;
}

}  // namespace vpmpcc
