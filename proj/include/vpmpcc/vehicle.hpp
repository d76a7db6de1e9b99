#pragma once

#include <Eigen/Core>

namespace vpmpcc {

/// Planner state: pose plus track progress.
struct KinState {
  double x = 0.0;    // m
  double y = 0.0;    // m
  double phi = 0.0;  // rad
  double s = 0.0;    // m, progress along the reference line

  Eigen::Vector2d position() const { return {x, y}; }
};

/// Control vector: commanded longitudinal velocity, steering angle, and the
/// projected velocity driving the progress state.
struct Control {
  double v = 0.0;    // m/s
  double delta = 0.0;  // rad
  double vp = 0.0;   // m/s
};

/// Simulator state of the dynamic bicycle. Carries the steering actuator
/// angle so the rate limiter has a state to act on.
struct DynState {
  double x = 0.0;      // m
  double y = 0.0;      // m
  double phi = 0.0;    // rad
  double vx = 0.0;     // m/s, body longitudinal
  double vy = 0.0;     // m/s, body lateral
  double omega = 0.0;  // rad/s
  double delta = 0.0;  // rad, actuated steering angle

  Eigen::Vector2d position() const { return {x, y}; }
};

struct DynParams {
  double mass = 3.5;          // kg
  double inertia_z = 0.06;    // kg m^2
  double lf = 0.15;           // m, CoG to front axle
  double lr = 0.17;           // m, CoG to rear axle
  double cf = 55.0;           // N/rad, front cornering stiffness
  double cr = 60.0;           // N/rad, rear cornering stiffness
  double kv = 3.0;            // 1/s, speed-command tracking gain
  double a_max = 6.0;         // m/s^2, longitudinal acceleration saturation
  double steer_rate = 4.0;    // rad/s actuator rate limit
  double v_blend = 0.5;       // m/s, below this the model degrades to kinematic

  double wheelbase() const { return lf + lr; }
};

/// Continuous-time kinematic bicycle with progress state:
/// (cos(phi) v, sin(phi) v, v tan(delta)/L, vp).
/// Throws SteeringOutOfRange at |delta| >= pi/2.
KinState kin_derivative(const KinState& z, const Control& u, double wheelbase);

/// One explicit Euler step z + Ts * f(z, u). The arithmetic matches the
/// NLP dynamics constraint term for term, so rollouts reproduce solver
/// residuals bit for bit.
KinState kin_euler_step(const KinState& z, const Control& u, double ts, double wheelbase);

/// One RK4 step of the linear-tire dynamic bicycle. Longitudinal force
/// tracks the commanded speed (a = kv (v_cmd - vx), saturated at a_max);
/// steering slews toward u.delta at the rate limit; below v_blend the
/// lateral dynamics blend continuously into kinematic relations.
DynState dyn_step(const DynState& state, const Control& u, const DynParams& p, double dt);

}  // namespace vpmpcc
