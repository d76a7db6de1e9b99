#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vpmpcc/planner.hpp"
#include "vpmpcc/track.hpp"
#include "vpmpcc/vehicle.hpp"

namespace vpmpcc {

enum class Verdict { Qualified, Teleport, TooShort, Crashed, Timeout };

const char* verdict_name(Verdict v);

struct StepLog {
  double t = 0.0;
  double x = 0.0, y = 0.0, phi = 0.0;
  double v = 0.0;      // executed longitudinal speed
  double delta = 0.0;  // actuated steering
  double vp = 0.0;     // applied projected velocity command
  double s = 0.0;      // projected arc position
  double e_con = 0.0;  // tracking errors vs. the previous plan's prediction
  double e_lag = 0.0;
  double cost = 0.0;
  double solve_ms = 0.0;
};

/// Observation bundle of one episode: lap time, orthogonal distances, the
/// trajectory points, and the qualification verdict.
struct LapObservation {
  Verdict verdict = Verdict::Timeout;
  double t_lap = 0.0;                  // s, > 0 when Qualified
  std::vector<double> d;               // signed distances at every Ts
  std::vector<Eigen::Vector2d> points; // trajectory points at every Ts
  double traj_length = 0.0;            // m
  std::vector<StepLog> log;
  bool fallback_used = false;          // a solver failure triggered the safe fallback
  double mean_solve_ms = 0.0;
  double max_abs_d = 0.0;
};

struct SimOptions {
  int substeps = 10;            // dynamic substeps per planner interval
  double timeout_factor = 4.0;  // cap = factor * (D_ref / 1 m/s) / Ts steps
  double d_ub = 0.6;            // m, teleport threshold between samples
  double d_lb_length = 60.0;    // m, minimum qualified trajectory length
  double start_speed = 1.0;     // m/s, start protocol speed at s = 0
};

/// Applies the qualification filter to a finished observation: Crashed and
/// Timeout pass through; otherwise Teleport when any sample gap >= d_ub,
/// TooShort when the trajectory is shorter than d_lb, else Qualified.
Verdict qualify(const LapObservation& obs, double d_ub, double d_lb);

/// Closed-loop episode: plans with the kinematic model at period Ts,
/// integrates the dynamic model in substeps, terminates on lap completion
/// (unwrapped s >= D_ref, lap time interpolated across the crossing), wall
/// contact (|d| > local half-width), or the step cap.
LapObservation run_lap(const TrackModel& track, const PlannerParams& params,
                       const PlannerConstants& constants, const DynParams& dyn,
                       const SimOptions& options, std::uint64_t seed);

/// Ablation harness: the planner's own Euler dynamics integrate the applied
/// control, bypassing the dynamic model entirely.
LapObservation kinematic_only_lap(const TrackModel& track, const PlannerParams& params,
                                  const PlannerConstants& constants, const SimOptions& options,
                                  std::uint64_t seed);

/// Writes the per-step log (header t_s,x_m,y_m,phi_rad,v_mps,delta_rad,
/// vp_mps,s_m,e_con_m,e_lag_m,cost,solve_ms). With real_timing false the
/// solve_ms column is written as 0 so logs are byte-identical across runs.
void write_lap_log(const std::string& path, const LapObservation& obs, bool real_timing);

}  // namespace vpmpcc
