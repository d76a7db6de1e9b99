#include "vpmpcc/simloop.hpp"

#include <cmath>
#include <fstream>

#include "vpmpcc/csv.hpp"
#include "vpmpcc/error.hpp"

namespace vpmpcc {

const char* verdict_name(Verdict v) {
  switch (v) {
    case Verdict::Qualified: return "Qualified";
    case Verdict::Teleport: return "Teleport";
    case Verdict::TooShort: return "TooShort";
    case Verdict::Crashed: return "Crashed";
    case Verdict::Timeout: return "Timeout";
  }
  return "?";
}

Verdict qualify(const LapObservation& obs, double d_ub, double d_lb) {
  if (obs.verdict == Verdict::Crashed || obs.verdict == Verdict::Timeout) return obs.verdict;
  for (size_t i = 0; i + 1 < obs.points.size(); ++i) {
    if ((obs.points[i + 1] - obs.points[i]).norm() >= d_ub) return Verdict::Teleport;
  }
  if (obs.traj_length < d_lb) return Verdict::TooShort;
  return Verdict::Qualified;
}

namespace {

double wrap_half(double ds, double period) {
  while (ds > 0.5 * period) ds -= period;
  while (ds < -0.5 * period) ds += period;
  return ds;
}

void finish(LapObservation& obs, const SimOptions& opt) {
  obs.traj_length = 0.0;
  for (size_t i = 0; i + 1 < obs.points.size(); ++i) {
    obs.traj_length += (obs.points[i + 1] - obs.points[i]).norm();
  }
  obs.max_abs_d = 0.0;
  for (double d : obs.d) obs.max_abs_d = std::max(obs.max_abs_d, std::abs(d));
  obs.verdict = qualify(obs, opt.d_ub, opt.d_lb_length);
  double total_ms = 0.0;
  for (const StepLog& l : obs.log) total_ms += l.solve_ms;
  obs.mean_solve_ms = obs.log.empty() ? 0.0 : total_ms / static_cast<double>(obs.log.size());
}

}  // namespace

LapObservation run_lap(const TrackModel& track, const PlannerParams& params,
                       const PlannerConstants& constants, const DynParams& dyn,
                       const SimOptions& options, std::uint64_t seed) {
  (void)seed;  // the loop is deterministic; the seed names the episode
  LapObservation obs;
  obs.verdict = Verdict::Timeout;

  const double d_ref = track.length();
  const int cap = static_cast<int>(options.timeout_factor * d_ref / constants.ts);

  const TrackFrame f0 = track.frame_at(0.0);
  DynState state;
  state.x = f0.point.x();
  state.y = f0.point.y();
  state.phi = std::atan2(f0.tangent.y(), f0.tangent.x());
  state.vx = options.start_speed;

  Planner planner(track, params, constants);
  Control u_prev{options.start_speed, 0.0, options.start_speed};

  Projection proj = track.project(state.position(), 0.0);
  obs.points.push_back(state.position());
  obs.d.push_back(proj.distance);

  double unwrapped = 0.0;
  double s_pred = proj.s;  // planner's prediction of the next arc position
  bool done = false;

  for (int step = 0; step < cap && !done; ++step) {
    const KinState zeta{state.x, state.y, state.phi, proj.s};
    auto [applied, plan] = planner.receding_step(zeta, u_prev);
    if (plan.status == PlanStatus::SolverFailure) obs.fallback_used = true;

    StepLog log;
    log.t = step * constants.ts;
    log.x = state.x;
    log.y = state.y;
    log.phi = state.phi;
    log.v = state.vx;
    log.delta = state.delta;
    log.vp = applied.vp;
    log.s = proj.s;
    const auto [e_con, e_lag] = tracking_errors(state.position(), s_pred, track);
    log.e_con = e_con;
    log.e_lag = e_lag;
    log.cost = plan.cost;
    log.solve_ms = plan.solve_ms;
    obs.log.push_back(log);

    s_pred = plan.states.size() > 1 ? track.wrap(plan.states[1].s) : proj.s;

    const double dt = constants.ts / options.substeps;
    for (int i = 0; i < options.substeps; ++i) state = dyn_step(state, applied, dyn, dt);
    u_prev = applied;

    const Projection next = track.project(state.position(), proj.s);
    const double ds = wrap_half(next.s - proj.s, d_ref);
    const double unwrapped_prev = unwrapped;
    unwrapped += ds;
    proj = next;

    if (unwrapped >= d_ref && ds > 0.0) {
      // interpolate the crossing inside this interval
      const double frac = (d_ref - unwrapped_prev) / ds;
      const Eigen::Vector2d p_prev = obs.points.back();
      const Eigen::Vector2d p_cross = p_prev + frac * (state.position() - p_prev);
      const Projection pc = track.project(p_cross, proj.s);
      obs.points.push_back(p_cross);
      obs.d.push_back(pc.distance);
      obs.t_lap = (step + frac) * constants.ts;
      obs.verdict = Verdict::Qualified;  // completion; the filter may demote it
      done = true;
      break;
    }

    obs.points.push_back(state.position());
    obs.d.push_back(next.distance);

    if (std::abs(next.distance) > track.half_width(next.s)) {
      obs.verdict = Verdict::Crashed;
      done = true;
      break;
    }
  }

  finish(obs, options);
  if (obs.verdict == Verdict::Qualified && obs.t_lap <= 0.0) obs.verdict = Verdict::Timeout;
  return obs;
}

LapObservation kinematic_only_lap(const TrackModel& track, const PlannerParams& params,
                                  const PlannerConstants& constants, const SimOptions& options,
                                  std::uint64_t seed) {
  (void)seed;
  LapObservation obs;
  obs.verdict = Verdict::Timeout;

  const double d_ref = track.length();
  const int cap = static_cast<int>(options.timeout_factor * d_ref / constants.ts);

  const TrackFrame f0 = track.frame_at(0.0);
  KinState state;
  state.x = f0.point.x();
  state.y = f0.point.y();
  state.phi = std::atan2(f0.tangent.y(), f0.tangent.x());
  state.s = 0.0;

  Planner planner(track, params, constants);
  Control u_prev{options.start_speed, 0.0, options.start_speed};

  Projection proj = track.project(state.position(), 0.0);
  obs.points.push_back(state.position());
  obs.d.push_back(proj.distance);

  bool done = false;
  for (int step = 0; step < cap && !done; ++step) {
    auto [applied, plan] = planner.receding_step(state, u_prev);
    if (plan.status == PlanStatus::SolverFailure) obs.fallback_used = true;

    StepLog log;
    log.t = step * constants.ts;
    log.x = state.x;
    log.y = state.y;
    log.phi = state.phi;
    log.v = applied.v;
    log.delta = applied.delta;
    log.vp = applied.vp;
    log.s = track.wrap(state.s);
    const auto [e_con, e_lag] = tracking_errors(state.position(), state.s, track);
    log.e_con = e_con;
    log.e_lag = e_lag;
    log.cost = plan.cost;
    log.solve_ms = plan.solve_ms;
    obs.log.push_back(log);

    const double s_prev = state.s;
    state = kin_euler_step(state, applied, constants.ts, constants.wheelbase);
    u_prev = applied;

    const Projection next = track.project(state.position(), track.wrap(state.s));
    if (state.s >= d_ref && state.s > s_prev) {
      const double frac = (d_ref - s_prev) / (state.s - s_prev);
      const Eigen::Vector2d p_prev = obs.points.back();
      const Eigen::Vector2d p_cross = p_prev + frac * (state.position() - p_prev);
      const Projection pc = track.project(p_cross, track.wrap(state.s));
      obs.points.push_back(p_cross);
      obs.d.push_back(pc.distance);
      obs.t_lap = (step + frac) * constants.ts;
      obs.verdict = Verdict::Qualified;
      done = true;
      break;
    }

    obs.points.push_back(state.position());
    obs.d.push_back(next.distance);

    if (std::abs(next.distance) > track.half_width(next.s)) {
      obs.verdict = Verdict::Crashed;
      done = true;
      break;
    }
  }

  finish(obs, options);
  if (obs.verdict == Verdict::Qualified && obs.t_lap <= 0.0) obs.verdict = Verdict::Timeout;
  return obs;
}

void write_lap_log(const std::string& path, const LapObservation& obs, bool real_timing) {
  CsvTable table;
  table.header = {"t_s",  "x_m",     "y_m", "phi_rad", "v_mps", "delta_rad",
                  "vp_mps", "s_m", "e_con_m", "e_lag_m", "cost", "solve_ms"};
  for (const StepLog& l : obs.log) {
    table.rows.push_back({l.t, l.x, l.y, l.phi, l.v, l.delta, l.vp, l.s, l.e_con, l.e_lag, l.cost,
                          real_timing ? l.solve_ms : 0.0});
  }
  write_csv(path, table);
}

}  // namespace vpmpcc
