#include "vpmpcc/planner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "vpmpcc/error.hpp"

namespace vpmpcc {

const char* plan_status_name(PlanStatus s) {
  switch (s) {
    case PlanStatus::Converged: return "Converged";
    case PlanStatus::MaxIter: return "MaxIter";
    case PlanStatus::Infeasible: return "Infeasible";
    case PlanStatus::SolverFailure: return "SolverFailure";
  }
  return "?";
}

void PlannerParams::validate() const {
  if (np < 2) throw Error(ErrorCode::InvalidArgument, "horizon must be >= 2");
  if (q_v < 0 || gamma < 0 || q_e_con < 0 || q_e_lag < 0 || q_dv < 0 || q_ddelta < 0 ||
      q_dvp < 0) {
    throw Error(ErrorCode::InvalidArgument, "weights must be >= 0");
  }
  if (!(xi > 0.0 && xi < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "xi must lie in (0,1)");
  }
}

std::pair<double, double> tracking_errors(const Eigen::Vector2d& p, double s,
                                          const TrackModel& track) {
  const TrackFrame f = track.frame_at(s);
  const Eigen::Vector2d r = p - f.point;
  return {f.normal.dot(r), f.tangent.dot(r)};
}

double vp_cost(const std::vector<double>& velocities, const std::vector<double>& s_list,
               const ReferenceVelocityProfile& rvp, double q_v, double v_delta_max) {
  if (velocities.size() != s_list.size()) {
    throw Error(ErrorCode::LengthMismatch, "velocities and s_list must have equal length");
  }
  if (q_v == 0.0) return 0.0;
  double sum = 0.0;
  for (size_t k = 0; k < velocities.size(); ++k) {
    const double dv = velocities[k] - rvp.value(s_list[k]);
    sum += dv * dv;
  }
  return q_v / v_delta_max * sum;
}

double mpcc_cost(const HorizonPlan& plan, const TrackModel& track, const PlannerParams& params,
                 const PlannerConstants& constants, const Control& u_prev) {
  const size_t np = plan.controls.size();
  if (np == 0 || plan.states.size() != np + 1) {
    throw Error(ErrorCode::DimensionMismatch, "plan needs N_p controls and N_p+1 states");
  }
  const double wc = 1.0 / (constants.e_con_max * constants.e_con_max);
  const double wl = 1.0 / (constants.e_lag_max * constants.e_lag_max);
  double cost = 0.0;
  for (size_t k = 1; k <= np; ++k) {
    const Control& u = plan.controls[k - 1];
    const KinState& z = plan.states[k];
    cost += -params.gamma * u.vp / constants.v_max() * constants.ts;
    const auto [e_con, e_lag] = tracking_errors(z.position(), z.s, track);
    cost += params.q_e_con * wc * e_con * e_con + params.q_e_lag * wl * e_lag * e_lag;
    const Control& prev = (k == 1) ? u_prev : plan.controls[k - 2];
    const double dv = u.v - prev.v;
    const double dd = u.delta - prev.delta;
    const double dp = u.vp - prev.vp;
    cost += params.q_dv * dv * dv + params.q_ddelta * dd * dd + params.q_dvp * dp * dp;
  }
  return cost;
}

// ---------------------------------------------------------------------------
// Planner

namespace {

// decision layout per stage k (0-based): [v_k, delta_k, vp_k, x_{k+1}, y_{k+1},
// phi_{k+1}, s_{k+1}]; the current state is a constant, not a variable.
constexpr int kStage = 7;

struct StageRef {
  int u;  // first control index
  int z;  // first state index (of the successor state)
};

inline StageRef stage(int k) { return {kStage * k, kStage * k + 3}; }

}  // namespace

Planner::Planner(const TrackModel& track, PlannerParams params, PlannerConstants constants)
    : track_(track), params_(std::move(params)), constants_(std::move(constants)) {
  params_.validate();
  if (params_.q_v > 0.0 && !track_.has_rvp()) {
    throw Error(ErrorCode::InvalidArgument, "velocity prediction needs an RVP on the track");
  }
}

double Planner::corridor_bound(double s) const {
  return params_.xi * 2.0 * track_.half_width(s);
}

NlpProblem Planner::transcribe(const KinState& current, const Control& u_prev) const {
  const int np = params_.np;
  const int n = kStage * np;
  const int m = 4 * np;
  const double ts = constants_.ts;
  const double L = constants_.wheelbase;

  NlpProblem prob;
  prob.n = n;
  prob.m = m;
  prob.band = 10;
  prob.lower = Eigen::VectorXd::Constant(n, -std::numeric_limits<double>::infinity());
  prob.upper = Eigen::VectorXd::Constant(n, std::numeric_limits<double>::infinity());
  for (int k = 0; k < np; ++k) {
    const StageRef st = stage(k);
    prob.lower[st.u + 0] = constants_.u_min.v;
    prob.lower[st.u + 1] = constants_.u_min.delta;
    prob.lower[st.u + 2] = constants_.u_min.vp;
    prob.upper[st.u + 0] = constants_.u_max.v;
    prob.upper[st.u + 1] = constants_.u_max.delta;
    prob.upper[st.u + 2] = constants_.u_max.vp;
  }

  const PlannerParams par = params_;
  const PlannerConstants con = constants_;
  const TrackModel& track = track_;
  const bool use_vp = par.q_v > 0.0;

  prob.objective = [&track, par, con, u_prev, np, ts, use_vp](const Eigen::VectorXd& x,
                                                              Eigen::VectorXd* grad) {
    const double wc = 2.0 * par.q_e_con / (con.e_con_max * con.e_con_max);
    const double wl = 2.0 * par.q_e_lag / (con.e_lag_max * con.e_lag_max);
    const double wv = 2.0 * par.q_v / con.v_delta_max;
    const double wcor = 2.0 * con.corridor_weight;
    const double prog = par.gamma * ts / con.v_max();
    double cost = 0.0;
    if (grad) grad->setZero();

    for (int k = 0; k < np; ++k) {
      const StageRef st = stage(k);
      const double v = x[st.u + 0];
      const double vp = x[st.u + 2];
      const double px = x[st.z + 0];
      const double py = x[st.z + 1];
      const double s = x[st.z + 3];

      cost += -prog * vp;
      if (grad) (*grad)[st.u + 2] += -prog;

      const TrackFrame f = track.frame_at(s);
      const Eigen::Vector2d r(px - f.point.x(), py - f.point.y());
      const double e_con = f.normal.dot(r);
      const double e_lag = f.tangent.dot(r);
      // Frenet relations give the s-derivatives of the errors
      const double de_con_ds = -f.curvature * e_lag;
      const double de_lag_ds = f.curvature * e_con - 1.0;

      cost += 0.5 * wc * e_con * e_con + 0.5 * wl * e_lag * e_lag;
      if (grad) {
        (*grad)[st.z + 0] += wc * e_con * f.normal.x() + wl * e_lag * f.tangent.x();
        (*grad)[st.z + 1] += wc * e_con * f.normal.y() + wl * e_lag * f.tangent.y();
        (*grad)[st.z + 3] += wc * e_con * de_con_ds + wl * e_lag * de_lag_ds;
      }

      if (use_vp) {
        const double ref = track.rvp().smooth_value(s);
        const double dv = v - ref;
        cost += 0.5 * wv * dv * dv;
        if (grad) {
          const double slope = track.rvp().smooth_slope(s);
          (*grad)[st.u + 0] += wv * dv;
          (*grad)[st.z + 3] += wv * dv * (-slope);
        }
      }

      const double bound = par.xi * 2.0 * track.half_width(s);
      const double excess = std::abs(e_con) - bound;
      if (excess > 0.0) {
        cost += 0.5 * wcor * excess * excess;
        if (grad) {
          const double sign = (e_con >= 0.0) ? 1.0 : -1.0;
          const double db_ds = par.xi * 2.0 * track.half_width_slope(s);
          (*grad)[st.z + 0] += wcor * excess * sign * f.normal.x();
          (*grad)[st.z + 1] += wcor * excess * sign * f.normal.y();
          (*grad)[st.z + 3] += wcor * excess * (sign * de_con_ds - db_ds);
        }
      }

      const double pv = (k == 0) ? u_prev.v : x[st.u - kStage + 0];
      const double pd = (k == 0) ? u_prev.delta : x[st.u - kStage + 1];
      const double pp = (k == 0) ? u_prev.vp : x[st.u - kStage + 2];
      const double dv = x[st.u + 0] - pv;
      const double dd = x[st.u + 1] - pd;
      const double dp = x[st.u + 2] - pp;
      cost += par.q_dv * dv * dv + par.q_ddelta * dd * dd + par.q_dvp * dp * dp;
      if (grad) {
        (*grad)[st.u + 0] += 2.0 * par.q_dv * dv;
        (*grad)[st.u + 1] += 2.0 * par.q_ddelta * dd;
        (*grad)[st.u + 2] += 2.0 * par.q_dvp * dp;
        if (k > 0) {
          (*grad)[st.u - kStage + 0] -= 2.0 * par.q_dv * dv;
          (*grad)[st.u - kStage + 1] -= 2.0 * par.q_ddelta * dd;
          (*grad)[st.u - kStage + 2] -= 2.0 * par.q_dvp * dp;
        }
      }
    }
    return cost;
  };

  const KinState z0 = current;
  prob.equalities = [&track, z0, np, ts, L](const Eigen::VectorXd& x, Eigen::VectorXd& res,
                                            std::vector<Entry>* jac) {
    if (jac) jac->clear();
    for (int k = 0; k < np; ++k) {
      const StageRef st = stage(k);
      KinState zk;
      int zk_idx = -1;
      if (k == 0) {
        zk = z0;
      } else {
        zk_idx = stage(k - 1).z;
        zk.x = x[zk_idx + 0];
        zk.y = x[zk_idx + 1];
        zk.phi = x[zk_idx + 2];
        zk.s = x[zk_idx + 3];
      }
      Control u{x[st.u + 0], x[st.u + 1], x[st.u + 2]};
      const KinState pred = kin_euler_step(zk, u, ts, L);
      const int row = 4 * k;
      res[row + 0] = x[st.z + 0] - pred.x;
      res[row + 1] = x[st.z + 1] - pred.y;
      res[row + 2] = x[st.z + 2] - pred.phi;
      res[row + 3] = x[st.z + 3] - pred.s;

      if (jac) {
        const double cphi = std::cos(zk.phi);
        const double sphi = std::sin(zk.phi);
        const double tand = std::tan(u.delta);
        const double sec2 = 1.0 + tand * tand;
        // row 0: x
        if (zk_idx >= 0) {
          jac->push_back({row + 0, zk_idx + 0, -1.0});
          jac->push_back({row + 0, zk_idx + 2, ts * sphi * u.v});
        }
        jac->push_back({row + 0, st.u + 0, -ts * cphi});
        jac->push_back({row + 0, st.z + 0, 1.0});
        // row 1: y
        if (zk_idx >= 0) {
          jac->push_back({row + 1, zk_idx + 1, -1.0});
          jac->push_back({row + 1, zk_idx + 2, -ts * cphi * u.v});
        }
        jac->push_back({row + 1, st.u + 0, -ts * sphi});
        jac->push_back({row + 1, st.z + 1, 1.0});
        // row 2: phi
        if (zk_idx >= 0) jac->push_back({row + 2, zk_idx + 2, -1.0});
        jac->push_back({row + 2, st.u + 0, -ts * tand / L});
        jac->push_back({row + 2, st.u + 1, -ts * u.v * sec2 / L});
        jac->push_back({row + 2, st.z + 2, 1.0});
        // row 3: s
        if (zk_idx >= 0) jac->push_back({row + 3, zk_idx + 3, -1.0});
        jac->push_back({row + 3, st.u + 2, -ts});
        jac->push_back({row + 3, st.z + 3, 1.0});
      }
    }
  };

  prob.x0 = initial_guess(current, u_prev, std::nullopt);

  prob.hessian = [&track, par, con, np, ts, use_vp](const Eigen::VectorXd& x,
                                                    std::vector<Entry>& h) {
    h.clear();
    const double wc = 2.0 * par.q_e_con / (con.e_con_max * con.e_con_max);
    const double wl = 2.0 * par.q_e_lag / (con.e_lag_max * con.e_lag_max);
    const double wv = 2.0 * par.q_v / con.v_delta_max;
    const double wcor = 2.0 * con.corridor_weight;

    auto rank1 = [&h](const int idx[], const double g[], int len, double w) {
      for (int a = 0; a < len; ++a) {
        for (int b = 0; b <= a; ++b) {
          if (g[a] == 0.0 || g[b] == 0.0) continue;
          int i = idx[a], j = idx[b];
          double v = w * g[a] * g[b];
          if (i < j) std::swap(i, j);
          h.push_back({i, j, v});
        }
      }
    };

    for (int k = 0; k < np; ++k) {
      const StageRef st = stage(k);
      const double v = x[st.u + 0];
      const double px = x[st.z + 0];
      const double py = x[st.z + 1];
      const double s = x[st.z + 3];

      const TrackFrame f = track.frame_at(s);
      const Eigen::Vector2d r(px - f.point.x(), py - f.point.y());
      const double e_con = f.normal.dot(r);
      const double e_lag = f.tangent.dot(r);
      const double de_con_ds = -f.curvature * e_lag;
      const double de_lag_ds = f.curvature * e_con - 1.0;

      {
        const int idx[3] = {st.z + 0, st.z + 1, st.z + 3};
        const double gc[3] = {f.normal.x(), f.normal.y(), de_con_ds};
        const double gl[3] = {f.tangent.x(), f.tangent.y(), de_lag_ds};
        rank1(idx, gc, 3, wc);
        rank1(idx, gl, 3, wl);
      }

      if (use_vp) {
        const double slope = track.rvp().smooth_slope(s);
        const int idx[2] = {st.u + 0, st.z + 3};
        const double gv[2] = {1.0, -slope};
        rank1(idx, gv, 2, wv);
        (void)v;
      }

      const double bound = par.xi * 2.0 * track.half_width(s);
      if (std::abs(e_con) - bound > 0.0) {
        const double sign = (e_con >= 0.0) ? 1.0 : -1.0;
        const double db_ds = par.xi * 2.0 * track.half_width_slope(s);
        const int idx[3] = {st.z + 0, st.z + 1, st.z + 3};
        const double gh[3] = {sign * f.normal.x(), sign * f.normal.y(),
                              sign * de_con_ds - db_ds};
        rank1(idx, gh, 3, wcor);
      }

      // control-rate curvature (exact)
      const double w[3] = {2.0 * par.q_dv, 2.0 * par.q_ddelta, 2.0 * par.q_dvp};
      for (int c = 0; c < 3; ++c) {
        h.push_back({st.u + c, st.u + c, w[c]});
        if (k > 0) {
          h.push_back({st.u - kStage + c, st.u - kStage + c, w[c]});
          h.push_back({st.u + c, st.u - kStage + c, -w[c]});
        }
      }
    }
    (void)ts;
  };

  return prob;
}

Eigen::VectorXd Planner::initial_guess(const KinState& current, const Control& u_prev,
                                       const std::optional<HorizonPlan>& warm) const {
  const int np = params_.np;
  Eigen::VectorXd x(kStage * np);

  std::vector<Control> controls(static_cast<size_t>(np));
  if (warm && static_cast<int>(warm->controls.size()) == np) {
    for (int k = 0; k < np; ++k) {
      controls[static_cast<size_t>(k)] =
          warm->controls[static_cast<size_t>(std::min(k + 1, np - 1))];
    }
  } else {
    // constant-velocity rollout along the reference line with curvature
    // feedforward steering
    const double v0 = 1.0;
    double s = current.s;
    for (int k = 0; k < np; ++k) {
      const double kappa = track_.frame_at(s).curvature;
      controls[static_cast<size_t>(k)] =
          Control{v0, std::clamp(std::atan(constants_.wheelbase * kappa), constants_.u_min.delta,
                                 constants_.u_max.delta),
                  v0};
      s += constants_.ts * v0;
    }
    (void)u_prev;
  }

  KinState z = current;
  for (int k = 0; k < np; ++k) {
    const StageRef st = stage(k);
    const Control& u = controls[static_cast<size_t>(k)];
    x[st.u + 0] = u.v;
    x[st.u + 1] = u.delta;
    x[st.u + 2] = u.vp;
    z = kin_euler_step(z, u, constants_.ts, constants_.wheelbase);
    x[st.z + 0] = z.x;
    x[st.z + 1] = z.y;
    x[st.z + 2] = z.phi;
    x[st.z + 3] = z.s;
  }
  return x;
}

HorizonPlan Planner::extract_plan(const KinState& current, const Eigen::VectorXd& x,
                                  const Control& u_prev, const NlpSolution& sol) const {
  const int np = params_.np;
  HorizonPlan plan;
  plan.controls.resize(static_cast<size_t>(np));
  plan.states.resize(static_cast<size_t>(np) + 1);
  plan.states[0] = current;
  for (int k = 0; k < np; ++k) {
    const StageRef st = stage(k);
    plan.controls[static_cast<size_t>(k)] = Control{x[st.u + 0], x[st.u + 1], x[st.u + 2]};
    // states are the exact Euler rollout of the controls, so every returned
    // plan satisfies the dynamics bit for bit
    plan.states[static_cast<size_t>(k) + 1] =
        kin_euler_step(plan.states[static_cast<size_t>(k)], plan.controls[static_cast<size_t>(k)],
                       constants_.ts, constants_.wheelbase);
  }

  std::vector<double> vels(static_cast<size_t>(np)), svals(static_cast<size_t>(np));
  for (int k = 0; k < np; ++k) {
    vels[static_cast<size_t>(k)] = plan.controls[static_cast<size_t>(k)].v;
    svals[static_cast<size_t>(k)] = plan.states[static_cast<size_t>(k) + 1].s;
  }
  plan.cost = mpcc_cost(plan, track_, params_, constants_, u_prev);
  if (params_.q_v > 0.0) {
    plan.cost += vp_cost(vels, svals, track_.rvp(), params_.q_v, constants_.v_delta_max);
  }

  double violation = 0.0;
  for (int k = 1; k <= np; ++k) {
    const KinState& z = plan.states[static_cast<size_t>(k)];
    const auto [e_con, e_lag] = tracking_errors(z.position(), z.s, track_);
    violation = std::max(violation, std::abs(e_con) - corridor_bound(z.s));
  }
  plan.corridor_violation = std::max(0.0, violation);
  plan.iterations = sol.iterations;
  plan.solve_ms = sol.wall_ms;
  return plan;
}

HorizonPlan Planner::build_and_solve(const KinState& current, const Control& u_prev,
                                     const std::optional<HorizonPlan>& warm_start) {
  if (!std::isfinite(current.x) || !std::isfinite(current.y) || !std::isfinite(current.phi) ||
      !std::isfinite(current.s)) {
    throw Error(ErrorCode::InvalidArgument, "current state must be finite");
  }
  const auto t0 = std::chrono::steady_clock::now();

  NlpProblem prob = transcribe(current, u_prev);
  const std::optional<HorizonPlan>& warm = warm_start ? warm_start : last_plan_;
  prob.x0 = initial_guess(current, u_prev, warm);

  SolveOptions opt;
  opt.max_iter = warm ? constants_.max_sqp_iter : std::max(120, 4 * constants_.max_sqp_iter);
  opt.tol_stationarity = 1e-6;
  opt.tol_feasibility = 1e-8;
  // the penalty must dominate the cost scale so Gauss-Newton curvature stays
  // representative near the dynamics manifold
  opt.rho_init = 1e4;
  if (multipliers_.size() != prob.m) multipliers_ = Eigen::VectorXd::Zero(prob.m);
  opt.multipliers = &multipliers_;

  NlpSolution sol;
  bool failed = false;
  if (inject_failure_) {
    failed = true;
    sol.x = prob.x0;
    sol.status = NlpStatus::LineSearchFail;
  } else {
    try {
      sol = solve(prob, opt);
    } catch (const Error&) {
      failed = true;
      sol.x = prob.x0;
      sol.status = NlpStatus::LineSearchFail;
    }
  }

  HorizonPlan plan = extract_plan(current, sol.x, u_prev, sol);
  plan.solve_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();

  const auto [e_con0, e_lag0] = tracking_errors(current.position(), current.s, track_);
  const bool outside = std::abs(e_con0) > corridor_bound(current.s) + 1e-9;

  if (failed || sol.status == NlpStatus::LineSearchFail ||
      (sol.status == NlpStatus::MaxIter && sol.eq_residual_norm > 1e-3)) {
    // an iterate far from the dynamics manifold cannot be trusted as a plan
    plan.status = PlanStatus::SolverFailure;
  } else if (outside) {
    plan.status = PlanStatus::Infeasible;
  } else if (sol.status == NlpStatus::Converged) {
    plan.status = PlanStatus::Converged;
  } else {
    plan.status = PlanStatus::MaxIter;
  }
  return plan;
}

std::pair<Control, HorizonPlan> Planner::receding_step(const KinState& current,
                                                       const Control& u_prev) {
  HorizonPlan plan = build_and_solve(current, u_prev,
                                     warm_start_enabled_ ? last_plan_ : std::nullopt);
  if (plan.status == PlanStatus::SolverFailure) {
    // safe fallback: hold steering, decay the commanded speeds
    Control fallback{0.8 * u_prev.v, u_prev.delta, 0.8 * u_prev.vp};
    last_plan_.reset();
    multipliers_.setZero();
    return {fallback, plan};
  }
  last_plan_ = plan;
  return {plan.controls.front(), plan};
}

void Planner::reset() {
  last_plan_.reset();
  multipliers_.resize(0);
}

}  // namespace vpmpcc
