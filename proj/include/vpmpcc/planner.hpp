#pragma once

#include <optional>
#include <vector>

#include "vpmpcc/solver.hpp"
#include "vpmpcc/track.hpp"
#include "vpmpcc/vehicle.hpp"

namespace vpmpcc {

/// The nine tunable entries of the parameter vector, after horizon
/// conversion (N_p = floor(theta_1 * D_ref)).
struct PlannerParams {
  int np = 20;          // prediction horizon >= 2
  double q_v = 5.0;     // velocity-prediction weight
  double gamma = 3.0;   // projected-velocity weight
  double q_e_con = 3.0; // contouring-error weight
  double q_e_lag = 3.0; // lag-error weight
  double q_dv = 1.0;    // control-rate weights
  double q_ddelta = 5.0;
  double q_dvp = 1.0;
  double xi = 0.3;      // track-width scale in (0,1)

  void validate() const;
};

struct PlannerConstants {
  double ts = 0.1;   // s
  double wheelbase = 0.32;  // m
  Control u_min{-15.0, -0.4, -15.0};
  Control u_max{15.0, 0.4, 15.0};
  double e_con_max = 0.5;  // m, error normalizers
  double e_lag_max = 0.5;  // m
  double v_delta_max = 10.0;  // m/s, velocity-matching normalizer
  double corridor_weight = 1e4;  // soft-corridor quadratic penalty
  int max_sqp_iter = 30;         // real-time iteration cap per receding step

  /// Progress normalizer of the contouring cost; fixed to the v component
  /// of u_max.
  double v_max() const { return u_max.v; }
};

enum class PlanStatus { Converged, MaxIter, Infeasible, SolverFailure };

const char* plan_status_name(PlanStatus s);

struct HorizonPlan {
  std::vector<KinState> states;   // N_p + 1, states[0] = current state
  std::vector<Control> controls;  // N_p
  double cost = 0.0;              // vp_cost + mpcc_cost of this plan
  PlanStatus status = PlanStatus::SolverFailure;
  int iterations = 0;
  double solve_ms = 0.0;
  double corridor_violation = 0.0;  // max corridor exceedance over the horizon, m
};

/// Contouring and lag errors of position p against the frame at arc
/// position s: e_con = n . (p - tau), e_lag = t . (p - tau).
std::pair<double, double> tracking_errors(const Eigen::Vector2d& p, double s,
                                          const TrackModel& track);

/// Velocity-prediction cost (q_v / v_delta_max) * sum_k (v_k - rvp(s_k))^2.
/// Sequences must have equal length; throws LengthMismatch otherwise.
double vp_cost(const std::vector<double>& velocities, const std::vector<double>& s_list,
               const ReferenceVelocityProfile& rvp, double q_v, double v_delta_max);

/// Contouring cost of a plan: per stage k = 1..N_p the progress reward
/// -gamma * vp_k / v_max * Ts, the normalized tracking error quadratic, and
/// the control-rate term anchored at u_prev.
double mpcc_cost(const HorizonPlan& plan, const TrackModel& track, const PlannerParams& params,
                 const PlannerConstants& constants, const Control& u_prev);

/// Receding-horizon VPMPCC planner. Owns warm-start state (previous plan and
/// multipliers); one instance per rollout.
class Planner {
 public:
  Planner(const TrackModel& track, PlannerParams params, PlannerConstants constants);

  /// Transcribes and solves the horizon problem from the current state.
  /// Always returns a dynamically feasible plan (states are the exact Euler
  /// rollout of the controls). status reports solver quality; Infeasible
  /// flags a start outside the corridor.
  HorizonPlan build_and_solve(const KinState& current, const Control& u_prev,
                              const std::optional<HorizonPlan>& warm_start = std::nullopt);

  /// Solves from the retained warm start, applies the first control, and
  /// keeps the plan for the next call. On solver failure returns a fallback
  /// control (previous steering, commanded speed decayed by 20%).
  std::pair<Control, HorizonPlan> receding_step(const KinState& current, const Control& u_prev);

  void reset();
  void set_warm_start_enabled(bool enabled) { warm_start_enabled_ = enabled; }

  /// Test hook: makes the next solves report SolverFailure so the fallback
  /// path can be exercised.
  void inject_solver_failure(bool enabled) { inject_failure_ = enabled; }

  const PlannerParams& params() const { return params_; }
  const PlannerConstants& constants() const { return constants_; }
  double corridor_bound(double s) const;  // xi * full local width

  /// Builds the raw NLP transcription (exposed for derivative checks).
  NlpProblem transcribe(const KinState& current, const Control& u_prev) const;

 private:
  HorizonPlan extract_plan(const KinState& current, const Eigen::VectorXd& x,
                           const Control& u_prev, const NlpSolution& sol) const;
  Eigen::VectorXd initial_guess(const KinState& current, const Control& u_prev,
                                const std::optional<HorizonPlan>& warm) const;

  const TrackModel& track_;
  PlannerParams params_;
  PlannerConstants constants_;
  std::optional<HorizonPlan> last_plan_;
  Eigen::VectorXd multipliers_;
  bool warm_start_enabled_ = true;
  bool inject_failure_ = false;
};

}  // namespace vpmpcc
