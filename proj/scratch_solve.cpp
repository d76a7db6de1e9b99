#include <cstdio>

#include "vpmpcc/config.hpp"
#include "vpmpcc/planner.hpp"
#include "vpmpcc/tuner.hpp"

using namespace vpmpcc;

int main() {
  ExperimentConfig cfg = ExperimentConfig::defaults();
  TrackModel track = build_track_from_config(cfg);

  Eigen::VectorXd theta(9);
  theta << 0.32, 20.0, 1.5, 5.0, 5.0, 2.0, 15.0, 3.0, 0.2;
  const PlannerParams params = theta_to_params(theta, track.length(), false);
  Planner planner(track, params, cfg.mpc);

  const TrackFrame f0 = track.frame_at(0.0);
  const KinState z0{f0.point.x(), f0.point.y(),
                    std::atan2(f0.tangent.y(), f0.tangent.x()), 0.0};
  const Control u_prev{1.0, 0.0, 1.0};

  NlpProblem prob = planner.transcribe(z0, u_prev);
  SolveOptions opt;
  opt.max_iter = 400;
  if (const char* r = getenv("RHO")) opt.rho_init = atof(r);
  opt.tol_feasibility = 1e-8;
  std::vector<IterRecord> trace;
  opt.trace = &trace;
  const NlpSolution sol = solve(prob, opt);
  std::printf("status=%s iters=%d f=%.6f viol=%.2e stat=%.2e\n", nlp_status_name(sol.status),
              sol.iterations, sol.objective, sol.eq_residual_norm, sol.stationarity);
  for (size_t i = 0; i < trace.size(); ++i) {
    if (i % 5 == 0 || i + 1 == trace.size()) {
      std::printf("  it %3d phase %d f=%.6f merit=%.6f viol=%.3e\n", trace[i].iteration,
                  trace[i].merit_phase, trace[i].objective, trace[i].merit,
                  trace[i].eq_violation);
    }
  }
  return 0;
}
// rho sweep entry
