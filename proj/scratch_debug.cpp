#include <cstdio>

#include "vpmpcc/config.hpp"
#include "vpmpcc/simloop.hpp"
#include "vpmpcc/tuner.hpp"

using namespace vpmpcc;

int main(int argc, char** argv) {
  ExperimentConfig cfg = ExperimentConfig::defaults();
  TrackModel track = build_track_from_config(cfg);

  Eigen::VectorXd theta(9);
  theta << 0.32, 20.0, 1.5, 5.0, 5.0, 2.0, 15.0, 3.0, 0.2;
  if (argc > 9) {
    for (int i = 0; i < 9; ++i) theta[i] = std::atof(argv[i + 1]);
  }
  const PlannerParams params = theta_to_params(theta, track.length(), false);

  Planner planner(track, params, cfg.mpc);
  const TrackFrame f0 = track.frame_at(0.0);
  DynState st;
  st.x = f0.point.x();
  st.y = f0.point.y();
  st.phi = std::atan2(f0.tangent.y(), f0.tangent.x());
  st.vx = 1.0;
  Control u_prev{1.0, 0.0, 1.0};

  Projection proj = track.project(st.position(), 0.0);
  for (int step = 0; step < 15; ++step) {
    KinState z{st.x, st.y, st.phi, proj.s};
    auto [u, plan] = planner.receding_step(z, u_prev);
    std::printf(
        "step %2d: s=%6.3f d=%+.3f vx=%.2f | status=%s iters=%d cost=%.3f corr_viol=%.4f | "
        "u=(v %.2f, d %+.3f, vp %.2f)\n",
        step, proj.s, proj.distance, st.vx, plan_status_name(plan.status), plan.iterations,
        plan.cost, plan.corridor_violation, u.v, u.delta, u.vp);
    for (int i = 0; i < 10; ++i) st = dyn_step(st, u, cfg.vehicle, cfg.mpc.ts / 10.0);
    u_prev = u;
    proj = track.project(st.position(), proj.s);
  }
  return 0;
}
