#include <cstdio>

#include "vpmpcc/config.hpp"
#include "vpmpcc/simloop.hpp"
#include "vpmpcc/tuner.hpp"

using namespace vpmpcc;

int main(int argc, char** argv) {
  ExperimentConfig cfg = ExperimentConfig::defaults();
  TrackModel track = build_track_from_config(cfg);
  std::printf("D_ref = %.3f\n", track.length());

  Eigen::VectorXd theta(9);
  // np_frac, q_v, gamma, q_e_con, q_e_lag, q_dv, q_ddelta, q_dvp, xi
  theta << 0.32, 5.0, 4.0, 4.0, 4.0, 1.0, 10.0, 2.0, 0.3;
  if (argc > 9) {
    for (int i = 0; i < 9; ++i) theta[i] = std::atof(argv[i + 1]);
  }
  const bool mpcc = argc > 10 && std::string(argv[10]) == "mpcc";
  const PlannerParams params = theta_to_params(theta, track.length(), mpcc);
  std::printf("np=%d q_v=%.2f gamma=%.2f qec=%.2f qel=%.2f qdv=%.2f qdd=%.2f qdvp=%.2f xi=%.3f\n",
              params.np, params.q_v, params.gamma, params.q_e_con, params.q_e_lag, params.q_dv,
              params.q_ddelta, params.q_dvp, params.xi);

  SimOptions sim = cfg.sim;
  sim.d_ub = cfg.ofr.d_ub;
  sim.d_lb_length = cfg.ofr.d_lb_length;

  const LapObservation obs = run_lap(track, params, cfg.mpc, cfg.vehicle, sim, 1);
  std::printf("verdict=%s t_lap=%.3f len=%.2f max|d|=%.3f steps=%zu mean_solve=%.3f ms fallback=%d\n",
              verdict_name(obs.verdict), obs.t_lap, obs.traj_length, obs.max_abs_d,
              obs.log.size(), obs.mean_solve_ms, obs.fallback_used ? 1 : 0);

  // velocity trace summary
  double vmax = 0.0, vsum = 0.0;
  for (const auto& l : obs.log) {
    vmax = std::max(vmax, l.v);
    vsum += l.v;
  }
  if (!obs.log.empty()) {
    std::printf("v: mean %.2f max %.2f | mean vp (D/T) %.3f\n", vsum / obs.log.size(), vmax,
                obs.t_lap > 0 ? track.length() / obs.t_lap : 0.0);
  }

  OfrConfig ofr = cfg.ofr;
  ofr.d_ref = track.length();
  ofr.variant = ObjectiveVariant::Ofr;
  std::printf("OFR J = %.4f\n", objective(obs, ofr));
  return 0;
}
