#include <doctest.h>

#include <cmath>
#include <random>

#include "test_tracks.hpp"
#include "vpmpcc/error.hpp"
#include "vpmpcc/planner.hpp"

using namespace vpmpcc;
using vpmpcc::testing::make_circle_track;
using vpmpcc::testing::make_sharp_corner_track;
using vpmpcc::testing::make_stadium_track;

namespace {

TrackModel stadium_with_rvp(double v_const) {
  TrackModel track = make_stadium_track(30.0, 5.0);
  const int n = 64;
  std::vector<double> s(n), v(n, v_const);
  for (int i = 0; i < n; ++i) s[static_cast<size_t>(i)] = track.length() * i / n;
  track.attach_rvp(ReferenceVelocityProfile(std::move(s), std::move(v), track.length()));
  return track;
}

Eigen::VectorXd random_feasible_point(const NlpProblem& prob, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Eigen::VectorXd x = prob.x0;
  for (int i = 0; i < prob.n; ++i) {
    if (std::isfinite(prob.lower[i]) && std::isfinite(prob.upper[i])) {
      x[i] = prob.lower[i] + unit(rng) * (prob.upper[i] - prob.lower[i]);
    } else {
      x[i] += 0.5 * (unit(rng) - 0.5);
    }
  }
  return x;
}

}  // namespace

TEST_CASE("tracking_errors on a straight segment") {
  const TrackModel track = make_stadium_track(30.0, 5.0);
  // mid bottom straight, far enough from the arcs for the fit to be straight
  const auto [e_con, e_lag] = tracking_errors({14.5, 0.3}, 14.0, track);
  CHECK(e_con == doctest::Approx(0.3).epsilon(1e-4));
  CHECK(e_lag == doctest::Approx(0.5).epsilon(1e-4));

  const Eigen::Vector2d on_line = track.position_at(7.0);
  const auto [ec0, el0] = tracking_errors(on_line, 7.0, track);
  CHECK(std::abs(ec0) < 1e-12);
  CHECK(std::abs(el0) < 1e-12);
}

TEST_CASE("tracking errors decompose the distance") {
  const TrackModel tracks[] = {make_circle_track(10.0, 64), make_stadium_track(),
                               make_sharp_corner_track()};
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (const TrackModel& track : tracks) {
    for (int i = 0; i < 300; ++i) {
      const double s = unit(rng) * track.length();
      const TrackFrame f = track.frame_at(s);
      const Eigen::Vector2d p =
          f.point + (unit(rng) - 0.5) * 2.0 * f.normal + (unit(rng) - 0.5) * 2.0 * f.tangent;
      const auto [e_con, e_lag] = tracking_errors(p, s, track);
      const double d2 = (p - f.point).squaredNorm();
      CHECK(std::abs(e_con * e_con + e_lag * e_lag - d2) < 1e-9);
    }
  }
}

TEST_CASE("vp_cost") {
  ReferenceVelocityProfile rvp({0.0, 10.0}, {3.0, 5.0}, 20.0);

  SUBCASE("matching velocities cost nothing") {
    CHECK(vp_cost({3.0, 5.0}, {0.0, 10.0}, rvp, 4.0, 10.0) == doctest::Approx(0.0));
  }
  SUBCASE("worked example") {
    CHECK(vp_cost({3.0, 4.0}, {0.0, 10.0}, rvp, 1.0, 10.0) ==
          doctest::Approx(0.1).epsilon(1e-12));
  }
  SUBCASE("zero weight disables the term") {
    CHECK(vp_cost({9.0, 9.0}, {0.0, 10.0}, rvp, 0.0, 10.0) == 0.0);
  }
  SUBCASE("length mismatch throws") {
    CHECK_THROWS_AS(vp_cost({1.0}, {0.0, 1.0}, rvp, 1.0, 10.0), Error);
  }
}

TEST_CASE("mpcc_cost worked examples") {
  const TrackModel track = stadium_with_rvp(3.0);
  PlannerConstants con;

  // single-stage plan exactly on the line, constant controls
  auto on_line_plan = [&](double v, double vp) {
    HorizonPlan plan;
    const double s0 = 2.0;
    KinState z0{track.position_at(s0).x(), track.position_at(s0).y(), 0.0, s0};
    plan.states.push_back(z0);
    Control u{v, 0.0, vp};
    plan.states.push_back(kin_euler_step(z0, u, con.ts, con.wheelbase));
    plan.controls.push_back(u);
    return plan;
  };

  SUBCASE("all weights zero gives zero") {
    PlannerParams par;
    par.np = 1;
    par.gamma = 0.0;
    par.q_e_con = par.q_e_lag = 0.0;
    par.q_dv = par.q_ddelta = par.q_dvp = 0.0;
    const HorizonPlan plan = on_line_plan(2.0, 2.0);
    CHECK(mpcc_cost(plan, track, par, con, Control{1.0, 0.1, 1.0}) == doctest::Approx(0.0));
  }

  SUBCASE("progress term alone gives -Ts") {
    PlannerParams par;
    par.np = 1;
    par.gamma = 1.0;
    par.q_e_con = par.q_e_lag = 0.0;
    par.q_dv = par.q_ddelta = par.q_dvp = 0.0;
    // vp = v_max with a matching previous control removes every other term
    const double vmax = con.v_max();
    const HorizonPlan plan = on_line_plan(vmax, vmax);
    const double cost = mpcc_cost(plan, track, par, con, Control{vmax, 0.0, vmax});
    CHECK(cost == doctest::Approx(-con.ts).epsilon(1e-9));
  }

  SUBCASE("normalized contouring error contributes 1 at e_con_max") {
    PlannerParams par;
    par.np = 1;
    par.gamma = 0.0;
    par.q_e_con = 1.0;
    par.q_e_lag = 0.0;
    par.q_dv = par.q_ddelta = par.q_dvp = 0.0;
    HorizonPlan plan = on_line_plan(0.0, 0.0);
    const TrackFrame f = track.frame_at(plan.states[1].s);
    plan.states[1].x += con.e_con_max * f.normal.x();
    plan.states[1].y += con.e_con_max * f.normal.y();
    const double cost = mpcc_cost(plan, track, par, con, Control{0.0, 0.0, 0.0});
    CHECK(cost == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("transcription gradients agree with finite differences") {
  TrackModel track = make_sharp_corner_track();
  track.attach_rvp(generate_rvp(track, 6.0, 4.5, 3.5, 4.5));
  PlannerParams par;
  par.np = 8;
  par.q_v = 5.0;
  par.gamma = 3.0;
  PlannerConstants con;
  Planner planner(track, par, con);

  const KinState z0{track.position_at(1.0).x(), track.position_at(1.0).y() + 0.1, 0.05, 1.0};
  const Control u_prev{1.0, 0.05, 1.0};
  const NlpProblem prob = planner.transcribe(z0, u_prev);

  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 5; ++trial) {
    const Eigen::VectorXd x = random_feasible_point(prob, rng);
    CHECK(check_gradients(prob, x, 1e-6) < 1e-5);
    CHECK(check_jacobian(prob, x, 1e-6) < 1e-5);
  }
}

TEST_CASE("build_and_solve on the straight with a constant profile") {
  const double v_ref = 3.0;
  const TrackModel track = stadium_with_rvp(v_ref);
  PlannerConstants con;

  PlannerParams par;
  par.np = 20;
  par.q_v = 2.0;
  par.gamma = 6.0;
  par.q_e_con = 5.0;
  par.q_e_lag = 8.0;
  par.q_dv = 0.2;
  par.q_ddelta = 1.0;
  par.q_dvp = 0.2;
  par.xi = 0.35;

  Planner planner(track, par, con);
  const double s0 = 2.0;
  const Eigen::Vector2d p0 = track.position_at(s0);
  const KinState z0{p0.x(), p0.y(), 0.0, s0};
  const Control u_prev{v_ref, 0.0, v_ref};

  HorizonPlan plan = planner.build_and_solve(z0, u_prev);
  CHECK((plan.status == PlanStatus::Converged || plan.status == PlanStatus::MaxIter));

  for (size_t k = 1; k < plan.states.size(); ++k) {
    const auto [e_con, e_lag] =
        tracking_errors(plan.states[k].position(), plan.states[k].s, track);
    CHECK(std::abs(e_con) < 1e-3);
  }

  // interior stage velocities sit at the analytic stage optimum trading the
  // progress reward against velocity matching
  const double v_star =
      v_ref + par.gamma * con.ts * con.v_delta_max / (2.0 * par.q_v * con.v_max());
  const double v_mid = plan.controls[plan.controls.size() / 2].v;
  CHECK(std::abs(v_mid - v_star) / v_star < 0.01);
}

TEST_CASE("dominant q_v pins velocities to the profile") {
  const double v_ref = 3.0;
  const TrackModel track = stadium_with_rvp(v_ref);
  PlannerConstants con;

  PlannerParams par;
  par.np = 15;
  par.q_v = 50.0;
  par.gamma = 0.0;
  par.q_e_con = 3.0;
  par.q_e_lag = 3.0;
  par.q_dv = 0.05;
  par.q_ddelta = 0.5;
  par.q_dvp = 0.05;

  Planner planner(track, par, con);
  const double s0 = 3.0;
  const Eigen::Vector2d p0 = track.position_at(s0);
  const KinState z0{p0.x(), p0.y(), 0.0, s0};
  HorizonPlan plan = planner.build_and_solve(z0, Control{v_ref, 0.0, v_ref});

  for (size_t k = 2; k + 1 < plan.controls.size(); ++k) {
    CHECK(std::abs(plan.controls[k].v - v_ref) < 1e-2);
  }
}

TEST_CASE("start outside the corridor is flagged infeasible") {
  const TrackModel track = stadium_with_rvp(3.0);
  PlannerParams par;
  par.np = 10;
  par.xi = 0.1;  // corridor bound 0.1 * 2 * 0.8 = 0.16 m
  Planner planner(track, par, PlannerConstants{});

  const double s0 = 2.0;
  const TrackFrame f = track.frame_at(s0);
  const Eigen::Vector2d p = f.point + 0.5 * f.normal;  // well outside 0.16
  const KinState z0{p.x(), p.y(), 0.0, s0};
  const HorizonPlan plan = planner.build_and_solve(z0, Control{1.0, 0.0, 1.0});
  CHECK(plan.status == PlanStatus::Infeasible);
}

TEST_CASE("cost decomposition and the plain-MPCC reduction") {
  const TrackModel track = stadium_with_rvp(3.0);
  PlannerConstants con;
  PlannerParams par;
  par.np = 12;
  par.q_v = 4.0;
  Planner planner(track, par, con);

  const double s0 = 1.0;
  const Eigen::Vector2d p0 = track.position_at(s0);
  const KinState z0{p0.x(), p0.y(), 0.0, s0};
  const Control u_prev{2.0, 0.0, 2.0};
  const HorizonPlan plan = planner.build_and_solve(z0, u_prev);

  std::vector<double> vels, svals;
  for (size_t k = 0; k < plan.controls.size(); ++k) {
    vels.push_back(plan.controls[k].v);
    svals.push_back(plan.states[k + 1].s);
  }
  const double total = vp_cost(vels, svals, track.rvp(), par.q_v, con.v_delta_max) +
                       mpcc_cost(plan, track, par, con, u_prev);
  CHECK(plan.cost == doctest::Approx(total).epsilon(1e-12));

  // with q_v = 0 the formulation reduces to the conventional contouring cost
  PlannerParams plain = par;
  plain.q_v = 0.0;
  Planner mpcc_planner(track, plain, con);
  const HorizonPlan plan2 = mpcc_planner.build_and_solve(z0, u_prev);
  CHECK(plan2.cost ==
        doctest::Approx(mpcc_cost(plan2, track, plain, con, u_prev)).epsilon(1e-12));
}

TEST_CASE("returned plans satisfy dynamics and control boxes") {
  TrackModel track = make_sharp_corner_track();
  track.attach_rvp(generate_rvp(track, 6.0, 4.5, 3.5, 4.5));
  PlannerParams par;
  par.np = 25;
  par.q_v = 3.0;
  par.gamma = 5.0;
  PlannerConstants con;
  Planner planner(track, par, con);

  const TrackFrame f0 = track.frame_at(0.0);
  const KinState z0{f0.point.x(), f0.point.y(), std::atan2(f0.tangent.y(), f0.tangent.x()), 0.0};
  const HorizonPlan plan = planner.build_and_solve(z0, Control{1.0, 0.0, 1.0});

  for (size_t k = 0; k < plan.controls.size(); ++k) {
    const Control& u = plan.controls[k];
    CHECK(u.v >= con.u_min.v);
    CHECK(u.v <= con.u_max.v);
    CHECK(u.delta >= con.u_min.delta);
    CHECK(u.delta <= con.u_max.delta);
    CHECK(u.vp >= con.u_min.vp);
    CHECK(u.vp <= con.u_max.vp);
    const KinState expect = kin_euler_step(plan.states[k], u, con.ts, con.wheelbase);
    CHECK(std::abs(expect.x - plan.states[k + 1].x) < 1e-6);
    CHECK(std::abs(expect.y - plan.states[k + 1].y) < 1e-6);
    CHECK(std::abs(expect.phi - plan.states[k + 1].phi) < 1e-6);
    CHECK(std::abs(expect.s - plan.states[k + 1].s) < 1e-6);
  }
}

TEST_CASE("raising q_v never raises the velocity mismatch") {
  const double v_ref = 3.0;
  const TrackModel track = stadium_with_rvp(v_ref);
  PlannerConstants con;

  const double s0 = 2.0;
  const Eigen::Vector2d p0 = track.position_at(s0);
  const KinState z0{p0.x(), p0.y(), 0.0, s0};
  const Control u_prev{v_ref, 0.0, v_ref};

  double prev_sse = std::numeric_limits<double>::infinity();
  for (double q_v : {0.5, 1.0, 2.0, 5.0, 10.0}) {
    PlannerParams par;
    par.np = 15;
    par.q_v = q_v;
    par.gamma = 6.0;
    Planner planner(track, par, con);
    const HorizonPlan plan = planner.build_and_solve(z0, u_prev);
    double sse = 0.0;
    for (size_t k = 0; k < plan.controls.size(); ++k) {
      const double dv = plan.controls[k].v - track.rvp().value(plan.states[k + 1].s);
      sse += dv * dv;
    }
    CHECK(sse <= prev_sse + 1e-9);
    prev_sse = sse;
  }
}

TEST_CASE("receding_step applies the first control and falls back on failure") {
  const TrackModel track = stadium_with_rvp(3.0);
  PlannerParams par;
  par.np = 10;
  Planner planner(track, par, PlannerConstants{});

  const double s0 = 2.0;
  const Eigen::Vector2d p0 = track.position_at(s0);
  const KinState z0{p0.x(), p0.y(), 0.0, s0};
  const Control u_prev{2.0, 0.1, 2.0};

  auto [applied, plan] = planner.receding_step(z0, u_prev);
  CHECK(plan.status != PlanStatus::SolverFailure);
  CHECK(applied.v == plan.controls[0].v);

  planner.inject_solver_failure(true);
  auto [fallback, failed_plan] = planner.receding_step(z0, applied);
  CHECK(failed_plan.status == PlanStatus::SolverFailure);
  CHECK(fallback.v == doctest::Approx(0.8 * applied.v));
  CHECK(fallback.delta == doctest::Approx(applied.delta));
}
