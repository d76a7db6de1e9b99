#include "vpmpcc/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "vpmpcc/csv.hpp"
#include "vpmpcc/error.hpp"
#include "vpmpcc/rng.hpp"

namespace vpmpcc::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitBadUsage = 1;
constexpr int kExitMissingFile = 2;
constexpr int kExitDomainError = 3;

ExperimentConfig load_config(const CommonArgs& common) {
  if (common.config_path.empty()) return ExperimentConfig::defaults();
  if (!fs::exists(common.config_path)) {
    throw Error(ErrorCode::ParseError, "config file not found: " + common.config_path);
  }
  return ExperimentConfig::load(common.config_path);
}

TrackModel make_track(const ExperimentConfig& cfg) {
  if (!cfg.track_file.empty() && !fs::exists(cfg.track_file)) {
    std::cerr << "error: track file not found: " << cfg.track_file << "\n";
    std::exit(kExitMissingFile);
  }
  if (!cfg.raceline_file.empty() && !fs::exists(cfg.raceline_file)) {
    std::cerr << "error: raceline file not found: " << cfg.raceline_file << "\n";
    std::exit(kExitMissingFile);
  }
  return build_track_from_config(cfg);
}

std::string track_id(const ExperimentConfig& cfg) {
  if (!cfg.raceline_file.empty()) return "raceline:" + cfg.raceline_file;
  if (!cfg.track_file.empty()) return "file:" + cfg.track_file;
  return "builtin:sharp-corner";
}

SimOptions sim_options(const ExperimentConfig& cfg) {
  SimOptions sim = cfg.sim;
  sim.d_ub = cfg.ofr.d_ub;
  sim.d_lb_length = cfg.ofr.d_lb_length;
  return sim;
}

OfrConfig ofr_for(const ExperimentConfig& cfg, ObjectiveVariant variant, double d_ref) {
  OfrConfig ofr = cfg.ofr;
  ofr.variant = variant;
  ofr.d_ref = d_ref;
  if (variant == ObjectiveVariant::Ablation1) ofr.j_fail = cfg.ablation1_j_fail;
  return ofr;
}

void write_json(const std::string& path, const json& doc) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::ParseError, "cannot write " + path);
  out << doc.dump(2) << '\n';
}

Eigen::VectorXd theta_from_file(const std::string& path) {
  if (!fs::exists(path)) {
    throw Error(ErrorCode::ParseError, "theta file not found: " + path);
  }
  std::ifstream in(path);
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, path + ": " + e.what());
  }
  if (!doc.contains("theta") || !doc["theta"].is_array() || doc["theta"].size() != 9) {
    throw Error(ErrorCode::ParseError, path + ": expected a 9-entry 'theta' array");
  }
  Eigen::VectorXd theta(9);
  for (int i = 0; i < 9; ++i) theta[i] = doc["theta"][static_cast<size_t>(i)].get<double>();
  return theta;
}

}  // namespace

// ---------------------------------------------------------------------------

int cmd_track(const TrackArgs& args) {
  try {
    ExperimentConfig cfg = load_config(args.common);
    if (args.preset == "sharp-corner") cfg.track_file.clear();
    else if (!args.preset.empty()) {
      std::cerr << "error: unknown preset '" << args.preset << "'\n";
      return kExitBadUsage;
    }
    const TrackModel track = make_track(cfg);

    double wmin = 1e30, wmax = 0.0, wsum = 0.0;
    double kmax = 0.0;
    const int samples = 1024;
    for (int i = 0; i < samples; ++i) {
      const double s = track.length() * i / samples;
      const double w = track.half_width(s);
      wmin = std::min(wmin, w);
      wmax = std::max(wmax, w);
      wsum += w;
      kmax = std::max(kmax, std::abs(track.frame_at(s).curvature));
    }
    std::printf("track: %s\n", track_id(cfg).c_str());
    std::printf("D_ref: %.4f m\n", track.length());
    std::printf("half width: min %.3f / mean %.3f / max %.3f m\n", wmin, wsum / samples, wmax);
    std::printf("max |curvature|: %.4f 1/m\n", kmax);
    if (track.has_rvp()) {
      double vmin = 1e30, vmax = 0.0;
      for (int i = 0; i < samples; ++i) {
        const double v = track.rvp().value(track.length() * i / samples);
        vmin = std::min(vmin, v);
        vmax = std::max(vmax, v);
      }
      std::printf("rvp: min %.3f / max %.3f m/s\n", vmin, vmax);
    }

    if (args.action == "inspect") return 0;
    if (args.action != "build") {
      std::cerr << "error: unknown action '" << args.action << "' (build|inspect)\n";
      return kExitBadUsage;
    }

    fs::create_directories(args.common.out_dir);

    if (args.preset == "sharp-corner" || cfg.track_file.empty()) {
      const Centerline line = sharp_corner_centerline(1.2, cfg.half_width);
      CsvTable t;
      t.header = {"x_m", "y_m", "w_tr_left_m", "w_tr_right_m"};
      for (size_t i = 0; i < line.points.size(); ++i) {
        t.rows.push_back({line.points[i].x(), line.points[i].y(), line.half_widths[i],
                          line.half_widths[i]});
      }
      write_csv(args.common.out_dir + "/track.csv", t);
    }

    CsvTable frames;
    frames.header = {"s_m",     "x_m",      "y_m",       "tangent_x", "tangent_y",
                     "normal_x", "normal_y", "kappa_1pm", "half_width_m"};
    const int rows = static_cast<int>(std::ceil(track.length() / 0.1));
    for (int i = 0; i < rows; ++i) {
      const double s = track.length() * i / rows;
      const TrackFrame f = track.frame_at(s);
      frames.rows.push_back({s, f.point.x(), f.point.y(), f.tangent.x(), f.tangent.y(),
                             f.normal.x(), f.normal.y(), f.curvature, track.half_width(s)});
    }
    write_csv(args.common.out_dir + "/frames.csv", frames);

    if (track.has_rvp()) {
      CsvTable rvp;
      rvp.header = {"s_m", "v_mps"};
      for (size_t i = 0; i < track.rvp().sample_s().size(); ++i) {
        rvp.rows.push_back({track.rvp().sample_s()[i], track.rvp().sample_v()[i]});
      }
      write_csv(args.common.out_dir + "/rvp.csv", rvp);
    }
    std::printf("artifacts written to %s\n", args.common.out_dir.c_str());
    return 0;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code() == ErrorCode::ParseError ? kExitMissingFile : kExitDomainError;
  }
}

// ---------------------------------------------------------------------------

int cmd_race(const RaceArgs& args) {
  try {
    ExperimentConfig cfg = load_config(args.common);
    const TrackModel track = make_track(cfg);

    Eigen::VectorXd theta;
    if (!args.theta.empty()) {
      if (args.theta.size() != 9) {
        std::cerr << "error: --theta needs 9 comma-separated values\n";
        return kExitBadUsage;
      }
      theta = Eigen::Map<const Eigen::VectorXd>(args.theta.data(), 9);
    } else if (!args.theta_file.empty()) {
      theta = theta_from_file(args.theta_file);
    } else {
      std::cerr << "error: provide --theta or --theta-file\n";
      return kExitBadUsage;
    }
    if (args.laps <= 0) {
      std::cerr << "error: --laps must be >= 1\n";
      return kExitBadUsage;
    }
    const bool plain_mpcc = args.planner == "mpcc";
    if (!plain_mpcc && args.planner != "vpmpcc") {
      std::cerr << "error: unknown planner '" << args.planner << "'\n";
      return kExitBadUsage;
    }

    const PlannerParams params = theta_to_params(theta, track.length(), plain_mpcc);
    const SimOptions sim = sim_options(cfg);
    fs::create_directories(args.common.out_dir);

    std::vector<double> lap_times;
    std::vector<double> solve_means;
    int qualified = 0;
    for (int lap = 0; lap < args.laps; ++lap) {
      const LapObservation obs = run_lap(track, params, cfg.mpc, cfg.vehicle, sim,
                                         derive_seed(args.common.seed, static_cast<std::uint64_t>(lap)));
      char name[64];
      std::snprintf(name, sizeof(name), "/lap_%03d.csv", lap + 1);
      write_lap_log(args.common.out_dir + name, obs, cfg.real_timing);
      std::printf("lap %d: %s", lap + 1, verdict_name(obs.verdict));
      if (obs.verdict == Verdict::Qualified) {
        std::printf(", T_lap %.3f s", obs.t_lap);
        lap_times.push_back(obs.t_lap);
        ++qualified;
      }
      std::printf("\n");
      solve_means.push_back(cfg.real_timing ? obs.mean_solve_ms : 0.0);
    }

    if (!lap_times.empty()) {
      double mean_t = 0.0;
      for (double t : lap_times) mean_t += t;
      mean_t /= static_cast<double>(lap_times.size());
      double mean_vp = 0.0;
      for (double t : lap_times) mean_vp += track.length() / t;
      mean_vp /= static_cast<double>(lap_times.size());
      double mean_ms = 0.0, var_ms = 0.0;
      for (double m : solve_means) mean_ms += m;
      mean_ms /= static_cast<double>(solve_means.size());
      for (double m : solve_means) var_ms += (m - mean_ms) * (m - mean_ms);
      var_ms /= static_cast<double>(solve_means.size());
      std::printf("summary: %d/%d qualified, mean lap %.3f s, mean vp %.3f m/s, "
                  "solve %.3f +/- %.3f ms\n",
                  qualified, args.laps, mean_t, mean_vp, mean_ms, std::sqrt(var_ms));
    } else {
      std::printf("summary: 0/%d qualified\n", args.laps);
    }
    return 0;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code() == ErrorCode::ParseError ? kExitMissingFile : kExitDomainError;
  }
}

// ---------------------------------------------------------------------------

int cmd_tune(const TuneArgs& args) {
  try {
    ExperimentConfig cfg = load_config(args.common);
    const TrackModel track = make_track(cfg);
    const ObjectiveVariant variant = parse_objective_variant(args.objective);
    const bool plain_mpcc = args.planner == "mpcc";
    if (!plain_mpcc && args.planner != "vpmpcc") {
      std::cerr << "error: unknown planner '" << args.planner << "'\n";
      return kExitBadUsage;
    }

    if (args.budget == 0 || args.budget < -1) {
      std::cerr << "error: --budget must be positive\n";
      return kExitBadUsage;
    }
    const int budget = args.budget > 0 ? args.budget : cfg.n_bo;

    const OfrConfig ofr = ofr_for(cfg, variant, track.length());
    const SimOptions sim = sim_options(cfg);

    CampaignOptions copt;
    copt.lower = cfg.theta_lower;
    copt.upper = cfg.theta_upper;
    copt.n_init = cfg.n_init;
    copt.budget = budget;
    copt.seed = args.common.seed;
    copt.jobs = args.common.jobs;
    copt.gp_restarts = cfg.gp_restarts;

    const Evaluator evaluator = [&](const Eigen::VectorXd& theta) {
      const PlannerParams params = theta_to_params(theta, track.length(), plain_mpcc);
      const LapObservation obs = run_lap(track, params, cfg.mpc, cfg.vehicle, sim, 0);
      EvalResult ev;
      ev.j = objective(obs, ofr);
      ev.verdict = obs.verdict;
      ev.t_lap = obs.t_lap;
      ev.traj_length = obs.traj_length;
      ev.max_abs_d = obs.max_abs_d;
      double mean_abs = 0.0;
      for (double dv : obs.d) mean_abs += std::abs(dv);
      ev.mean_abs_d = obs.d.empty() ? 0.0 : mean_abs / static_cast<double>(obs.d.size());
      return ev;
    };

    const CampaignResult result = run_campaign(copt, evaluator);

    fs::create_directories(args.common.out_dir);
    write_tune_log(args.common.out_dir + "/tune_log.csv", result.records, cfg.real_timing);
    write_tune_detail(args.common.out_dir + "/tune_detail.csv", result.records);

    json best;
    best["theta"] = std::vector<double>(result.best_theta.data(),
                                        result.best_theta.data() + result.best_theta.size());
    best["best_J"] = result.best_j;
    best["best_iteration"] = result.best_iteration;
    best["objective"] = objective_variant_name(variant);
    best["planner"] = args.planner;
    best["d_ref"] = track.length();
    write_json(args.common.out_dir + "/best_theta.json", best);

    json meta;
    meta["track_id"] = track_id(cfg);
    meta["d_ref"] = track.length();
    meta["objective"] = objective_variant_name(variant);
    meta["planner"] = args.planner;
    meta["budget"] = budget;
    meta["n_init"] = copt.n_init;
    meta["seed"] = args.common.seed;
    write_json(args.common.out_dir + "/campaign_meta.json", meta);

    std::printf("campaign done: best J %.4f at iteration %d\n", result.best_j,
                result.best_iteration);
    return 0;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code() == ErrorCode::ParseError ? kExitMissingFile : kExitDomainError;
  }
}

// ---------------------------------------------------------------------------

namespace {

struct CampaignSummary {
  std::string dir;
  std::string objective;
  std::string track;
  double d_ref = 0.0;
  double optimal_lap = std::numeric_limits<double>::quiet_NaN();
  int convergence_iter = -1;
  double final_best = 0.0;
};

CampaignSummary summarize_campaign(const std::string& dir) {
  CampaignSummary sum;
  sum.dir = dir;

  std::ifstream meta_in(dir + "/campaign_meta.json");
  if (!meta_in) throw Error(ErrorCode::ParseError, dir + ": campaign_meta.json missing");
  json meta;
  meta_in >> meta;
  sum.objective = meta.value("objective", "?");
  sum.track = meta.value("track_id", "?");
  sum.d_ref = meta.value("d_ref", 0.0);

  const StringTable log = read_csv_strings(dir + "/tune_log.csv");
  const int c_best = log.column("best_J");
  if (c_best < 0 || log.rows.empty()) {
    throw Error(ErrorCode::ParseError, dir + ": tune_log.csv lacks best_J");
  }
  std::vector<double> best(log.rows.size());
  for (size_t i = 0; i < log.rows.size(); ++i) {
    best[i] = std::stod(log.rows[i][static_cast<size_t>(c_best)]);
  }
  sum.final_best = best.back();
  const double tol = std::max(0.02 * std::abs(sum.final_best), 1e-9);
  for (size_t i = 0; i < best.size(); ++i) {
    if (std::abs(best[i] - sum.final_best) <= tol) {
      sum.convergence_iter = static_cast<int>(i);
      break;
    }
  }

  const StringTable detail = read_csv_strings(dir + "/tune_detail.csv");
  const int c_t = detail.column("t_lap_s");
  const int c_v = detail.column("verdict");
  for (const auto& row : detail.rows) {
    if (row[static_cast<size_t>(c_v)] == "Qualified") {
      const double t = std::stod(row[static_cast<size_t>(c_t)]);
      if (std::isnan(sum.optimal_lap) || t < sum.optimal_lap) sum.optimal_lap = t;
    }
  }
  return sum;
}

}  // namespace

int cmd_report(const ReportArgs& args) {
  try {
    if (args.campaign_dirs.empty()) {
      std::cerr << "error: report needs at least one campaign directory\n";
      return kExitBadUsage;
    }
    std::vector<CampaignSummary> sums;
    for (const auto& dir : args.campaign_dirs) sums.push_back(summarize_campaign(dir));

    for (size_t i = 1; i < sums.size(); ++i) {
      if (sums[i].track != sums[0].track || std::abs(sums[i].d_ref - sums[0].d_ref) > 1e-6) {
        throw Error(ErrorCode::MismatchedTracks,
                    sums[i].dir + " references track '" + sums[i].track + "' but " +
                        sums[0].dir + " references '" + sums[0].track + "'");
      }
    }

    CsvTable out_table;
    out_table.header = {"optimal_lap_time_s", "laptime_change_pct", "convergence_iter",
                        "efficiency_pct"};

    std::printf("%-28s %-10s %18s %16s %16s %14s\n", "campaign", "objective", "optimal_lap_s",
                "laptime_chg_%", "convergence_it", "efficiency_%");
    const CampaignSummary& base = sums[0];
    for (size_t i = 0; i < sums.size(); ++i) {
      const CampaignSummary& s = sums[i];
      std::string lap = std::isnan(s.optimal_lap) ? "-" : [&] {
        char b[32];
        std::snprintf(b, sizeof(b), "%.2f", s.optimal_lap);
        return std::string(b);
      }();
      std::string chg = "-", eff = "-";
      if (i > 0) {
        if (!std::isnan(s.optimal_lap) && !std::isnan(base.optimal_lap)) {
          char b[32];
          std::snprintf(b, sizeof(b), "%.2f",
                        100.0 * (s.optimal_lap - base.optimal_lap) / base.optimal_lap);
          chg = b;
        }
        char b2[32];
        std::snprintf(b2, sizeof(b2), "%.2f",
                      100.0 * (base.convergence_iter - s.convergence_iter) /
                          std::max(1, base.convergence_iter));
        eff = b2;
      }
      std::printf("%-28s %-10s %18s %16s %16d %14s\n", s.dir.c_str(), s.objective.c_str(),
                  lap.c_str(), chg.c_str(), s.convergence_iter, eff.c_str());
      out_table.rows.push_back(
          {std::isnan(s.optimal_lap) ? 0.0 : s.optimal_lap,
           (i > 0 && !std::isnan(s.optimal_lap) && !std::isnan(base.optimal_lap))
               ? 100.0 * (s.optimal_lap - base.optimal_lap) / base.optimal_lap
               : 0.0,
           static_cast<double>(s.convergence_iter),
           i > 0 ? 100.0 * (base.convergence_iter - s.convergence_iter) /
                       std::max(1, base.convergence_iter)
                 : 0.0});
    }
    if (!args.out_file.empty()) write_csv(args.out_file, out_table);
    return 0;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    if (e.code() == ErrorCode::MismatchedTracks) return kExitDomainError;
    return e.code() == ErrorCode::ParseError ? kExitMissingFile : kExitDomainError;
  }
}

// ---------------------------------------------------------------------------

int run(int argc, const char* const* argv) {
  CLI::App app{"velocity-prediction contouring control racing experiments"};
  app.require_subcommand(1);

  int rc = 0;

  TrackArgs targs;
  auto* track = app.add_subcommand("track", "build or inspect track artifacts");
  track->add_option("action", targs.action, "build | inspect")->required();
  track->add_option("--config", targs.common.config_path, "experiment config (JSON)");
  track->add_option("--preset", targs.preset, "bundled circuit preset (sharp-corner)");
  track->add_option("--seed", targs.common.seed, "random seed");
  track->add_option("--out", targs.common.out_dir, "output directory");
  track->add_option("--jobs", targs.common.jobs, "worker cap");
  track->callback([&]() { rc = cmd_track(targs); });

  RaceArgs rargs;
  auto* race = app.add_subcommand("race", "run closed-loop laps with fixed parameters");
  race->add_option("--config", rargs.common.config_path, "experiment config (JSON)");
  race->add_option("--seed", rargs.common.seed, "random seed");
  race->add_option("--out", rargs.common.out_dir, "output directory");
  race->add_option("--jobs", rargs.common.jobs, "worker cap");
  race->add_option("--theta", rargs.theta, "explicit 9-entry parameter vector")->delimiter(',');
  race->add_option("--theta-file", rargs.theta_file, "best-theta JSON from a campaign");
  race->add_option("--laps", rargs.laps, "number of laps");
  race->add_option("--planner", rargs.planner, "vpmpcc | mpcc");
  race->callback([&]() { rc = cmd_race(rargs); });

  TuneArgs uargs;
  auto* tune = app.add_subcommand("tune", "run a Bayesian-optimization tuning campaign");
  tune->add_option("--config", uargs.common.config_path, "experiment config (JSON)");
  tune->add_option("--seed", uargs.common.seed, "random seed");
  tune->add_option("--out", uargs.common.out_dir, "output directory");
  tune->add_option("--jobs", uargs.common.jobs, "parallel initial evaluations");
  tune->add_option("--objective", uargs.objective, "ofr | baseline | ablation1..3");
  tune->add_option("--budget", uargs.budget, "total evaluations (default bo.N_BO)");
  tune->add_option("--planner", uargs.planner, "vpmpcc | mpcc");
  tune->callback([&]() { rc = cmd_tune(uargs); });

  ReportArgs pargs;
  auto* report = app.add_subcommand("report", "compare finished campaigns");
  report->add_option("dirs", pargs.campaign_dirs, "campaign output directories")->required();
  report->add_option("--out", pargs.out_file, "write the table as CSV");
  report->callback([&]() { rc = cmd_report(pargs); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }
  return rc;
}

}  // namespace vpmpcc::cli
