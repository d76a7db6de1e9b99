#include "vpmpcc/tuner.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <thread>

#include "vpmpcc/csv.hpp"
#include "vpmpcc/error.hpp"
#include "vpmpcc/rng.hpp"

namespace vpmpcc {

const char* objective_variant_name(ObjectiveVariant v) {
  switch (v) {
    case ObjectiveVariant::Ofr: return "ofr";
    case ObjectiveVariant::Baseline: return "baseline";
    case ObjectiveVariant::Ablation1: return "ablation1";
    case ObjectiveVariant::Ablation2: return "ablation2";
    case ObjectiveVariant::Ablation3: return "ablation3";
  }
  return "?";
}

ObjectiveVariant parse_objective_variant(const std::string& name) {
  if (name == "ofr") return ObjectiveVariant::Ofr;
  if (name == "baseline") return ObjectiveVariant::Baseline;
  if (name == "ablation1") return ObjectiveVariant::Ablation1;
  if (name == "ablation2") return ObjectiveVariant::Ablation2;
  if (name == "ablation3") return ObjectiveVariant::Ablation3;
  throw Error(ErrorCode::InvalidArgument, "unknown objective variant '" + name + "'");
}

void OfrConfig::validate() const {
  if (!(lambda4 < 0.0)) throw Error(ErrorCode::InvalidArgument, "lambda4 must be negative");
  if (!(d_tol > 0.0)) throw Error(ErrorCode::InvalidArgument, "d_tol must be positive");
  if (!std::isfinite(j_fail)) throw Error(ErrorCode::InvalidArgument, "J_fail must be finite");
}

double ofr_L(double t_lap, const OfrConfig& cfg) {
  if (!(t_lap > 0.0)) throw Error(ErrorCode::InvalidArgument, "lap time must be positive");
  return t_lap + cfg.lambda1 * std::min(t_lap - cfg.t_lb, 0.0);
}

double ofr_I(const std::vector<Eigen::Vector2d>& points, const OfrConfig& cfg) {
  if (points.size() < 2) throw Error(ErrorCode::InvalidArgument, "need >= 2 trajectory points");
  double len = 0.0;
  for (size_t i = 0; i + 1 < points.size(); ++i) len += (points[i + 1] - points[i]).norm();
  return cfg.lambda2 * std::tanh(cfg.lambda3 * (len - cfg.d_ref));
}

double ofr_B(const std::vector<double>& d, const OfrConfig& cfg) {
  if (d.empty()) throw Error(ErrorCode::InvalidArgument, "need at least one distance sample");
  double max_abs = 0.0;
  for (double v : d) max_abs = std::max(max_abs, std::abs(v));
  const double ratio = std::max(max_abs / cfg.d_tol, 1.0);
  return cfg.lambda4 * std::log(1.0 / ratio);
}

double objective(const LapObservation& obs, const OfrConfig& cfg) {
  cfg.validate();
  if (obs.verdict != Verdict::Qualified) return cfg.j_fail;
  switch (cfg.variant) {
    case ObjectiveVariant::Ofr:
      return ofr_L(obs.t_lap, cfg) + ofr_I(obs.points, cfg) + ofr_B(obs.d, cfg);
    case ObjectiveVariant::Baseline: {
      double mean_abs = 0.0;
      for (double v : obs.d) mean_abs += std::abs(v);
      mean_abs /= static_cast<double>(obs.d.size());
      return obs.t_lap + cfg.alpha * mean_abs;
    }
    case ObjectiveVariant::Ablation1:
      return ofr_L(obs.t_lap, cfg) + ofr_B(obs.d, cfg);
    case ObjectiveVariant::Ablation2:
      return obs.t_lap + ofr_B(obs.d, cfg) + ofr_I(obs.points, cfg);
    case ObjectiveVariant::Ablation3:
      return ofr_L(obs.t_lap, cfg) + ofr_I(obs.points, cfg);
  }
  return cfg.j_fail;
}

// ---------------------------------------------------------------------------
// Acquisition

Eigen::VectorXd acquire_next(const GpModel& model, const Eigen::VectorXd& lower,
                             const Eigen::VectorXd& upper, double best_j, std::uint64_t seed,
                             int candidates) {
  const int dim = static_cast<int>(lower.size());
  auto ei_at = [&](const Eigen::VectorXd& u) {
    const GpPosterior post = model.posterior(u);
    return expected_improvement(post.mean, std::sqrt(post.variance), best_j);
  };

  std::vector<Eigen::VectorXd> cand(static_cast<size_t>(candidates));
  std::vector<double> score(static_cast<size_t>(candidates));
  for (int i = 0; i < candidates; ++i) {
    const auto h = halton_point(i, dim, seed);
    Eigen::VectorXd u(dim);
    for (int j = 0; j < dim; ++j) u[j] = h[static_cast<size_t>(j)];
    cand[static_cast<size_t>(i)] = u;
    score[static_cast<size_t>(i)] = ei_at(u);
  }

  std::vector<int> order(static_cast<size_t>(candidates));
  for (int i = 0; i < candidates; ++i) order[static_cast<size_t>(i)] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return score[static_cast<size_t>(a)] > score[static_cast<size_t>(b)]; });
  const int top = std::min(8, candidates);

  Eigen::VectorXd best_u = cand[0];
  double best_score = score[0];
  std::vector<int> refine_set(order.begin(), order.begin() + top);
  std::sort(refine_set.begin(), refine_set.end());  // smallest index wins ties

  for (int idx : refine_set) {
    Eigen::VectorXd u = cand[static_cast<size_t>(idx)];
    double s = score[static_cast<size_t>(idx)];
    double step = 0.05;
    while (step > 1e-4) {
      bool improved = false;
      for (int jdim = 0; jdim < dim; ++jdim) {
        for (double dir : {+1.0, -1.0}) {
          Eigen::VectorXd trial = u;
          trial[jdim] = std::clamp(trial[jdim] + dir * step, 0.0, 1.0);
          const double ts = ei_at(trial);
          if (ts > s) {
            s = ts;
            u = trial;
            improved = true;
          }
        }
      }
      if (!improved) step *= 0.5;
    }
    if (s > best_score) {
      best_score = s;
      best_u = u;
    }
  }

  Eigen::VectorXd theta(dim);
  for (int j = 0; j < dim; ++j) theta[j] = lower[j] + best_u[j] * (upper[j] - lower[j]);
  return theta;
}

// ---------------------------------------------------------------------------
// Campaign

CampaignResult run_campaign(const CampaignOptions& options, const Evaluator& evaluator) {
  const int dim = static_cast<int>(options.lower.size());
  if (dim == 0 || options.upper.size() != dim) {
    throw Error(ErrorCode::DimensionMismatch, "campaign bounds must have matching sizes");
  }
  if (options.budget <= 0) throw Error(ErrorCode::InvalidArgument, "budget must be > 0");
  const int n_init = std::clamp(options.n_init, 1, options.budget);

  CampaignResult result;
  result.best_j = std::numeric_limits<double>::infinity();

  Eigen::MatrixXd X_unit(options.budget, dim);
  Eigen::VectorXd y(options.budget);

  auto to_raw = [&](const Eigen::VectorXd& u) {
    Eigen::VectorXd t(dim);
    for (int j = 0; j < dim; ++j) t[j] = options.lower[j] + u[j] * (options.upper[j] - options.lower[j]);
    return t;
  };

  auto record_eval = [&](int iter, const Eigen::VectorXd& unit, const EvalResult& ev,
                         double wall_s) {
    X_unit.row(iter) = unit.transpose();
    y[iter] = ev.j;
    if (ev.j < result.best_j) {
      result.best_j = ev.j;
      result.best_theta = to_raw(unit);
      result.best_iteration = iter;
    }
    TuneRecord rec;
    rec.iteration = iter;
    rec.theta = to_raw(unit);
    rec.j = ev.j;
    rec.verdict = ev.verdict;
    rec.best_j = result.best_j;
    rec.wall_s = wall_s;
    rec.t_lap = ev.t_lap;
    rec.traj_length = ev.traj_length;
    rec.max_abs_d = ev.max_abs_d;
    rec.mean_abs_d = ev.mean_abs_d;
    result.records.push_back(std::move(rec));
  };

  // --- space-filling initialization (parallel evaluations allowed) ---
  const auto lhs = latin_hypercube(n_init, dim, derive_seed(options.seed, 1));
  std::vector<Eigen::VectorXd> init_units(static_cast<size_t>(n_init));
  for (int i = 0; i < n_init; ++i) {
    Eigen::VectorXd u(dim);
    for (int j = 0; j < dim; ++j) u[j] = lhs[static_cast<size_t>(i)][static_cast<size_t>(j)];
    init_units[static_cast<size_t>(i)] = u;
  }

  std::vector<EvalResult> init_results(static_cast<size_t>(n_init));
  std::vector<double> init_wall(static_cast<size_t>(n_init), 0.0);
  const int jobs = std::max(1, options.jobs);
  if (jobs == 1) {
    for (int i = 0; i < n_init; ++i) {
      const auto t0 = std::chrono::steady_clock::now();
      init_results[static_cast<size_t>(i)] = evaluator(to_raw(init_units[static_cast<size_t>(i)]));
      init_wall[static_cast<size_t>(i)] =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
  } else {
    std::atomic<int> next{0};
    auto worker = [&]() {
      while (true) {
        const int i = next.fetch_add(1);
        if (i >= n_init) break;
        const auto t0 = std::chrono::steady_clock::now();
        init_results[static_cast<size_t>(i)] = evaluator(to_raw(init_units[static_cast<size_t>(i)]));
        init_wall[static_cast<size_t>(i)] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      }
    };
    std::vector<std::thread> pool;
    for (int w = 0; w < jobs; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (int i = 0; i < n_init; ++i) {
    record_eval(i, init_units[static_cast<size_t>(i)], init_results[static_cast<size_t>(i)],
                init_wall[static_cast<size_t>(i)]);
  }

  // --- EI-driven loop (strictly sequential: each evaluation conditions the next) ---
  GpHyper warm;
  bool have_warm = false;
  for (int i = n_init; i < options.budget; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    GpFitOptions fit_opt;
    fit_opt.restarts = options.gp_restarts;
    fit_opt.seed = derive_seed(options.seed, 100 + static_cast<std::uint64_t>(i));
    if (have_warm) fit_opt.warm_start = &warm;
    const GpModel model = GpModel::fit(X_unit.topRows(i), y.head(i), fit_opt);
    warm = model.hyper();
    have_warm = true;

    const Eigen::VectorXd unit_lo = Eigen::VectorXd::Zero(dim);
    const Eigen::VectorXd unit_hi = Eigen::VectorXd::Ones(dim);
    const Eigen::VectorXd theta_unit =
        acquire_next(model, unit_lo, unit_hi, result.best_j,
                     derive_seed(options.seed, 200 + static_cast<std::uint64_t>(i)),
                     options.acquisition_candidates);

    const EvalResult ev = evaluator(to_raw(theta_unit));
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    record_eval(i, theta_unit, ev, wall);
  }

  return result;
}

// ---------------------------------------------------------------------------
// Theta mapping and bounds

Eigen::VectorXd default_theta_lower() {
  Eigen::VectorXd lo(9);
  lo << 0.1, 1.0, 1.0, 1.0, 1.0, 0.1, 1.0, 1.0, 0.01;
  return lo;
}

Eigen::VectorXd default_theta_upper() {
  Eigen::VectorXd hi(9);
  hi << 1.0, 50.0, 10.0, 10.0, 10.0, 20.0, 50.0, 20.0, 0.4;
  return hi;
}

PlannerParams theta_to_params(const Eigen::VectorXd& theta, double d_ref,
                              bool force_plain_mpcc) {
  if (theta.size() != 9) {
    throw Error(ErrorCode::DimensionMismatch, "theta must have 9 entries");
  }
  PlannerParams p;
  p.np = std::max(2, static_cast<int>(std::floor(theta[0] * d_ref)));
  p.q_v = force_plain_mpcc ? 0.0 : theta[1];
  p.gamma = theta[2];
  p.q_e_con = theta[3];
  p.q_e_lag = theta[4];
  p.q_dv = theta[5];
  p.q_ddelta = theta[6];
  p.q_dvp = theta[7];
  p.xi = theta[8];
  return p;
}

// ---------------------------------------------------------------------------
// Log files

void write_tune_log(const std::string& path, const std::vector<TuneRecord>& records,
                    bool real_timing) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::ParseError, "cannot write " + path);
  out << "iter";
  for (int i = 1; i <= 9; ++i) out << ",theta" << i;
  out << ",J,verdict,best_J,wall_s\n";
  for (const TuneRecord& r : records) {
    out << r.iteration;
    for (int i = 0; i < r.theta.size(); ++i) out << ',' << format_double(r.theta[i]);
    out << ',' << format_double(r.j) << ',' << verdict_name(r.verdict) << ','
        << format_double(r.best_j) << ',' << format_double(real_timing ? r.wall_s : 0.0) << '\n';
  }
}

void write_tune_detail(const std::string& path, const std::vector<TuneRecord>& records) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::ParseError, "cannot write " + path);
  out << "iter,t_lap_s,traj_length_m,max_abs_d_m,mean_abs_d_m,verdict\n";
  for (const TuneRecord& r : records) {
    out << r.iteration << ',' << format_double(r.t_lap) << ',' << format_double(r.traj_length)
        << ',' << format_double(r.max_abs_d) << ',' << format_double(r.mean_abs_d) << ','
        << verdict_name(r.verdict) << '\n';
  }
}

}  // namespace vpmpcc
