#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "vpmpcc/gp.hpp"
#include "vpmpcc/simloop.hpp"

namespace vpmpcc {

enum class ObjectiveVariant { Ofr, Baseline, Ablation1, Ablation2, Ablation3 };

const char* objective_variant_name(ObjectiveVariant v);
ObjectiveVariant parse_objective_variant(const std::string& name);

struct OfrConfig {
  double lambda1 = 20.0;
  double lambda2 = 10.0;
  double lambda3 = 0.5;
  double lambda4 = -100.0;  // must stay negative
  double t_lb = 17.6;       // s
  double d_tol = 0.5;       // m
  double d_ub = 0.6;        // m
  double d_lb_length = 60.0;  // m, minimum qualified trajectory length
  double j_fail = 17.6;
  double d_ref = 62.8;  // m
  double alpha = 10.0;  // baseline trade-off weight
  ObjectiveVariant variant = ObjectiveVariant::Ofr;

  void validate() const;
};

/// Lap-time component: T_lap + lambda1 * min(T_lap - t_lb, 0).
double ofr_L(double t_lap, const OfrConfig& cfg);

/// Trajectory-length component: lambda2 * tanh(lambda3 * (len - D_ref)).
double ofr_I(const std::vector<Eigen::Vector2d>& points, const OfrConfig& cfg);

/// Orthogonal-distance barrier: lambda4 * log(1 / max(max|d|/d_tol, 1)).
double ofr_B(const std::vector<double>& d, const OfrConfig& cfg);

/// Dispatch: J_fail for any non-Qualified verdict; otherwise the variant's
/// combination of L, I, B (or the baseline T_lap + alpha*mean|d|).
double objective(const LapObservation& obs, const OfrConfig& cfg);

struct TuneRecord {
  int iteration = 0;
  Eigen::VectorXd theta;  // raw scale
  double j = 0.0;
  Verdict verdict = Verdict::Timeout;
  double best_j = 0.0;
  double wall_s = 0.0;
  // episode detail for reporting
  double t_lap = 0.0;
  double traj_length = 0.0;
  double max_abs_d = 0.0;
  double mean_abs_d = 0.0;
};

struct EvalResult {
  double j = 0.0;
  Verdict verdict = Verdict::Timeout;
  double t_lap = 0.0;
  double traj_length = 0.0;
  double max_abs_d = 0.0;
  double mean_abs_d = 0.0;
};

using Evaluator = std::function<EvalResult(const Eigen::VectorXd& theta)>;

struct CampaignOptions {
  Eigen::VectorXd lower, upper;  // theta bounds
  int n_init = 18;               // space-filling evaluations (2 x dim default)
  int budget = 200;              // total evaluations N_BO
  std::uint64_t seed = 0;
  int jobs = 1;                  // parallelism for the initialization phase
  int acquisition_candidates = 512;
  int gp_restarts = 8;
};

struct CampaignResult {
  std::vector<TuneRecord> records;
  Eigen::VectorXd best_theta;
  double best_j = 0.0;
  int best_iteration = 0;
};

/// Runs the closed tuning loop: n_init Latin-hypercube evaluations, then
/// EI-driven iterations conditioned on all data so far. Failed episodes
/// enter the dataset at J_fail; the loop never throws on evaluation results.
CampaignResult run_campaign(const CampaignOptions& options, const Evaluator& evaluator);

/// Maximizes EI over the box via seeded quasi-random candidates plus local
/// pattern-search refinement from the top 8. Deterministic given the seed;
/// ties resolve to the smallest candidate index.
Eigen::VectorXd acquire_next(const GpModel& model, const Eigen::VectorXd& lower,
                             const Eigen::VectorXd& upper, double best_j, std::uint64_t seed,
                             int candidates = 512);

/// Default theta bounds of the nine-entry parameter vector.
Eigen::VectorXd default_theta_lower();
Eigen::VectorXd default_theta_upper();

/// Maps a raw theta vector to planner parameters; entry 1 converts to the
/// horizon via N_p = floor(theta_1 * D_ref). With force_plain_mpcc the
/// velocity-prediction weight is pinned to zero.
PlannerParams theta_to_params(const Eigen::VectorXd& theta, double d_ref,
                              bool force_plain_mpcc = false);

/// Writes the pinned tuning log (iter,theta1..theta9,J,verdict,best_J,wall_s)
/// and a detail sidecar used by the report command.
void write_tune_log(const std::string& path, const std::vector<TuneRecord>& records,
                    bool real_timing);
void write_tune_detail(const std::string& path, const std::vector<TuneRecord>& records);

}  // namespace vpmpcc
