#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <vector>

namespace vpmpcc {

/// Sparse matrix entry (row, col, value).
struct Entry {
  int row;
  int col;
  double value;
};

/// Smooth NLP with box bounds and equality constraints:
///   min f(x)  s.t.  c(x) = 0,  lower <= x <= upper.
/// Evaluators must be deterministic for fixed input.
struct NlpProblem {
  int n = 0;  // decision dimension
  int m = 0;  // number of equality constraints
  Eigen::VectorXd lower, upper;  // size n, +-inf allowed
  Eigen::VectorXd x0;

  /// Objective value; fills *grad (size n) when non-null.
  std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd* grad)> objective;

  /// Equality residual (size m); fills *jac entries when non-null.
  /// May be empty when m == 0.
  std::function<void(const Eigen::VectorXd& x, Eigen::VectorXd& residual,
                     std::vector<Entry>* jac)> equalities;

  /// Optional positive-semidefinite objective Hessian approximation
  /// (Gauss-Newton). Lower-triangle entries (row >= col). When absent, the
  /// solver maintains a damped BFGS approximation instead.
  std::function<void(const Eigen::VectorXd& x, std::vector<Entry>& hess)> hessian;

  /// Half bandwidth of hessian + J^T J (max |row-col|); enables the banded
  /// factorization path. <= 0 selects dense linear algebra.
  int band = 0;
};

enum class NlpStatus { Converged, MaxIter, LineSearchFail };

const char* nlp_status_name(NlpStatus s);

struct IterRecord {
  int iteration;
  double objective;
  double merit;          // augmented Lagrangian value at the accepted iterate
  double eq_violation;   // ||c||_inf
  int merit_phase;       // increments whenever multipliers or penalty change
};

struct SolveOptions {
  int max_iter = 200;             // total accepted-iterate budget
  double tol_stationarity = 1e-6; // projected-gradient inf norm
  double tol_feasibility = 1e-6;  // ||c||_inf
  double rho_init = 10.0;
  double rho_max = 1e10;
  double fd_check_h = 1e-6;       // step for the debug derivative check
  bool debug_derivative_check = false;  // throws InconsistentDerivatives on mismatch
  std::vector<IterRecord>* trace = nullptr;

  /// Warm-start multipliers (size m). Also receives the final multipliers
  /// when non-null.
  Eigen::VectorXd* multipliers = nullptr;
};

struct NlpSolution {
  Eigen::VectorXd x;
  double objective = 0.0;
  double eq_residual_norm = 0.0;  // ||c||_inf at x
  double stationarity = 0.0;      // projected-gradient inf norm at x
  int iterations = 0;
  NlpStatus status = NlpStatus::MaxIter;
  double wall_ms = 0.0;
};

/// Augmented-Lagrangian SQP: projected-Newton inner iterations on the AL
/// function with Gauss-Newton (banded) or damped BFGS (dense) curvature,
/// multiplier updates on sufficient feasibility progress, penalty escalation
/// otherwise.
NlpSolution solve(const NlpProblem& problem, const SolveOptions& options = {});

/// Max relative error between the analytic objective gradient and central
/// finite differences (step h scaled by max(1,|x_i|) per coordinate).
double check_gradients(const NlpProblem& problem, const Eigen::VectorXd& point, double h);

/// Same check for the equality Jacobian, via m random-ish fixed probe
/// directions; returns max relative error over residual entries.
double check_jacobian(const NlpProblem& problem, const Eigen::VectorXd& point, double h);

}  // namespace vpmpcc
