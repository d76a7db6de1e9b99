#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <cstdint>

namespace vpmpcc {

/// Matern 5/2 hyperparameters in log space: per-dimension lengthscales,
/// signal standard deviation, noise standard deviation.
struct GpHyper {
  Eigen::VectorXd log_lengthscale;
  double log_signal = 0.0;
  double log_noise = -4.0;
};

struct GpFitOptions {
  enum class Mode { Mle, Fixed };
  Mode mode = Mode::Mle;
  GpHyper fixed;          // used when mode == Fixed (log_lengthscale sized to dim)
  int restarts = 8;       // multi-start count for the likelihood ascent
  double noise_floor = 1e-6;  // lower bound on the noise std
  std::uint64_t seed = 0;
  const GpHyper* warm_start = nullptr;  // replaces the first restart
};

struct GpPosterior {
  double mean = 0.0;
  double variance = 0.0;  // >= 0
};

/// GP surrogate over the unit cube. Inputs must live in [0,1]^d; targets are
/// standardized internally per fit.
class GpModel {
 public:
  /// Fits hyperparameters by maximizing the log marginal likelihood (or
  /// takes them fixed) and caches the covariance factorization. Throws
  /// SingularCovariance when factorization fails even after jitter
  /// escalation to 1e-6.
  static GpModel fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                     const GpFitOptions& options = {});

  GpPosterior posterior(const Eigen::VectorXd& x) const;  // raw target scale

  int dimension() const { return static_cast<int>(X_.cols()); }
  int size() const { return static_cast<int>(X_.rows()); }
  const GpHyper& hyper() const { return hyper_; }
  double log_marginal_likelihood() const { return lml_; }
  double target_mean() const { return y_mean_; }
  double target_scale() const { return y_scale_; }

  /// Log marginal likelihood and its gradient for standardized targets at
  /// the given hyperparameters (exposed for the fit path and tests).
  static double lml_value(const Eigen::MatrixXd& X, const Eigen::VectorXd& y_std,
                          const GpHyper& hyper, double noise_floor, Eigen::VectorXd* grad);

 private:
  Eigen::MatrixXd X_;
  Eigen::VectorXd y_std_;
  double y_mean_ = 0.0;
  double y_scale_ = 1.0;
  GpHyper hyper_;
  Eigen::LLT<Eigen::MatrixXd> chol_;
  Eigen::VectorXd alpha_;  // K^-1 y_std
  double lml_ = 0.0;
};

/// Matern 5/2 kernel with ARD lengthscales (signal variance included).
double matern52(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const GpHyper& hyper);

/// Closed-form Expected Improvement for minimization:
/// (best - mu) Phi(z) + sigma phi(z), z = (best - mu)/sigma; 0 when sigma = 0.
double expected_improvement(double mean, double sigma, double best);

}  // namespace vpmpcc
