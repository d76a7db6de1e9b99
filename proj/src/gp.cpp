#include "vpmpcc/gp.hpp"

#include <cmath>
#include <numbers>

#include "vpmpcc/error.hpp"
#include "vpmpcc/rng.hpp"
#include "vpmpcc/solver.hpp"

namespace vpmpcc {

namespace {

constexpr double kSqrt5 = 2.23606797749978969;

double matern52_of_r(double r) { return (1.0 + kSqrt5 * r + 5.0 / 3.0 * r * r) * std::exp(-kSqrt5 * r); }

double scaled_r(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                const Eigen::VectorXd& lengthscale) {
  double r2 = 0.0;
  for (int i = 0; i < a.size(); ++i) {
    const double d = (a[i] - b[i]) / lengthscale[i];
    r2 += d * d;
  }
  return std::sqrt(r2);
}

struct Materialized {
  Eigen::VectorXd lengthscale;
  double sf2;
  double sn2;
};

Materialized materialize(const GpHyper& h, double noise_floor) {
  Materialized m;
  m.lengthscale = h.log_lengthscale.array().exp();
  const double sf = std::exp(h.log_signal);
  const double sn = std::max(std::exp(h.log_noise), noise_floor);
  m.sf2 = sf * sf;
  m.sn2 = sn * sn;
  return m;
}

Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& X, const Materialized& m) {
  const int n = static_cast<int>(X.rows());
  Eigen::MatrixXd K(n, n);
  for (int i = 0; i < n; ++i) {
    K(i, i) = m.sf2 + m.sn2;
    for (int j = 0; j < i; ++j) {
      const double r = scaled_r(X.row(i), X.row(j), m.lengthscale);
      K(i, j) = K(j, i) = m.sf2 * matern52_of_r(r);
    }
  }
  return K;
}

}  // namespace

double matern52(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const GpHyper& hyper) {
  const Eigen::VectorXd ls = hyper.log_lengthscale.array().exp();
  const double sf = std::exp(hyper.log_signal);
  return sf * sf * matern52_of_r(scaled_r(a, b, ls));
}

double GpModel::lml_value(const Eigen::MatrixXd& X, const Eigen::VectorXd& y_std,
                          const GpHyper& hyper, double noise_floor, Eigen::VectorXd* grad) {
  const int n = static_cast<int>(X.rows());
  const int d = static_cast<int>(X.cols());
  const Materialized m = materialize(hyper, noise_floor);
  Eigen::MatrixXd K = kernel_matrix(X, m);

  Eigen::LLT<Eigen::MatrixXd> llt(K);
  if (llt.info() != Eigen::Success) {
    return -std::numeric_limits<double>::infinity();
  }
  const Eigen::VectorXd alpha = llt.solve(y_std);
  double logdet = 0.0;
  for (int i = 0; i < n; ++i) logdet += std::log(llt.matrixLLT()(i, i));
  const double lml =
      -0.5 * y_std.dot(alpha) - logdet - 0.5 * n * std::log(2.0 * std::numbers::pi);

  if (grad) {
    grad->setZero(d + 2);
    const Eigen::MatrixXd kinv = llt.solve(Eigen::MatrixXd::Identity(n, n));
    const Eigen::MatrixXd w = alpha * alpha.transpose() - kinv;
    // per-pair derivative factors
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        if (i == j) continue;
        const double r = scaled_r(X.row(i), X.row(j), m.lengthscale);
        const double e = std::exp(-kSqrt5 * r);
        const double common = m.sf2 * (5.0 / 3.0) * (1.0 + kSqrt5 * r) * e;
        for (int q = 0; q < d; ++q) {
          const double diff = (X(i, q) - X(j, q)) / m.lengthscale[q];
          (*grad)[q] += 0.5 * w(i, j) * common * diff * diff;
        }
        (*grad)[d] += 0.5 * w(i, j) * 2.0 * m.sf2 * matern52_of_r(r);
      }
    }
    // diagonal contributions (r = 0)
    for (int i = 0; i < n; ++i) {
      (*grad)[d] += 0.5 * w(i, i) * 2.0 * m.sf2;
      (*grad)[d + 1] += 0.5 * w(i, i) * 2.0 * m.sn2;
    }
  }
  return lml;
}

GpModel GpModel::fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                     const GpFitOptions& options) {
  const int n = static_cast<int>(X.rows());
  const int d = static_cast<int>(X.cols());
  if (n < 2) throw Error(ErrorCode::InvalidArgument, "GP fit needs >= 2 points");
  if (y.size() != n) throw Error(ErrorCode::DimensionMismatch, "X rows and y size differ");
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) {
      if (X(i, j) < -1e-9 || X(i, j) > 1.0 + 1e-9) {
        throw Error(ErrorCode::InvalidArgument, "GP inputs must lie in the unit cube");
      }
    }
  }

  GpModel model;
  model.X_ = X;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) model.X_(i, j) = std::clamp(model.X_(i, j), 0.0, 1.0);
  }
  model.y_mean_ = y.mean();
  const double var = (y.array() - model.y_mean_).square().sum() / n;
  model.y_scale_ = std::sqrt(var);
  if (model.y_scale_ < 1e-12) model.y_scale_ = 1.0;
  model.y_std_ = (y.array() - model.y_mean_) / model.y_scale_;

  if (options.mode == GpFitOptions::Mode::Fixed) {
    model.hyper_ = options.fixed;
    if (model.hyper_.log_lengthscale.size() != d) {
      throw Error(ErrorCode::DimensionMismatch, "fixed lengthscales must match the dimension");
    }
  } else {
    // bounds in log space
    Eigen::VectorXd lo(d + 2), hi(d + 2);
    lo.head(d).setConstant(std::log(0.01));
    hi.head(d).setConstant(std::log(30.0));
    lo[d] = std::log(0.01);
    hi[d] = std::log(10.0);
    lo[d + 1] = std::log(options.noise_floor);
    hi[d + 1] = std::log(2.0);

    NlpProblem prob;
    prob.n = d + 2;
    prob.m = 0;
    prob.lower = lo;
    prob.upper = hi;
    prob.objective = [&](const Eigen::VectorXd& th, Eigen::VectorXd* grad) {
      GpHyper h;
      h.log_lengthscale = th.head(d);
      h.log_signal = th[d];
      h.log_noise = th[d + 1];
      Eigen::VectorXd g;
      const double lml = lml_value(model.X_, model.y_std_, h, options.noise_floor,
                                   grad ? &g : nullptr);
      if (!std::isfinite(lml)) return 1e12;  // infeasible hyper point
      if (grad) *grad = -g;
      return -lml;
    };

    SolveOptions sopt;
    sopt.max_iter = 80;
    sopt.tol_stationarity = 1e-5;

    double best_obj = std::numeric_limits<double>::infinity();
    GpHyper best;
    auto lhs = latin_hypercube(std::max(0, options.restarts - 1), d + 2,
                               derive_seed(options.seed, 0xF17));
    for (int r = 0; r < std::max(1, options.restarts); ++r) {
      Eigen::VectorXd x0(d + 2);
      if (r == 0) {
        if (options.warm_start && options.warm_start->log_lengthscale.size() == d) {
          x0.head(d) = options.warm_start->log_lengthscale;
          x0[d] = options.warm_start->log_signal;
          x0[d + 1] = options.warm_start->log_noise;
        } else {
          x0.head(d).setConstant(std::log(0.5));
          x0[d] = std::log(1.0);
          x0[d + 1] = std::log(0.1);
        }
      } else {
        for (int j = 0; j < d + 2; ++j) {
          const double u = lhs[static_cast<size_t>(r - 1)][static_cast<size_t>(j)];
          x0[j] = lo[j] + u * (hi[j] - lo[j]);
        }
      }
      prob.x0 = x0;
      const NlpSolution sol = solve(prob, sopt);
      if (sol.objective < best_obj) {
        best_obj = sol.objective;
        best.log_lengthscale = sol.x.head(d);
        best.log_signal = sol.x[d];
        best.log_noise = sol.x[d + 1];
      }
    }
    model.hyper_ = best;
  }

  // factorize with jitter escalation
  Materialized m = materialize(model.hyper_, options.noise_floor);
  Eigen::MatrixXd K = kernel_matrix(model.X_, m);
  double jitter = 0.0;
  for (int attempt = 0;; ++attempt) {
    Eigen::MatrixXd Kj = K;
    Kj.diagonal().array() += jitter * std::max(1.0, m.sf2);
    model.chol_.compute(Kj);
    if (model.chol_.info() == Eigen::Success) break;
    if (jitter >= 1e-6) {
      throw Error(ErrorCode::SingularCovariance,
                  "covariance not positive definite even with 1e-6 jitter");
    }
    jitter = (jitter == 0.0) ? 1e-12 : jitter * 100.0;
  }
  model.alpha_ = model.chol_.solve(model.y_std_);
  double logdet = 0.0;
  for (int i = 0; i < n; ++i) logdet += std::log(model.chol_.matrixLLT()(i, i));
  model.lml_ = -0.5 * model.y_std_.dot(model.alpha_) - logdet -
               0.5 * n * std::log(2.0 * std::numbers::pi);
  return model;
}

GpPosterior GpModel::posterior(const Eigen::VectorXd& x) const {
  const int n = size();
  const Materialized m = materialize(hyper_, 0.0);
  Eigen::VectorXd k(n);
  for (int i = 0; i < n; ++i) {
    k[i] = m.sf2 * matern52_of_r(scaled_r(x, X_.row(i), m.lengthscale));
  }
  const Eigen::VectorXd v = chol_.matrixL().solve(k);
  GpPosterior post;
  const double mu_std = k.dot(alpha_);
  const double var_std = std::max(0.0, m.sf2 - v.squaredNorm());
  post.mean = mu_std * y_scale_ + y_mean_;
  post.variance = var_std * y_scale_ * y_scale_;
  return post;
}

double expected_improvement(double mean, double sigma, double best) {
  if (sigma <= 0.0) return 0.0;
  const double z = (best - mean) / sigma;
  const double phi_cdf = 0.5 * std::erfc(-z / std::numbers::sqrt2);
  const double phi_pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
  return (best - mean) * phi_cdf + sigma * phi_pdf;
}

}  // namespace vpmpcc
