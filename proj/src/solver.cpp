#include "vpmpcc/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "vpmpcc/error.hpp"

namespace vpmpcc {

const char* nlp_status_name(NlpStatus s) {
  switch (s) {
    case NlpStatus::Converged: return "Converged";
    case NlpStatus::MaxIter: return "MaxIter";
    case NlpStatus::LineSearchFail: return "LineSearchFail";
  }
  return "?";
}

namespace {

/// Symmetric banded matrix, lower storage: entry(d, j) = A(j+d, j).
class BandMatrix {
 public:
  BandMatrix(int n, int band) : n_(n), band_(band), data_((band + 1) * n, 0.0) {}

  void clear() { std::fill(data_.begin(), data_.end(), 0.0); }

  double& at(int i, int j) {  // requires i >= j, i - j <= band
    return data_[static_cast<size_t>((i - j) * n_ + j)];
  }
  double at(int i, int j) const { return data_[static_cast<size_t>((i - j) * n_ + j)]; }

  void add_sym(int i, int j, double v) {
    if (i < j) std::swap(i, j);
    at(i, j) += v;
  }

  /// In-place banded Cholesky; returns false when a pivot is non-positive.
  bool factorize() {
    for (int j = 0; j < n_; ++j) {
      double diag = at(j, j);
      for (int k = std::max(0, j - band_); k < j; ++k) {
        const double l = at(j, k);
        diag -= l * l;
      }
      if (!(diag > 0.0)) return false;
      const double root = std::sqrt(diag);
      at(j, j) = root;
      const int imax = std::min(j + band_, n_ - 1);
      for (int i = j + 1; i <= imax; ++i) {
        double sum = at(i, j);
        for (int k = std::max(0, i - band_); k < j; ++k) {
          sum -= at(i, k) * at(j, k);
        }
        at(i, j) = sum / root;
      }
    }
    return true;
  }

  /// Solves L L^T x = b after factorize().
  void solve(Eigen::VectorXd& b) const {
    for (int j = 0; j < n_; ++j) {
      double sum = b[j];
      for (int k = std::max(0, j - band_); k < j; ++k) sum -= at(j, k) * b[k];
      b[j] = sum / at(j, j);
    }
    for (int j = n_ - 1; j >= 0; --j) {
      double sum = b[j];
      const int imax = std::min(j + band_, n_ - 1);
      for (int i = j + 1; i <= imax; ++i) sum -= at(i, j) * b[i];
      b[j] = sum / at(j, j);
    }
  }

 private:
  int n_, band_;
  std::vector<double> data_;
};

Eigen::VectorXd clamp_box(const Eigen::VectorXd& x, const Eigen::VectorXd& lo,
                          const Eigen::VectorXd& hi) {
  return x.cwiseMax(lo).cwiseMin(hi);
}

struct Evaluation {
  double f = 0.0;
  Eigen::VectorXd grad;
  Eigen::VectorXd c;
  std::vector<Entry> jac;
};

void evaluate(const NlpProblem& p, const Eigen::VectorXd& x, Evaluation& ev) {
  ev.grad.setZero(p.n);
  ev.f = p.objective(x, &ev.grad);
  if (!std::isfinite(ev.f)) {
    throw Error(ErrorCode::NonFiniteObjective, "objective is not finite at the iterate");
  }
  if (p.m > 0) {
    ev.c.resize(p.m);
    ev.jac.clear();
    p.equalities(x, ev.c, &ev.jac);
  } else {
    ev.c.resize(0);
  }
}

double merit_only(const NlpProblem& p, const Eigen::VectorXd& x, const Eigen::VectorXd& lam,
                  double rho, Eigen::VectorXd& scratch_c) {
  const double f = p.objective(x, nullptr);
  if (p.m == 0) return f;
  scratch_c.resize(p.m);
  p.equalities(x, scratch_c, nullptr);
  return f + lam.dot(scratch_c) + 0.5 * rho * scratch_c.squaredNorm();
}

}  // namespace

NlpSolution solve(const NlpProblem& p, const SolveOptions& opt) {
  const auto t_start = std::chrono::steady_clock::now();
  if (p.n <= 0 || !p.objective) {
    throw Error(ErrorCode::InvalidArgument, "problem needs a dimension and an objective");
  }

  if (opt.debug_derivative_check) {
    const double err = check_gradients(p, clamp_box(p.x0, p.lower, p.upper), opt.fd_check_h);
    if (err > 1e-4) {
      throw Error(ErrorCode::InconsistentDerivatives,
                  "gradient check failed, max relative error " + std::to_string(err));
    }
  }

  Eigen::VectorXd x = clamp_box(p.x0, p.lower, p.upper);
  Eigen::VectorXd lam = Eigen::VectorXd::Zero(p.m);
  if (opt.multipliers && opt.multipliers->size() == p.m) lam = *opt.multipliers;

  double rho = (p.m > 0) ? opt.rho_init : 0.0;
  const bool banded = static_cast<bool>(p.hessian) && p.band > 0;

  Evaluation ev;
  evaluate(p, x, ev);

  // BFGS state for the dense path
  Eigen::MatrixXd bfgs;
  if (!banded) bfgs = Eigen::MatrixXd::Identity(p.n, p.n) * std::max(1.0, ev.grad.norm());

  auto al_gradient = [&](const Evaluation& e) {
    Eigen::VectorXd g = e.grad;
    if (p.m > 0) {
      for (const Entry& en : e.jac) {
        g[en.col] += en.value * (lam[en.row] + rho * e.c[en.row]);
      }
    }
    return g;
  };
  auto pg_norm = [&](const Eigen::VectorXd& g) {
    return (clamp_box(x - g, p.lower, p.upper) - x).lpNorm<Eigen::Infinity>();
  };
  auto merit_at = [&](const Evaluation& e) {
    double v = e.f;
    if (p.m > 0) v += lam.dot(e.c) + 0.5 * rho * e.c.squaredNorm();
    return v;
  };

  double omega = (p.m > 0) ? std::max(1e-2, opt.tol_stationarity) : opt.tol_stationarity;
  double eta = 1e-1;
  int merit_phase = 0;

  NlpSolution sol;
  sol.status = NlpStatus::MaxIter;

  std::vector<Entry> hess_entries;
  BandMatrix band_mat(p.n, std::max(1, p.band));
  Eigen::VectorXd scratch_c;

  int iter = 0;
  while (iter < opt.max_iter) {
    const Eigen::VectorXd g_al = al_gradient(ev);
    const double stat = pg_norm(g_al);
    const double viol = (p.m > 0) ? ev.c.lpNorm<Eigen::Infinity>() : 0.0;

    if (stat <= opt.tol_stationarity && viol <= opt.tol_feasibility) {
      sol.status = NlpStatus::Converged;
      break;
    }

    if (p.m > 0 && stat <= omega) {
      // inner problem solved to the current target; update the outer state
      if (viol <= std::max(eta, opt.tol_feasibility)) {
        lam += rho * ev.c;
        lam = lam.cwiseMax(-1e12).cwiseMin(1e12);
        eta = std::max(0.2 * eta, 0.3 * opt.tol_feasibility);
        omega = std::max(0.2 * omega, 0.3 * opt.tol_stationarity);
      } else {
        rho = std::min(rho * 10.0, opt.rho_max);
        omega = std::max(0.5 * omega, 0.3 * opt.tol_stationarity);
      }
      ++merit_phase;
      if (!banded) bfgs = Eigen::MatrixXd::Identity(p.n, p.n) * std::max(1.0, ev.grad.norm());
      ++iter;
      continue;
    }

    // --- assemble the AL curvature model ---
    const double act_eps = 1e-10;
    std::vector<char> active(static_cast<size_t>(p.n), 0);
    for (int i = 0; i < p.n; ++i) {
      const bool at_lo = x[i] <= p.lower[i] + act_eps && g_al[i] > 0.0;
      const bool at_hi = x[i] >= p.upper[i] - act_eps && g_al[i] < 0.0;
      active[static_cast<size_t>(i)] = (at_lo || at_hi) ? 1 : 0;
    }

    Eigen::VectorXd d = Eigen::VectorXd::Zero(p.n);
    const Eigen::VectorXd x_prev = x;
    double mu = 0.0;
    bool direction_ok = false;
    double step = 1.0;

    for (int attempt = 0; attempt < 14 && !direction_ok; ++attempt) {
      // build the masked Newton system
      Eigen::VectorXd rhs = -g_al;
      if (banded) {
        band_mat.clear();
        hess_entries.clear();
        p.hessian(x, hess_entries);
        for (const Entry& en : hess_entries) band_mat.add_sym(en.row, en.col, en.value);
        if (p.m > 0) {
          // rho J^T J, banded by construction of the transcription
          size_t k = 0;
          while (k < ev.jac.size()) {
            size_t k2 = k;
            while (k2 < ev.jac.size() && ev.jac[k2].row == ev.jac[k].row) ++k2;
            for (size_t a = k; a < k2; ++a) {
              for (size_t b = k; b < k2; ++b) {
                if (ev.jac[a].col >= ev.jac[b].col) {
                  band_mat.add_sym(ev.jac[a].col, ev.jac[b].col,
                                   rho * ev.jac[a].value * ev.jac[b].value);
                }
              }
            }
            k = k2;
          }
        }
        double max_diag = 1.0;
        for (int i = 0; i < p.n; ++i) max_diag = std::max(max_diag, band_mat.at(i, i));
        const double damp = mu * max_diag + 1e-12 * max_diag;
        for (int i = 0; i < p.n; ++i) band_mat.at(i, i) += damp;
        for (int i = 0; i < p.n; ++i) {
          if (!active[static_cast<size_t>(i)]) continue;
          const int jmin = std::max(0, i - p.band);
          const int jmax = std::min(p.n - 1, i + p.band);
          for (int j = jmin; j <= jmax; ++j) {
            if (j == i) continue;
            if (j < i) band_mat.at(i, j) = 0.0;
            else band_mat.at(j, i) = 0.0;
          }
          band_mat.at(i, i) = 1.0;
          rhs[i] = 0.0;
        }
        if (band_mat.factorize()) {
          band_mat.solve(rhs);
          d = rhs;
          direction_ok = true;
        }
      } else {
        Eigen::MatrixXd h = bfgs;
        if (p.m > 0) {
          Eigen::MatrixXd jd = Eigen::MatrixXd::Zero(p.m, p.n);
          for (const Entry& en : ev.jac) jd(en.row, en.col) += en.value;
          h += rho * jd.transpose() * jd;
        }
        const double max_diag = std::max(1.0, h.diagonal().maxCoeff());
        h.diagonal().array() += mu * max_diag + 1e-12 * max_diag;
        for (int i = 0; i < p.n; ++i) {
          if (!active[static_cast<size_t>(i)]) continue;
          h.row(i).setZero();
          h.col(i).setZero();
          h(i, i) = 1.0;
          rhs[i] = 0.0;
        }
        Eigen::LLT<Eigen::MatrixXd> llt(h);
        if (llt.info() == Eigen::Success) {
          d = llt.solve(rhs);
          direction_ok = true;
        }
      }
      if (!direction_ok) {
        mu = (mu == 0.0) ? 1e-6 : mu * 100.0;
        continue;
      }

      // projected Armijo backtracking
      const double phi0 = merit_at(ev);
      step = 1.0;
      bool accepted = false;
      for (int ls = 0; ls < 45; ++ls) {
        const Eigen::VectorXd xt = clamp_box(x + step * d, p.lower, p.upper);
        const Eigen::VectorXd dx = xt - x;
        if (dx.lpNorm<Eigen::Infinity>() < 1e-16) break;
        const double decrease = g_al.dot(dx);
        double phit;
        try {
          phit = merit_only(p, xt, lam, rho, scratch_c);
        } catch (const Error&) {
          step *= 0.5;
          continue;
        }
        if (std::isfinite(phit) && phit <= phi0 + 1e-4 * decrease && decrease < 0.0) {
          x = xt;
          accepted = true;
          break;
        }
        step *= 0.5;
      }
      if (!accepted) {
        direction_ok = false;
        mu = (mu == 0.0) ? 1e-6 : mu * 100.0;
        if (attempt == 13) {
          sol.status = NlpStatus::LineSearchFail;
        }
        continue;
      }
    }

    if (!direction_ok) {
      if (sol.status != NlpStatus::LineSearchFail) sol.status = NlpStatus::LineSearchFail;
      break;
    }

    // refresh evaluation; BFGS update on the dense path
    const Eigen::VectorXd gal_prev = g_al;
    Evaluation ev_new;
    evaluate(p, x, ev_new);
    if (!banded) {
      const Eigen::VectorXd s_vec = x - x_prev;
      Eigen::VectorXd g_al_new = ev_new.grad;
      if (p.m > 0) {
        for (const Entry& en : ev_new.jac) {
          g_al_new[en.col] += en.value * (lam[en.row] + rho * ev_new.c[en.row]);
        }
      }
      const Eigen::VectorXd y_vec = g_al_new - gal_prev;
      const double sy = s_vec.dot(y_vec);
      const double sbs = s_vec.dot(bfgs * s_vec);
      if (sy > 1e-12 * s_vec.norm() * y_vec.norm() && sbs > 0.0) {
        // damped BFGS (Powell)
        Eigen::VectorXd yd = y_vec;
        if (sy < 0.2 * sbs) {
          const double theta = 0.8 * sbs / (sbs - sy);
          yd = theta * y_vec + (1.0 - theta) * (bfgs * s_vec);
        }
        const double syd = s_vec.dot(yd);
        const Eigen::VectorXd bs = bfgs * s_vec;
        bfgs += (yd * yd.transpose()) / syd - (bs * bs.transpose()) / sbs;
      }
    }
    ev = std::move(ev_new);
    ++iter;

    if (opt.trace) {
      IterRecord rec;
      rec.iteration = iter;
      rec.objective = ev.f;
      rec.merit = merit_at(ev);
      rec.eq_violation = (p.m > 0) ? ev.c.lpNorm<Eigen::Infinity>() : 0.0;
      rec.merit_phase = merit_phase;
      opt.trace->push_back(rec);
    }
  }

  sol.x = x;
  sol.objective = ev.f;
  sol.eq_residual_norm = (p.m > 0) ? ev.c.lpNorm<Eigen::Infinity>() : 0.0;
  sol.stationarity = pg_norm(al_gradient(ev));
  sol.iterations = iter;
  if (opt.multipliers) *opt.multipliers = lam;
  sol.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                          t_start)
                    .count();
  return sol;
}

double check_gradients(const NlpProblem& p, const Eigen::VectorXd& point, double h) {
  Eigen::VectorXd grad(p.n);
  grad.setZero();
  p.objective(point, &grad);
  Eigen::VectorXd x = point;
  double worst = 0.0;
  for (int i = 0; i < p.n; ++i) {
    const double hi = h * std::max(1.0, std::abs(point[i]));
    x[i] = point[i] + hi;
    const double fp = p.objective(x, nullptr);
    x[i] = point[i] - hi;
    const double fm = p.objective(x, nullptr);
    x[i] = point[i];
    const double fd = (fp - fm) / (2.0 * hi);
    const double denom = std::max({1.0, std::abs(fd), std::abs(grad[i])});
    worst = std::max(worst, std::abs(fd - grad[i]) / denom);
  }
  return worst;
}

double check_jacobian(const NlpProblem& p, const Eigen::VectorXd& point, double h) {
  if (p.m == 0) return 0.0;
  Eigen::VectorXd c0(p.m);
  std::vector<Entry> entries;
  p.equalities(point, c0, &entries);
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(p.m, p.n);
  for (const Entry& en : entries) jac(en.row, en.col) += en.value;

  Eigen::VectorXd x = point;
  Eigen::VectorXd cp(p.m), cm(p.m);
  double worst = 0.0;
  for (int j = 0; j < p.n; ++j) {
    const double hj = h * std::max(1.0, std::abs(point[j]));
    x[j] = point[j] + hj;
    p.equalities(x, cp, nullptr);
    x[j] = point[j] - hj;
    p.equalities(x, cm, nullptr);
    x[j] = point[j];
    for (int i = 0; i < p.m; ++i) {
      const double fd = (cp[i] - cm[i]) / (2.0 * hj);
      const double denom = std::max({1.0, std::abs(fd), std::abs(jac(i, j))});
      worst = std::max(worst, std::abs(fd - jac(i, j)) / denom);
    }
  }
  return worst;
}

}  // namespace vpmpcc
