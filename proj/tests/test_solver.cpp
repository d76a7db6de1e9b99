#include <doctest.h>

#include <cmath>

#include "vpmpcc/error.hpp"
#include "vpmpcc/solver.hpp"

using namespace vpmpcc;

namespace {

NlpProblem quadratic_1d() {
  NlpProblem p;
  p.n = 1;
  p.m = 0;
  p.lower = Eigen::VectorXd::Constant(1, 0.0);
  p.upper = Eigen::VectorXd::Constant(1, 0.5);
  p.x0 = Eigen::VectorXd::Constant(1, 0.1);
  p.objective = [](const Eigen::VectorXd& x, Eigen::VectorXd* g) {
    if (g) (*g)[0] = 2.0 * (x[0] - 1.0);
    return (x[0] - 1.0) * (x[0] - 1.0);
  };
  return p;
}

NlpProblem rosenbrock() {
  NlpProblem p;
  p.n = 2;
  p.m = 0;
  p.lower = Eigen::VectorXd::Constant(2, -std::numeric_limits<double>::infinity());
  p.upper = Eigen::VectorXd::Constant(2, std::numeric_limits<double>::infinity());
  p.x0 = Eigen::VectorXd(2);
  p.x0 << -1.2, 1.0;
  p.objective = [](const Eigen::VectorXd& x, Eigen::VectorXd* g) {
    const double a = x[1] - x[0] * x[0];
    const double b = 1.0 - x[0];
    if (g) {
      (*g)[0] = -400.0 * a * x[0] - 2.0 * b;
      (*g)[1] = 200.0 * a;
    }
    return 100.0 * a * a + b * b;
  };
  return p;
}

NlpProblem equality_qp() {
  NlpProblem p;
  p.n = 2;
  p.m = 1;
  p.lower = Eigen::VectorXd::Constant(2, -std::numeric_limits<double>::infinity());
  p.upper = Eigen::VectorXd::Constant(2, std::numeric_limits<double>::infinity());
  p.x0 = Eigen::VectorXd::Zero(2);
  p.objective = [](const Eigen::VectorXd& x, Eigen::VectorXd* g) {
    if (g) *g = 2.0 * x;
    return x.squaredNorm();
  };
  p.equalities = [](const Eigen::VectorXd& x, Eigen::VectorXd& r, std::vector<Entry>* jac) {
    r[0] = x[0] + x[1] - 1.0;
    if (jac) {
      jac->clear();
      jac->push_back({0, 0, 1.0});
      jac->push_back({0, 1, 1.0});
    }
  };
  return p;
}

}  // namespace

TEST_CASE("active bound is found exactly") {
  const NlpSolution sol = solve(quadratic_1d());
  CHECK(sol.status == NlpStatus::Converged);
  CHECK(sol.x[0] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("rosenbrock converges to the analytic optimum") {
  SolveOptions opt;
  opt.max_iter = 600;
  const NlpSolution sol = solve(rosenbrock(), opt);
  CHECK(sol.status == NlpStatus::Converged);
  CHECK(std::abs(sol.x[0] - 1.0) < 1e-6);
  CHECK(std::abs(sol.x[1] - 1.0) < 1e-6);
}

TEST_CASE("equality-constrained QP lands on the symmetric solution") {
  const NlpSolution sol = solve(equality_qp());
  CHECK(sol.status == NlpStatus::Converged);
  CHECK(std::abs(sol.x[0] - 0.5) < 1e-6);
  CHECK(std::abs(sol.x[1] - 0.5) < 1e-6);
  CHECK(sol.eq_residual_norm < 1e-6);
}

TEST_CASE("merit never increases within a phase") {
  SolveOptions opt;
  opt.max_iter = 600;
  std::vector<IterRecord> trace;
  opt.trace = &trace;
  solve(rosenbrock(), opt);
  REQUIRE(trace.size() > 5);
  for (size_t i = 1; i < trace.size(); ++i) {
    if (trace[i].merit_phase == trace[i - 1].merit_phase) {
      CHECK(trace[i].merit <= trace[i - 1].merit + 1e-12);
    }
  }
}

TEST_CASE("identical inputs give bit-identical iterate sequences") {
  SolveOptions opt;
  opt.max_iter = 200;
  std::vector<IterRecord> t1, t2;
  opt.trace = &t1;
  solve(equality_qp(), opt);
  opt.trace = &t2;
  solve(equality_qp(), opt);
  REQUIRE(t1.size() == t2.size());
  for (size_t i = 0; i < t1.size(); ++i) {
    CHECK(t1[i].objective == t2[i].objective);
    CHECK(t1[i].merit == t2[i].merit);
    CHECK(t1[i].eq_violation == t2[i].eq_violation);
  }
}

TEST_CASE("check_gradients") {
  SUBCASE("quadratic is exact to roundoff") {
    const NlpProblem p = quadratic_1d();
    CHECK(check_gradients(p, Eigen::VectorXd::Constant(1, 0.2), 1e-6) < 1e-9);
  }
  SUBCASE("corrupted gradient is detected") {
    NlpProblem p = quadratic_1d();
    p.objective = [](const Eigen::VectorXd& x, Eigen::VectorXd* g) {
      if (g) (*g)[0] = 2.0 * (x[0] - 1.0) + 0.05;  // wrong on purpose
      return (x[0] - 1.0) * (x[0] - 1.0);
    };
    CHECK(check_gradients(p, Eigen::VectorXd::Constant(1, 0.2), 1e-6) > 1e-2);
  }
  SUBCASE("debug mode throws on inconsistent derivatives") {
    NlpProblem p = quadratic_1d();
    p.objective = [](const Eigen::VectorXd& x, Eigen::VectorXd* g) {
      if (g) (*g)[0] = 2.0 * (x[0] - 1.0) + 0.05;
      return (x[0] - 1.0) * (x[0] - 1.0);
    };
    SolveOptions opt;
    opt.debug_derivative_check = true;
    CHECK_THROWS_AS(solve(p, opt), Error);
  }
}

TEST_CASE("non-finite objective is reported") {
  NlpProblem p = quadratic_1d();
  p.objective = [](const Eigen::VectorXd&, Eigen::VectorXd* g) {
    if (g) (*g)[0] = 0.0;
    return std::numeric_limits<double>::quiet_NaN();
  };
  CHECK_THROWS_AS(solve(p), Error);
}
