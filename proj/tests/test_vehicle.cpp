#include <doctest.h>

#include <cmath>
#include <numbers>

#include "vpmpcc/error.hpp"
#include "vpmpcc/vehicle.hpp"

using namespace vpmpcc;

namespace {

// fine-step RK4 oracle for the kinematic bicycle
KinState rk4_kin(KinState z, const Control& u, double t_total, double dt, double L) {
  const int steps = static_cast<int>(std::round(t_total / dt));
  for (int i = 0; i < steps; ++i) {
    auto f = [&](const KinState& s) { return kin_derivative(s, u, L); };
    auto adv = [&](const KinState& s, const KinState& d, double h) {
      return KinState{s.x + h * d.x, s.y + h * d.y, s.phi + h * d.phi, s.s + h * d.s};
    };
    const KinState k1 = f(z);
    const KinState k2 = f(adv(z, k1, 0.5 * dt));
    const KinState k3 = f(adv(z, k2, 0.5 * dt));
    const KinState k4 = f(adv(z, k3, dt));
    z.x += dt / 6.0 * (k1.x + 2 * k2.x + 2 * k3.x + k4.x);
    z.y += dt / 6.0 * (k1.y + 2 * k2.y + 2 * k3.y + k4.y);
    z.phi += dt / 6.0 * (k1.phi + 2 * k2.phi + 2 * k3.phi + k4.phi);
    z.s += dt / 6.0 * (k1.s + 2 * k2.s + 2 * k3.s + k4.s);
  }
  return z;
}

}  // namespace

TEST_CASE("kin_derivative matches the model equations") {
  SUBCASE("straight motion") {
    const KinState d = kin_derivative({0, 0, 0, 0}, {1.0, 0.0, 2.0}, 0.32);
    CHECK(d.x == doctest::Approx(1.0));
    CHECK(d.y == doctest::Approx(0.0));
    CHECK(d.phi == doctest::Approx(0.0));
    CHECK(d.s == doctest::Approx(2.0));
  }
  SUBCASE("axis alignment") {
    const KinState d = kin_derivative({0, 0, std::numbers::pi / 2, 0}, {3.0, 0.0, 1.0}, 0.32);
    CHECK(std::abs(d.x) < 1e-15);
    CHECK(d.y == doctest::Approx(3.0));
    CHECK(d.phi == doctest::Approx(0.0));
  }
  SUBCASE("yaw rate from steering") {
    const KinState d = kin_derivative({0, 0, 0, 0}, {2.0, 0.4, 2.0}, 0.32);
    CHECK(d.phi == doctest::Approx(2.0 * std::tan(0.4) / 0.32));
  }
  SUBCASE("steering range") {
    CHECK_THROWS_AS(kin_derivative({0, 0, 0, 0}, {1.0, 1.6, 1.0}, 0.32), Error);
  }
}

TEST_CASE("kin_derivative is rotation equivariant") {
  const double angles[] = {0.3, 1.1, 2.9, -0.7};
  const Control u{2.5, 0.2, 2.0};
  const KinState base{1.0, -2.0, 0.4, 5.0};
  const KinState d0 = kin_derivative(base, u, 0.32);
  for (double a : angles) {
    const double c = std::cos(a), s = std::sin(a);
    const KinState rotated{c * base.x - s * base.y, s * base.x + c * base.y, base.phi + a,
                           base.s};
    const KinState d1 = kin_derivative(rotated, u, 0.32);
    CHECK(d1.x == doctest::Approx(c * d0.x - s * d0.y).epsilon(1e-12));
    CHECK(d1.y == doctest::Approx(s * d0.x + c * d0.y).epsilon(1e-12));
    CHECK(d1.phi == doctest::Approx(d0.phi).epsilon(1e-12));
    CHECK(d1.s == doctest::Approx(d0.s).epsilon(1e-12));
  }
}

TEST_CASE("kin_euler_step") {
  SUBCASE("linear advance") {
    const KinState z = kin_euler_step({0, 0, 0, 0}, {1.0, 0.0, 1.0}, 0.1, 0.32);
    CHECK(z.x == doctest::Approx(0.1));
    CHECK(z.s == doctest::Approx(0.1));
  }
  SUBCASE("zero controls fix the state") {
    const KinState z0{3.0, 4.0, 0.7, 2.0};
    const KinState z = kin_euler_step(z0, {0.0, 0.0, 0.0}, 0.1, 0.32);
    CHECK(z.x == z0.x);
    CHECK(z.y == z0.y);
    CHECK(z.phi == z0.phi);
    CHECK(z.s == z0.s);
  }
  SUBCASE("constant turn against a fine RK4 oracle") {
    const Control u{2.0, 0.3, 2.0};
    const double ts = 0.1;
    KinState euler{0, 0, 0, 0};
    for (int i = 0; i < 10; ++i) euler = kin_euler_step(euler, u, ts, 0.32);
    const KinState exact = rk4_kin({0, 0, 0, 0}, u, 10 * ts, ts / 100.0, 0.32);
    // explicit Euler carries an O(Ts) global error; the bound is loose but
    // scales out gross sign/rate mistakes
    const double err = std::hypot(euler.x - exact.x, euler.y - exact.y);
    CHECK(err < 2.0 * ts);
    CHECK(err > 1e-6);  // the oracle differs from Euler, so the gap is real
  }
  SUBCASE("repeated straight steps accumulate exactly") {
    // binary-representable speed and step keep the addition exact
    const Control u{1.0, 0.0, 1.0};
    const double ts = 0.125;
    KinState z{0, 0, 0, 0};
    for (int i = 0; i < 64; ++i) z = kin_euler_step(z, u, ts, 0.32);
    CHECK(z.x == 64 * 0.125);
    CHECK(z.y == 0.0);
  }
}

TEST_CASE("dyn_step basics") {
  const DynParams p;

  SUBCASE("rest is an equilibrium") {
    DynState st;
    const DynState next = dyn_step(st, {0.0, 0.0, 0.0}, p, 0.01);
    CHECK(next.x == doctest::Approx(0.0));
    CHECK(next.vx == doctest::Approx(0.0));
    CHECK(next.vy == doctest::Approx(0.0));
    CHECK(next.omega == doctest::Approx(0.0));
  }

  SUBCASE("straight driving stays straight") {
    DynState st;
    st.vx = 2.0;
    const DynState next = dyn_step(st, {2.0, 0.0, 2.0}, p, 0.01);
    CHECK(next.x == doctest::Approx(2.0 * 0.01).epsilon(1e-9));
    CHECK(next.vy == doctest::Approx(0.0));
    CHECK(next.omega == doctest::Approx(0.0));
    CHECK(next.y == doctest::Approx(0.0));
  }
}

TEST_CASE("dyn_step steady-state cornering matches the linear-bicycle formula") {
  const DynParams p;
  const double v = 3.0;
  const double delta = 0.05;

  DynState st;
  st.vx = v;
  const Control u{v, delta, v};
  for (int i = 0; i < 4000; ++i) st = dyn_step(st, u, p, 0.01);

  const double L = p.wheelbase();
  const double k_us = p.mass * (p.lr * p.cr - p.lf * p.cf) / (L * p.cf * p.cr);
  const double omega_expect = v * delta / (L + k_us * v * v);
  CHECK(st.omega == doctest::Approx(omega_expect).epsilon(0.02));
}

TEST_CASE("dyn_step speed decays monotonically with zero command") {
  const DynParams p;
  DynState st;
  st.vx = 4.0;
  double prev = st.vx;
  for (int i = 0; i < 600; ++i) {
    st = dyn_step(st, {0.0, 0.0, 0.0}, p, 0.01);
    CHECK(st.vx <= prev + 1e-12);
    prev = st.vx;
  }
  CHECK(st.vx < 0.05);
  CHECK(st.vx >= 0.0);
}
