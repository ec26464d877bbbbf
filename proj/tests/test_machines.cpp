#include <cmath>
#include <numbers>

#include <doctest.h>

#include "support.hpp"
#include "windgrid/errors.hpp"

using namespace windgrid;

namespace {

SyncParams sample_params() {
  SyncParams p;
  p.m = 117.0;
  p.d = 2.0;
  p.tau = 8.0;
  p.tau_p = 0.01;
  p.kappa = 200.0;
  p.chi = 0.3;
  p.alpha = 6.0;
  p.beta = 5.0;
  p.p_m = 7.0;
  return p;
}

}  // namespace

TEST_CASE("aligned machine with equal magnitudes injects nothing") {
  const Complex v = std::polar(1.02, 0.3);
  const SyncState s{0.3, 0.0, 1.02, 0.0};
  const Complex e = sync_power(s, sample_params(), v);
  CHECK(std::abs(e) < 1e-14);
}

TEST_CASE("quadrature angle gives equal active and reactive output") {
  SyncParams p = sample_params();
  p.chi = 0.3;
  const Complex v = std::polar(1.0, 0.2);
  const SyncState s{0.2 + std::numbers::pi / 2.0, 0.0, 1.0, 0.0};
  const Complex e = sync_power(s, p, v);
  CHECK(e.real() == doctest::Approx(1.0 / 0.3).epsilon(1e-12));
  CHECK(e.imag() == doctest::Approx(1.0 / 0.3).epsilon(1e-12));
}

TEST_CASE("printed power form is selectable and differs off the origin") {
  const SyncParams p = sample_params();
  const Complex v = std::polar(1.0, 0.1);
  const SyncState s{0.5, 0.0, 1.1, 0.0};
  const Complex a = sync_power(s, p, v, PowerForm::DifferenceAngle);
  const Complex b = sync_power(s, p, v, PowerForm::PrintedLiteral);
  CHECK(std::abs(a - b) > 1e-3);
}

TEST_CASE("torque balance and a dead regulator give zero derivatives") {
  SyncParams p = sample_params();
  const Complex v = std::polar(1.01, -0.1);
  SyncState s{0.4, 0.0, 1.05, 0.0};
  p.p_m = std::abs(v) * s.rho * std::sin(s.delta - std::arg(v)) / p.chi;
  CHECK(std::abs(sync_derivative(s, p, v, 1.0).omega) < 1e-14);
  p.kappa = 0.0;
  CHECK(sync_derivative(s, p, v, 1.3).nu == 0.0);
  CHECK_THROWS_AS(sync_derivative(s, p, Complex(0.0, 0.0), 1.0), SingularVoltage);
}

TEST_CASE("machines are at rest at the system equilibrium") {
  const auto op = support::operating_point(3.0);
  const SystemModel m = apply_setpoints(op.model, op.eq.setpoints);
  for (std::size_t k = 0; k < m.syncs.size(); ++k) {
    const SyncUnit& u = m.syncs[k];
    const PssOutput pss = pss_output(u.pss, op.eq.sync_stars[k].omega, u.pss.v_setpoint);
    const SyncState d = sync_derivative(op.eq.sync_stars[k], u.params,
                                        op.eq.v_star(static_cast<int>(k) + 1), pss.mu);
    CHECK(std::abs(d.delta) < 1e-9);
    CHECK(std::abs(d.omega) < 1e-9);
    CHECK(std::abs(d.rho) < 1e-9);
    CHECK(std::abs(d.nu) < 1e-9);
  }
}

TEST_CASE("PSS at rest passes the setpoint through") {
  PssBlock b;
  b.k_pss = 20.0;
  const PssOutput out = pss_output(b, 0.0, 1.02);
  CHECK(out.mu == 1.02);
  for (double d : out.d_state) CHECK(d == 0.0);
}

TEST_CASE("PSS step response") {
  PssBlock b;
  b.k_pss = 20.0;
  const double step = 1e-3;

  SUBCASE("initial jump equals the high-frequency gain") {
    const PssOutput out = pss_output(b, step, 1.0);
    const double expected = b.k_pss * (b.t1 / b.t2) * (b.t3 / b.t4) * step;
    CHECK(out.mu - 1.0 == doctest::Approx(expected).epsilon(1e-12));
  }

  SUBCASE("constant speed deviation washes out") {
    const PssRealization r = pss_realization(b);
    Eigen::Vector3d z = Eigen::Vector3d::Zero();
    auto f = [&](const Eigen::Vector3d& s) { return Eigen::Vector3d(r.a * s + r.b * step); };
    const double dt = 0.01;
    for (int i = 0; i < 30000; ++i) {
      const Eigen::Vector3d k1 = f(z);
      const Eigen::Vector3d k2 = f(z + 0.5 * dt * k1);
      const Eigen::Vector3d k3 = f(z + 0.5 * dt * k2);
      const Eigen::Vector3d k4 = f(z + dt * k3);
      z += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    b.state = {z(0), z(1), z(2)};
    const PssOutput out = pss_output(b, step, 1.0);
    CHECK(std::abs(out.mu - 1.0) < 1e-3 * b.k_pss * step);
  }
}

TEST_CASE("PSS realization matches the transfer function at a test frequency") {
  PssBlock b;
  b.k_pss = 15.0;
  const PssRealization r = pss_realization(b);
  const Complex s(0.0, 2.0);
  const Eigen::Matrix3cd si = s * Eigen::Matrix3cd::Identity() - r.a.cast<Complex>();
  const Complex g = (r.c.cast<Complex>() * si.inverse() * r.b.cast<Complex>())(0, 0) + r.d;
  const Complex expected = b.k_pss * b.t_w * s * (1.0 + b.t1 * s) * (1.0 + b.t3 * s) /
                           ((1.0 + b.t_w * s) * (1.0 + b.t2 * s) * (1.0 + b.t4 * s));
  CHECK(std::abs(g - expected) < 1e-10 * std::abs(expected));
}

TEST_CASE("disabled PSS holds the setpoint") {
  PssBlock b;
  b.k_pss = 20.0;
  b.enabled = false;
  const PssOutput out = pss_output(b, 0.01, 1.01);
  CHECK(out.mu == 1.01);
}
