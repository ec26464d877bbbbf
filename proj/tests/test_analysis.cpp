#include <algorithm>
#include <random>

#include <doctest.h>

#include "support.hpp"
#include "windgrid/errors.hpp"

using namespace windgrid;
namespace wi = wind_index;

namespace {

struct WindFixture {
  WindPlantModel model;
  LinearizedPlant lp;
};

WindFixture wind_fixture(double gamma) {
  const auto op = support::operating_point(gamma);
  const SystemModel m = apply_setpoints(op.model, op.eq.setpoints);
  return {m.wind, linearize_wind(m, op.eq)};
}

WindVec field(const WindFixture& f, const WindVec& x) {
  return wind_vector_field(f.model, x, f.lp.v1_star).dx;
}

}  // namespace

TEST_CASE("linearization has a quadratic Taylor remainder") {
  const WindFixture f = wind_fixture(10.0);
  std::mt19937 rng(7);
  std::normal_distribution<double> n01;
  const WindVec f0 = field(f, f.lp.x_star);
  for (int trial = 0; trial < 10; ++trial) {
    WindVec v;
    for (int i = 0; i < kWindStates; ++i) v(i) = n01(rng);
    v.normalize();
    auto remainder = [&](double h) {
      return (field(f, f.lp.x_star + h * v) - f0 - h * f.lp.a * v).norm();
    };
    const double r1 = remainder(1e-3);
    const double r2 = remainder(1e-4);
    CHECK(r1 < 1e-4);
    CHECK(r2 < r1 / 30.0);
  }
}

TEST_CASE("integrator rows of the linearization") {
  const WindFixture f = wind_fixture(3.0);
  for (auto [row, col] : {std::pair{wi::xi_d, wi::i_dr}, std::pair{wi::xi_q, wi::i_qr}}) {
    for (int j = 0; j < kWindStates; ++j) {
      if (j == col) {
        CHECK(f.lp.a(row, j) == doctest::Approx(f.model.pi.kappa_i).epsilon(1e-6));
      } else {
        CHECK(std::abs(f.lp.a(row, j)) < 1e-9);
      }
    }
  }
}

TEST_CASE("mechanical block of the linearization") {
  const WindFixture f = wind_fixture(3.0);
  const TurbineParams& t = f.model.turbine;
  const Eigen::Matrix3d a_eta = turbine_matrix(t);
  const double w_r = f.lp.x_star(wi::omega_r);
  Eigen::Matrix3d expected = a_eta;
  expected(0, 0) -= 2.0 * t.p_a / (t.omega_bar * t.m_r * w_r * w_r);
  CHECK((f.lp.a.topLeftCorner<3, 3>() - expected).cwiseAbs().maxCoeff() < 1e-6);
  const double lm = f.model.dfig.l_m;
  const double scale = -2.0 / (t.omega_bar * t.m_g);
  CHECK(f.lp.a(1, wi::i_dr) == doctest::Approx(scale * lm * f.lp.x_star(wi::i_qs)).epsilon(1e-5));
  CHECK(f.lp.a(1, wi::i_qs) == doctest::Approx(scale * lm * f.lp.x_star(wi::i_dr)).epsilon(1e-5));
}

TEST_CASE("residue function") {
  const WindFixture f = wind_fixture(10.0);
  const auto c = wind_output_selector();

  SUBCASE("zero at equilibrium") {
    CHECK(residue_f(f.lp, f.model, Vec::Zero(kWindOutputs)).cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("decomposition identity") {
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const WindVec f0 = field(f, f.lp.x_star);
    for (int trial = 0; trial < 20; ++trial) {
      WindVec xt;
      for (int i = 0; i < kWindStates; ++i) xt(i) = 1e-3 * u(rng);
      const WindVec lhs = field(f, f.lp.x_star + xt) - f0;
      const Vec rhs = f.lp.a * xt + residue_f(f.lp, f.model, c * xt);
      CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-10);
    }
  }

  SUBCASE("vanishes faster than linearly") {
    Vec d(kWindOutputs);
    d << 1e-3, 1e-2, 0.01, -0.02, 0.005, 0.004;
    const double r1 = residue_f(f.lp, f.model, d).norm();
    const double r2 = residue_f(f.lp, f.model, 0.1 * d).norm();
    CHECK(r2 < 0.2 * r1);
  }
}

TEST_CASE("residue is blind to unmeasured coordinates") {
  const WindFixture f = wind_fixture(10.0);
  const WindVec f0 = field(f, f.lp.x_star);
  WindVec base = WindVec::Zero();
  base(wi::omega_g) = 1e-3;
  base(wi::i_dr) = 2e-3;
  base(wi::i_qs) = -1e-3;
  auto res = [&](const WindVec& xt) {
    return Vec(field(f, f.lp.x_star + xt) - f0 - f.lp.a * xt);
  };
  const Vec r0 = res(base);
  for (int k : {wi::theta, wi::xi_d, wi::xi_q}) {
    WindVec shifted = base;
    shifted(k) += 1e-3;
    CHECK((res(shifted) - r0).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("serial and parallel Jacobians agree bit for bit") {
  const auto op = support::operating_point(20.0);
  const SystemDynamics dyn(op.model, op.eq);
  const Mat js = system_jacobian(dyn, dyn.initial_state(), Exec::Serial);
  const Mat jp = system_jacobian(dyn, dyn.initial_state(), Exec::Parallel);
  CHECK(js.rows() == dyn.layout().size());
  CHECK((js - jp).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("spectrum at low penetration") {
  const auto op = support::operating_point(3.0);
  const Spectrum s = system_spectrum(op.model, op.eq);
  CHECK(s.abscissa() < 0.0);
  const Complex seed(-0.055, 1.0);
  const auto nearest = *std::min_element(
      s.eigenvalues.begin(), s.eigenvalues.end(),
      [&](Complex a, Complex b) { return std::abs(a - seed) < std::abs(b - seed); });
  CHECK(nearest.real() < -0.5 * 0.055);
  CHECK(nearest.real() > -1.5 * 0.055);
}

TEST_CASE("heavily damped machine contributes a fast real mode") {
  Scenario sc = support::config().scenario;
  sc.gamma_override = 3.0;
  SystemModel m = apply_overrides(support::config().model, sc);
  m.syncs[2].params.d = 2.0e4;
  const EquilibriumPoint eq = find_equilibrium(m, support::config().dispatch);
  const Spectrum s = system_spectrum(m, eq);
  const double target = -m.syncs[2].params.d / m.syncs[2].params.m;
  double best = 1e9;
  for (Complex l : s.eigenvalues) best = std::min(best, std::abs(l - target));
  CHECK(best < 0.02 * std::abs(target));
}

TEST_CASE("relative angle reduction removes the reference angle") {
  const auto op = support::operating_point(3.0);
  const SystemDynamics dyn(op.model, op.eq);
  const Mat j = system_jacobian(dyn, dyn.initial_state(), Exec::Serial);
  const Mat r = relative_angle_reduction(j, dyn.layout());
  CHECK(r.rows() == j.rows() - 1);
  CHECK(r.cols() == j.cols() - 1);
}

TEST_CASE("eigen sweep tracks a continuous pair") {
  const SystemModel& base = support::config().model;
  const std::vector<double> gammas{3.0, 10.0, 17.0, 24.0, 30.0};
  const SweepResult serial =
      eigen_sweep(base, support::config().dispatch, gammas, {-0.055, 1.0}, Exec::Serial);
  const SweepResult parallel =
      eigen_sweep(base, support::config().dispatch, gammas, {-0.055, 1.0}, Exec::Parallel);
  REQUIRE(serial.tracked.values.size() == gammas.size());
  for (std::size_t i = 0; i < gammas.size(); ++i) {
    CHECK(serial.tracked.values[i] == parallel.tracked.values[i]);
  }
  for (std::size_t i = 1; i < gammas.size(); ++i) {
    CHECK(serial.tracked.values[i].real() >= serial.tracked.values[i - 1].real());
  }
  REQUIRE(serial.tracked.critical_gamma.has_value());
  CHECK(*serial.tracked.critical_gamma > 17.0);
  CHECK(*serial.tracked.critical_gamma < 30.0);
}

TEST_CASE("tracking a single point reports no crossing") {
  const SweepResult r =
      eigen_sweep(support::config().model, support::config().dispatch, {3.0}, {-0.055, 1.0});
  CHECK(r.spectra.size() == 1);
  CHECK(r.spectra[0].abscissa() < 0.0);
  CHECK_FALSE(r.tracked.critical_gamma.has_value());
}

TEST_CASE("scalar Riccati equations") {
  Mat a(1, 1), b(1, 1), q(1, 1), r(1, 1);
  a << -1.0;
  b << 1.0;
  q << 0.0;
  r << 1.0;
  RiccatiSolution s = solve_riccati(a, b, q, r);
  CHECK(std::abs(s.p(0, 0)) < 1e-12);
  CHECK(std::abs(s.k(0, 0)) < 1e-12);

  a << 1.0;
  q << 1.0;
  s = solve_riccati(a, b, q, r);
  CHECK(s.p(0, 0) == doctest::Approx(1.0 + std::sqrt(2.0)).epsilon(1e-12));
  CHECK(s.k(0, 0) == doctest::Approx(1.0 + std::sqrt(2.0)).epsilon(1e-12));
}

TEST_CASE("Riccati on the wind plant") {
  const WindFixture f = wind_fixture(20.0);
  const Mat q = Mat::Identity(9, 9);
  const Mat r = Mat::Identity(2, 2);
  const RiccatiSolution s = solve_riccati(f.lp.a, f.lp.b, q, r);
  CHECK(riccati_residual(f.lp.a, f.lp.b, q, r, s.p) < 1e-8);
  CHECK((s.p - s.p.transpose()).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(spectral_abscissa(f.lp.a - f.lp.b * s.k) < 0.0);
}

TEST_CASE("unstabilizable pair is rejected") {
  Mat a(2, 2), b(2, 1);
  a << 1.0, 0.0, 0.0, -1.0;
  b << 0.0, 1.0;
  CHECK_THROWS_AS(solve_riccati(a, b, Mat::Identity(2, 2), Mat::Identity(1, 1)), NotStabilizable);
}

TEST_CASE("Lyapunov solver") {
  Mat a(3, 3);
  a << -1.0, 2.0, 0.0, -2.0, -1.0, 0.5, 0.0, 0.0, -3.0;
  const Mat q = Mat::Identity(3, 3);
  const Mat x = solve_lyapunov(a, q);
  CHECK((a.transpose() * x + x * a + q).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("observer design") {
  const WindFixture f = wind_fixture(20.0);
  const Mat w = Mat::Identity(9, 9);
  const Mat v = Mat::Identity(6, 6);
  const Mat l = design_observer(f.lp.a, f.lp.c, w, v);
  CHECK(l.rows() == 9);
  CHECK(l.cols() == 6);
  CHECK(spectral_abscissa(f.lp.a - l * f.lp.c) < spectral_abscissa(f.lp.a));
  CHECK(spectral_abscissa(f.lp.a - l * f.lp.c) < 0.0);

  const RiccatiSolution dual = solve_riccati(f.lp.a.transpose(), f.lp.c.transpose(), w, v);
  CHECK((l - dual.k.transpose()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("full-state observer with heavy weight is fast") {
  Mat a(2, 2);
  a << -0.1, 1.0, -1.0, -0.1;
  const Mat c = Mat::Identity(2, 2);
  const Mat l = design_observer(a, c, 100.0 * Mat::Identity(2, 2), Mat::Identity(2, 2));
  CHECK(spectral_abscissa(a - l * c) < 5.0 * spectral_abscissa(a));
  CHECK(std::abs(l(0, 0)) > std::abs(l(0, 1)));
  CHECK(std::abs(l(1, 1)) > std::abs(l(1, 0)));
}

TEST_CASE("undetectable pair is rejected") {
  Mat a(2, 2), c(1, 2);
  a << 1.0, 0.0, 0.0, -1.0;
  c << 0.0, 1.0;
  CHECK_THROWS_AS(design_observer(a, c, Mat::Identity(2, 2), Mat::Identity(1, 1)),
                  NotDetectable);
}
