#include <fstream>
#include <sstream>

#include <doctest.h>

#include "support.hpp"
#include "windgrid/errors.hpp"

using namespace windgrid;

TEST_CASE("equilibrium at low penetration") {
  const auto op = support::operating_point(3.0);
  CHECK(op.eq.derivative_residual < 1e-9);
  CHECK(op.eq.balance_residual < 1e-9);
  CHECK(op.eq.v_star.size() == 5);
  CHECK(op.eq.setpoints.p_m.size() == 4);
}

TEST_CASE("equilibrium is invariant without a fault") {
  const auto op = support::operating_point(3.0);
  const Scenario sc = support::scenario(3.0, 10.0, false);
  const Trajectory tr = simulate(op.model, op.eq, sc);
  const Vec& x0 = tr.states.front();
  double drift = 0.0;
  for (const Vec& x : tr.states) drift = std::max(drift, (x - x0).cwiseAbs().maxCoeff());
  CHECK(drift < 1e-6);
  CHECK(tr.times.back() == doctest::Approx(10.0));
  CHECK_FALSE(tr.aborted);
}

TEST_CASE("relative angles settle after a fault at low penetration") {
  const auto op = support::operating_point(3.0);
  Scenario sc = support::scenario(3.0, 20.0, true);
  const Trajectory tr = simulate(op.model, op.eq, sc);
  const DampingMetrics dm = damping_metrics(tr, op.eq, sc);
  CHECK(dm.settling_time <= 10.0);
  CHECK_FALSE(dm.unstable());
  CHECK(dm.max_rel_angle_pp > 1e-3);
}

TEST_CASE("metrics of an equilibrium-only trajectory are zero") {
  const auto op = support::operating_point(3.0);
  const Scenario sc = support::scenario(3.0, 1.0, false);
  const SystemDynamics dyn(op.model, op.eq);
  Trajectory tr;
  tr.layout = dyn.layout();
  for (int i = 0; i <= 10; ++i) {
    tr.times.push_back(0.1 * i);
    tr.states.push_back(dyn.initial_state());
    tr.voltages.push_back(op.eq.v_star);
    tr.injections.push_back(op.eq.e_star);
    tr.controls.push_back(Eigen::Vector2d::Zero());
  }
  const DampingMetrics dm = damping_metrics(tr, op.eq, sc);
  CHECK(dm.wind_l2 == 0.0);
  for (double l2 : dm.angle_l2) CHECK(l2 == 0.0);
  CHECK(dm.max_rel_angle_pp == 0.0);
}

TEST_CASE("high PI integral gain destabilizes the weak-grid operating point") {
  const auto op = support::operating_point(3.0, 15.0);
  Scenario sc = support::scenario(3.0, 30.0, true);
  sc.kappa_i_override = 15.0;
  const Trajectory tr = simulate_guarded(op.model, op.eq, sc);
  CHECK(damping_metrics(tr, op.eq, sc).unstable());
}

TEST_CASE("infeasible wind order fails to find an equilibrium") {
  Scenario sc = support::config().scenario;
  sc.gamma_override = 1.0;
  const SystemModel m = apply_overrides(support::config().model, sc);
  Dispatch d = support::config().dispatch;
  d.wind_order = Complex(10.0, 0.0);
  CHECK_THROWS_AS(find_equilibrium(m, d), NoConvergence);
}

TEST_CASE("overrides are applied to a copy") {
  Scenario sc = support::config().scenario;
  sc.gamma_override = 12.5;
  sc.kappa_i_override = 7.0;
  const SystemModel m = apply_overrides(support::config().model, sc);
  CHECK(m.wind.gamma == 12.5);
  CHECK(m.wind.pi.kappa_i == 7.0);
  CHECK(support::config().model.wind.gamma == 3.0);
}

TEST_CASE("growth rule on synthetic signals") {
  const auto op = support::operating_point(3.0);
  const SystemDynamics dyn(op.model, op.eq);
  const Scenario sc = support::scenario(3.0, 30.0, true);
  auto build = [&](double rate) {
    Trajectory tr;
    tr.layout = dyn.layout();
    for (int i = 0; i <= 3000; ++i) {
      const double t = 0.01 * i;
      Vec x = dyn.initial_state();
      if (t >= sc.t_fault) {
        x(tr.layout.sync(1)) += 0.01 * std::exp(rate * (t - sc.t_fault)) * std::sin(3.0 * t);
      }
      tr.times.push_back(t);
      tr.states.push_back(x);
      tr.controls.push_back(Eigen::Vector2d::Zero());
    }
    return damping_metrics(tr, op.eq, sc);
  };
  CHECK(build(0.05).growth_detected);
  CHECK_FALSE(build(-0.3).growth_detected);
  const DampingMetrics decaying = build(-0.3);
  const double zeta = 0.3 / std::sqrt(0.3 * 0.3 + 9.0);
  CHECK(decaying.damping_ratio == doctest::Approx(zeta).epsilon(0.05));
}

TEST_CASE("trajectory CSV header names every column") {
  const auto op = support::operating_point(3.0);
  const Scenario sc = support::scenario(3.0, 0.2, false);
  const Trajectory tr = simulate(op.model, op.eq, sc);
  const std::string path = "test_traj.csv";
  write_trajectory_csv(path, tr, op.model);
  std::ifstream in(path);
  std::string header, row;
  std::getline(in, header);
  std::getline(in, row);
  auto count = [](const std::string& s) { return std::count(s.begin(), s.end(), ',') + 1; };
  CHECK(count(header) == count(row));
  CHECK(header.rfind("t,", 0) == 0);
  CHECK(header.find("rel_G2_G1") != std::string::npos);
  CHECK(static_cast<std::size_t>(count(header)) == trajectory_columns(op.model, tr.layout).size());
}
