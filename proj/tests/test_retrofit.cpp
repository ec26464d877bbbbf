#include <doctest.h>

#include "support.hpp"
#include "windgrid/errors.hpp"

using namespace windgrid;

namespace {

struct Designed {
  support::Operating op;
  RetrofitController rc;
};

Designed designed(double gamma, const char* preset = "mid") {
  Designed d{support::operating_point(gamma), {}};
  d.rc = design_retrofit(d.op.model, d.op.eq, support::config().lqr_presets.at(preset));
  return d;
}

}  // namespace

TEST_CASE("LQR presets") {
  CHECK(lqr_preset("low").q < lqr_preset("mid").q);
  CHECK(lqr_preset("mid").q < lqr_preset("high").q);
  CHECK_THROWS_AS(lqr_preset("extreme"), ConfigError);
}

TEST_CASE("compensator is at rest at the equilibrium") {
  const Designed d = designed(20.0);
  const LinearizedPlant& lp = d.rc.plant;
  const CompensatorOutput out = compensator_step(d.rc, Vec::Zero(9), lp.y_star, lp.v1_star);
  CHECK(out.dx_hat.cwiseAbs().maxCoeff() == 0.0);
  CHECK((out.y_hat - lp.y_star).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("terminal voltage step drives the compensator through R") {
  const Designed d = designed(20.0);
  const LinearizedPlant& lp = d.rc.plant;
  const double dv = 0.01;
  const CompensatorOutput out = compensator_step(d.rc, Vec::Zero(9), lp.y_star, lp.v1_star + dv);
  CHECK((out.dx_hat - lp.r * dv).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("compensator tracks the linear plant driven by the terminal voltage") {
  const Designed d = designed(20.0);
  const LinearizedPlant& lp = d.rc.plant;
  // Linear twin x' = A x + R dv(t) with the residue removed from the compensator input.
  Vec x = Vec::Zero(9);
  Vec x_hat = Vec::Zero(9);
  const double dt = 1e-3;
  double peak = 0.0;
  for (int i = 0; i < 5000; ++i) {
    const double dv = 1e-3 * std::sin(0.004 * i);
    const Vec y = lp.y_star + lp.c * x;
    const Vec dx = lp.a * x + lp.r * dv;
    CompensatorOutput out = compensator_step(d.rc, x_hat, y, lp.v1_star + dv);
    out.dx_hat -= residue_f(lp, d.rc.wind, lp.c * x);
    x += dt * dx;
    x_hat += dt * out.dx_hat;
    peak = std::max(peak, x.norm());
  }
  CHECK(peak > 1e-6);
  CHECK((x - x_hat).norm() < 1e-12 * peak);
}

TEST_CASE("zero innovation gives zero control") {
  const Designed d = designed(20.0);
  const Vec y = d.rc.plant.y_star;
  const ControlOutput out = control_output(d.rc, Vec::Zero(9), y, y);
  CHECK(out.u.cwiseAbs().maxCoeff() == 0.0);
  CHECK(out.dx_obs.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("control law closed on the linear twin matches the zeta system") {
  const Designed d = designed(20.0);
  const LinearizedPlant& lp = d.rc.plant;
  // Probe the plant-plus-observer loop one coordinate at a time.
  Mat loop(18, 18);
  for (int j = 0; j < 18; ++j) {
    Vec z = Vec::Zero(18);
    z(j) = 1.0;
    const Vec zeta = z.head(9);
    const Vec x_obs = z.tail(9);
    const ControlOutput out = control_output(d.rc, x_obs, lp.y_star + lp.c * zeta, lp.y_star);
    loop.col(j) << lp.a * zeta + lp.b * out.u, out.dx_obs;
  }
  const ZetaReport rep = verify_zeta_stability(lp, d.rc.k_gain, d.rc.l_gain);
  CHECK((loop - rep.closed_loop).cwiseAbs().maxCoeff() < 1e-12 * rep.closed_loop.cwiseAbs().maxCoeff());
  CHECK(spectral_abscissa(loop) < 0.0);
}

TEST_CASE("zeta-system verification") {
  const Designed d = designed(20.0);
  const LinearizedPlant& lp = d.rc.plant;

  SUBCASE("designed controller passes") {
    const ZetaReport rep = verify_zeta_stability(lp, d.rc.k_gain, d.rc.l_gain);
    CHECK(rep.pass);
    CHECK(rep.abscissa < 0.0);
    CHECK(rep.closed_loop.rows() == 18);
  }

  SUBCASE("sign-flipped gain fails") {
    const Mat flipped = -d.rc.k_gain;
    CHECK_FALSE(verify_zeta_stability(lp, flipped, d.rc.l_gain).pass);
    CHECK_THROWS_AS(make_retrofit(lp, d.rc.wind, flipped, d.rc.l_gain), ControllerRejected);
  }

  SUBCASE("Hurwitz plant with zero gains passes") {
    LinearizedPlant h = lp;
    h.a = -Mat::Identity(9, 9);
    CHECK(verify_zeta_stability(h, Mat::Zero(2, 9), Mat::Zero(9, 6)).pass);
  }
}

TEST_CASE("retrofit is silent at equilibrium") {
  const Designed d = designed(20.0);
  const Scenario sc = support::scenario(20.0, 20.0, false);
  const Trajectory tr = simulate(d.op.model, d.op.eq, sc, &d.rc);
  CHECK(damping_metrics(tr, d.op.eq, sc).u_inf < 1e-9);
}

TEST_CASE("retrofit is inert for a pure grid fault") {
  const Designed d = designed(20.0);
  Scenario sc = support::scenario(20.0, 5.0, true);
  sc.wind_kick.setZero();
  const Trajectory tr = simulate(d.op.model, d.op.eq, sc, &d.rc);
  CHECK(damping_metrics(tr, d.op.eq, sc).u_inf < 1e-9);
}

TEST_CASE("zero gain reproduces the uncontrolled run sample for sample") {
  Designed d = designed(20.0);
  d.rc.k_gain.setZero();
  const Scenario sc = support::scenario(20.0, 6.0, true);
  const Trajectory with = simulate(d.op.model, d.op.eq, sc, &d.rc);
  const Trajectory without = simulate(d.op.model, d.op.eq, sc);
  REQUIRE(with.times.size() == without.times.size());
  const int n = without.layout.size();
  double diff = 0.0;
  for (std::size_t i = 0; i < with.times.size(); ++i) {
    diff = std::max(diff, (with.states[i].head(n) - without.states[i]).cwiseAbs().maxCoeff());
  }
  CHECK(diff == 0.0);
}

TEST_CASE("retrofit reduces the disturbance response at high penetration") {
  const Designed d = designed(20.0);
  const Scenario sc = support::scenario(20.0, 30.0, true);
  Scenario on = sc;
  on.retrofit_enabled = true;
  const DampingMetrics off_m = damping_metrics(simulate(d.op.model, d.op.eq, sc), d.op.eq, sc);
  const DampingMetrics on_m =
      damping_metrics(simulate(d.op.model, d.op.eq, on, &d.rc), d.op.eq, on);
  CHECK(on_m.wind_l2 < off_m.wind_l2);
  CHECK(on_m.max_rel_angle_pp < off_m.max_rel_angle_pp);
  CHECK_FALSE(on_m.unstable());
}

TEST_CASE("controller file round trip is exact and deterministic") {
  const Designed a = designed(20.0);
  const Designed b = designed(20.0);
  const Json ja = controller_json(a.rc);
  CHECK(ja.dump() == controller_json(b.rc).dump());
  const RetrofitController back = controller_from_json(ja);
  CHECK((back.k_gain - a.rc.k_gain).cwiseAbs().maxCoeff() == 0.0);
  CHECK((back.l_gain - a.rc.l_gain).cwiseAbs().maxCoeff() == 0.0);
  CHECK((back.plant.a - a.rc.plant.a).cwiseAbs().maxCoeff() == 0.0);
  CHECK(back.wind.gamma == a.rc.wind.gamma);
}
