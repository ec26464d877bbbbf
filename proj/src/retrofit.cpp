#include "windgrid/retrofit.hpp"

#include "windgrid/errors.hpp"

namespace windgrid {

LqrWeights lqr_preset(std::string_view name) {
  LqrWeights w;
  if (name == "low") {
    w.q = 1.0;
  } else if (name == "mid") {
    w.q = 10.0;
  } else if (name == "high") {
    w.q = 100.0;
  } else {
    throw ConfigError("unknown LQR preset '" + std::string(name) + "' (use low, mid or high)");
  }
  return w;
}

ZetaReport verify_zeta_stability(const LinearizedPlant& plant, const Mat& k_gain,
                                 const Mat& l_gain) {
  const Mat& a = plant.a;
  const Mat& b = plant.b;
  const Mat& c = plant.c;
  const auto n = a.rows();
  if (k_gain.rows() != b.cols() || k_gain.cols() != n || l_gain.rows() != n ||
      l_gain.cols() != c.rows()) {
    throw DimensionMismatch("verify_zeta_stability: gain dimensions disagree with the plant");
  }
  ZetaReport rep;
  rep.closed_loop.resize(2 * n, 2 * n);
  rep.closed_loop << a, -b * k_gain, l_gain * c, a - b * k_gain - l_gain * c;
  rep.abscissa = spectral_abscissa(rep.closed_loop);
  rep.pass = rep.abscissa < 0.0;
  return rep;
}

RetrofitController make_retrofit(const LinearizedPlant& plant, const WindPlantModel& wind,
                                 const Mat& k_gain, const Mat& l_gain, FeedbackMap map) {
  if (k_gain.rows() != plant.b.cols() || k_gain.cols() != plant.a.rows()) {
    throw DimensionMismatch("retrofit gain K must be 2x9");
  }
  if (l_gain.rows() != plant.a.rows() || l_gain.cols() != plant.c.rows()) {
    throw DimensionMismatch("retrofit observer gain L must be 9x6");
  }
  if (map == FeedbackMap::ObserverLqr) {
    if (!(spectral_abscissa(plant.a - plant.b * k_gain) < 0.0)) {
      throw ControllerRejected("A - B K is not Hurwitz");
    }
    if (!(spectral_abscissa(plant.a - l_gain * plant.c) < 0.0)) {
      throw ControllerRejected("A - L C is not Hurwitz");
    }
  } else {
    const Mat proj = plant.c.transpose() * plant.c;
    if (!(spectral_abscissa(plant.a - plant.b * k_gain * proj) < 0.0)) {
      throw ControllerRejected("static feedback A - B K lift(C) is not Hurwitz");
    }
  }
  RetrofitController rc;
  rc.plant = plant;
  rc.wind = wind;
  rc.k_gain = k_gain;
  rc.l_gain = l_gain;
  rc.map = map;
  return rc;
}

RetrofitController design_retrofit(const LinearizedPlant& plant, const WindPlantModel& wind,
                                   const LqrWeights& w, FeedbackMap map) {
  const auto n = plant.a.rows();
  const auto m = plant.b.cols();
  const auto p = plant.c.rows();
  const RiccatiSolution lqr =
      solve_riccati(plant.a, plant.b, w.q * Mat::Identity(n, n), w.r * Mat::Identity(m, m));
  const Mat l = design_observer(plant.a, plant.c, w.obs_w * Mat::Identity(n, n),
                                w.obs_v * Mat::Identity(p, p));
  return make_retrofit(plant, wind, lqr.k, l, map);
}

RetrofitController design_retrofit(const SystemModel& m, const EquilibriumPoint& eq,
                                   const LqrWeights& w, FeedbackMap map) {
  const SystemModel tuned = apply_setpoints(m, eq.setpoints);
  return design_retrofit(linearize_wind(tuned, eq), tuned.wind, w, map);
}

CompensatorOutput compensator_step(const RetrofitController& rc, const Vec& x_hat, const Vec& y,
                                   double v1_mag) {
  const LinearizedPlant& lp = rc.plant;
  CompensatorOutput out;
  out.dx_hat = lp.a * x_hat + residue_f(lp, rc.wind, y - lp.y_star) + lp.r * (v1_mag - lp.v1_star);
  out.y_hat = lp.c * x_hat + lp.y_star;
  return out;
}

ControlOutput control_output(const RetrofitController& rc, const Vec& x_obs, const Vec& y,
                             const Vec& y_hat) {
  const LinearizedPlant& lp = rc.plant;
  const Vec d = y - y_hat;
  ControlOutput out;
  if (rc.map == FeedbackMap::StaticGain) {
    out.u = -rc.k_gain * Vec(lift_measurement(d));
    out.dx_obs = Vec::Zero(x_obs.size());
    return out;
  }
  out.u = -rc.k_gain * x_obs;
  out.dx_obs = lp.a * x_obs + lp.b * out.u + rc.l_gain * (d - lp.c * x_obs);
  return out;
}

}  // namespace windgrid
