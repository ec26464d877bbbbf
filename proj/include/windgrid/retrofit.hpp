#pragma once

#include <string_view>

#include "windgrid/analysis.hpp"

namespace windgrid {

enum class FeedbackMap { ObserverLqr, StaticGain };

struct LqrWeights {
  double q = 10.0;      // Q = q I
  double r = 1.0;       // R = r I
  double obs_w = 1.0;   // observer process weight, W = obs_w I
  double obs_v = 1.0;   // observer measurement weight, V = obs_v I
};

LqrWeights lqr_preset(std::string_view name);

struct RetrofitController {
  LinearizedPlant plant;
  WindPlantModel wind;
  Mat k_gain;  // 2x9
  Mat l_gain;  // 9x6
  FeedbackMap map = FeedbackMap::ObserverLqr;
  Vec x_hat = Vec::Zero(kWindStates);
  Vec x_obs = Vec::Zero(kWindStates);
};

struct ZetaReport {
  double abscissa = 0.0;
  bool pass = false;
  Mat closed_loop;
};

// Spectral abscissa of [[A, -B K], [L C, A - B K - L C]].
ZetaReport verify_zeta_stability(const LinearizedPlant& plant, const Mat& k_gain,
                                 const Mat& l_gain);

// Checks the Hurwitz conditions on A - B K and A - L C; throws ControllerRejected.
RetrofitController make_retrofit(const LinearizedPlant& plant, const WindPlantModel& wind,
                                 const Mat& k_gain, const Mat& l_gain,
                                 FeedbackMap map = FeedbackMap::ObserverLqr);

RetrofitController design_retrofit(const LinearizedPlant& plant, const WindPlantModel& wind,
                                   const LqrWeights& w,
                                   FeedbackMap map = FeedbackMap::ObserverLqr);

// Linearizes the wind plant at the system equilibrium and designs against it.
RetrofitController design_retrofit(const SystemModel& m, const EquilibriumPoint& eq,
                                   const LqrWeights& w,
                                   FeedbackMap map = FeedbackMap::ObserverLqr);

struct CompensatorOutput {
  Vec dx_hat;
  Vec y_hat;
};

CompensatorOutput compensator_step(const RetrofitController& rc, const Vec& x_hat, const Vec& y,
                                   double v1_mag);

struct ControlOutput {
  Eigen::Vector2d u = Eigen::Vector2d::Zero();
  Vec dx_obs;
};

ControlOutput control_output(const RetrofitController& rc, const Vec& x_obs, const Vec& y,
                             const Vec& y_hat);

}  // namespace windgrid
