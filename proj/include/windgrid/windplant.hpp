#pragma once

#include "windgrid/types.hpp"

namespace windgrid {

struct TurbineParams {
  double m_r = 103.0;
  double m_g = 7.3e-4;
  double d_r = 0.05;
  double d_g = 5.7e-6;
  double k_c = 0.27;
  double d_c = 1.78;
  double n_g = 90.0;
  double p_a = 2.5e-2;
  double omega_bar = kSyncSpeed;

  void validate() const;
};

struct DfigParams {
  double l_s = 4.8365;
  double l_r = 4.8344;
  double l_m = 4.6978;
  double r_s = 0.0111;
  double r_r = 0.0108;
  int n_p = 4;  // carried for completeness; no equation uses it

  double k1() const { return l_s * l_r - l_m * l_m; }
  double k2() const { return l_m * l_m; }
  double k3() const { return l_s * l_m; }
  double k4() const { return l_r * l_s; }
  double k5() const { return l_r * l_m; }

  void validate() const;
};

struct PiController {
  double kappa_p = 1.0;
  double kappa_i = 5.2;
  double omega_g_star = 0.0;
  double i_dr_star = 0.0;
  double i_qr_star = 0.0;
};

struct WindPlantModel {
  TurbineParams turbine;
  DfigParams dfig;
  PiController pi;
  double gamma = 1.0;

  void validate() const;
};

// x = [omega_r, omega_g, theta, i_dr, i_qr, i_ds, i_qs, xi_d, xi_q]
inline constexpr int kWindStates = 9;
inline constexpr int kWindOutputs = 6;
using WindVec = Eigen::Matrix<double, kWindStates, 1>;

namespace wind_index {
inline constexpr int omega_r = 0;
inline constexpr int omega_g = 1;
inline constexpr int theta = 2;
inline constexpr int i_dr = 3;
inline constexpr int i_qr = 4;
inline constexpr int i_ds = 5;
inline constexpr int i_qs = 6;
inline constexpr int xi_d = 7;
inline constexpr int xi_q = 8;
}  // namespace wind_index

struct DfigMatrices {
  Eigen::Matrix4d a;
  Eigen::Vector4d r;
  Eigen::Matrix<double, 4, 2> b;
};

DfigMatrices dfig_matrices(const DfigParams& p, double omega_g);

Eigen::Matrix3d turbine_matrix(const TurbineParams& p);

// Electrical torque L_m (i_qs i_dr - i_ds i_qr).
double dfig_torque(const DfigParams& p, const WindVec& x);

struct WindDerivative {
  WindVec dx;
  Complex injection;
  double torque = 0.0;
};

WindDerivative wind_vector_field(const WindPlantModel& m, const WindVec& x, double v1_mag,
                                 const Eigen::Vector2d& u = Eigen::Vector2d::Zero());

Complex wind_output(const WindPlantModel& m, const WindVec& x, double v1_mag);

// Constant input matrix [0; B_i; 0; 0] and terminal-voltage column [0; R_i; 0; 0].
Eigen::Matrix<double, kWindStates, 2> wind_input_matrix(const DfigParams& p);
WindVec wind_voltage_column(const DfigParams& p);

// Measured outputs y = (omega_r, omega_g, i).
Eigen::Matrix<double, kWindOutputs, kWindStates> wind_output_selector();

struct WindEquilibrium {
  WindVec x;
  PiController pi;  // input controller with setpoints filled in
};

// Steady state delivering e1 = gamma |v1| order at terminal magnitude v1_mag,
// so that i_qs = Re(order) and i_ds = Im(order). The PI setpoints are set to
// the resulting rotor currents and generator speed.
WindEquilibrium wind_equilibrium(const WindPlantModel& m, double v1_mag, Complex order);

}  // namespace windgrid
