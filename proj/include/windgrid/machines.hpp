#pragma once

#include <array>

#include "windgrid/types.hpp"

namespace windgrid {

struct SyncParams {
  double m = 0.0;
  double d = 0.0;
  double tau = 0.0;
  double tau_p = 0.0;
  double kappa = 0.0;
  double chi = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  double p_m = 0.0;
  double omega_bar = kSyncSpeed;

  void validate() const;
};

struct SyncState {
  double delta = 0.0;
  double omega = 0.0;
  double rho = 0.0;
  double nu = 0.0;
};

// Washout followed by two lead-lag stages, realized as a single third-order
// transfer function in controllable canonical form.
struct PssBlock {
  double k_pss = 0.0;
  double t_w = 10.0;
  double t1 = 0.05;
  double t2 = 0.02;
  double t3 = 3.0;
  double t4 = 5.4;
  double v_setpoint = 1.0;
  bool enabled = true;
  std::array<double, 3> state{0.0, 0.0, 0.0};

  void validate() const;
};

struct PssRealization {
  Eigen::Matrix3d a;
  Eigen::Vector3d b;
  Eigen::RowVector3d c;
  double d = 0.0;
};

PssRealization pss_realization(const PssBlock& b);

enum class PowerForm {
  // e = rho|v|sin(delta - angle v)/chi + j(rho^2 - rho|v|cos(delta - angle v))/chi
  DifferenceAngle,
  // Trigonometric form with sin(delta) - cos(angle v) and cos(delta) - sin(angle v).
  PrintedLiteral,
};

SyncState sync_derivative(const SyncState& s, const SyncParams& p, Complex v, double mu);

Complex sync_power(const SyncState& s, const SyncParams& p, Complex v,
                   PowerForm form = PowerForm::DifferenceAngle);

struct PssOutput {
  double mu = 0.0;
  std::array<double, 3> d_state{0.0, 0.0, 0.0};
};

PssOutput pss_output(const PssBlock& b, double omega, double v_setpoint);

}  // namespace windgrid
