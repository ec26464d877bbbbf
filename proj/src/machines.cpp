#include "windgrid/machines.hpp"

#include <cmath>

#include "windgrid/errors.hpp"

namespace windgrid {

void SyncParams::validate() const {
  if (!(m > 0.0) || !(tau > 0.0) || !(tau_p > 0.0) || !(chi > 0.0)) {
    throw ConfigError("synchronous machine needs m, tau, tau_p, chi > 0");
  }
  if (kappa < 0.0) throw ConfigError("synchronous machine needs kappa >= 0");
}

void PssBlock::validate() const {
  if (!(t_w > 0.0) || !(t1 > 0.0) || !(t2 > 0.0) || !(t3 > 0.0) || !(t4 > 0.0)) {
    throw ConfigError("PSS time constants must be positive");
  }
}

PssRealization pss_realization(const PssBlock& b) {
  // K (Tw s)(1 + T1 s)(1 + T3 s) / ((1 + Tw s)(1 + T2 s)(1 + T4 s))
  const double d3 = b.t_w * b.t2 * b.t4;
  const double d2 = b.t_w * b.t2 + b.t_w * b.t4 + b.t2 * b.t4;
  const double d1 = b.t_w + b.t2 + b.t4;
  const double n3 = b.k_pss * b.t_w * b.t1 * b.t3;
  const double n2 = b.k_pss * b.t_w * (b.t1 + b.t3);
  const double n1 = b.k_pss * b.t_w;

  const double a0 = 1.0 / d3, a1 = d1 / d3, a2 = d2 / d3;
  const double b1 = n1 / d3, b2 = n2 / d3, b3 = n3 / d3;

  PssRealization r;
  r.a << 0.0, 1.0, 0.0,
         0.0, 0.0, 1.0,
         -a0, -a1, -a2;
  r.b << 0.0, 0.0, 1.0;
  r.c << -b3 * a0, b1 - b3 * a1, b2 - b3 * a2;
  r.d = b3;
  return r;
}

SyncState sync_derivative(const SyncState& s, const SyncParams& p, Complex v, double mu) {
  const double vm = std::abs(v);
  if (vm == 0.0) throw SingularVoltage("sync_derivative: zero terminal voltage");
  const double phi = s.delta - std::arg(v);
  SyncState d;
  d.delta = p.omega_bar * s.omega;
  d.omega = (p.p_m - p.d * s.omega - vm * s.rho * std::sin(phi) / p.chi) / p.m;
  d.rho = (-p.alpha * s.rho + p.beta * vm * std::cos(phi) + s.nu) / p.tau;
  d.nu = (-s.nu - p.kappa * (vm - mu)) / p.tau_p;
  return d;
}

Complex sync_power(const SyncState& s, const SyncParams& p, Complex v, PowerForm form) {
  const double vm = std::abs(v);
  if (vm == 0.0) throw SingularVoltage("sync_power: zero terminal voltage");
  const double ang = std::arg(v);
  if (form == PowerForm::PrintedLiteral) {
    return {s.rho * vm * (std::sin(s.delta) - std::cos(ang)) / p.chi,
            (s.rho * s.rho - s.rho * vm * (std::cos(s.delta) - std::sin(ang))) / p.chi};
  }
  const double phi = s.delta - ang;
  return {s.rho * vm * std::sin(phi) / p.chi,
          (s.rho * s.rho - s.rho * vm * std::cos(phi)) / p.chi};
}

PssOutput pss_output(const PssBlock& b, double omega, double v_setpoint) {
  PssOutput out;
  out.mu = v_setpoint;
  if (!b.enabled) return out;
  const PssRealization r = pss_realization(b);
  const Eigen::Vector3d z(b.state[0], b.state[1], b.state[2]);
  const Eigen::Vector3d dz = r.a * z + r.b * omega;
  out.mu += r.c.dot(z) + r.d * omega;
  out.d_state = {dz(0), dz(1), dz(2)};
  return out;
}

}  // namespace windgrid
