#include "windgrid/windplant.hpp"

#include <cmath>

#include "windgrid/errors.hpp"

namespace windgrid {

namespace wi = wind_index;

void TurbineParams::validate() const {
  if (!(m_r > 0.0) || !(m_g > 0.0) || !(d_r > 0.0) || !(d_g > 0.0) || !(k_c > 0.0) ||
      !(d_c > 0.0) || !(n_g > 0.0) || !(omega_bar > 0.0) || p_a < 0.0) {
    throw ConfigError("turbine parameters must be positive");
  }
}

void DfigParams::validate() const {
  if (!(l_s > 0.0) || !(l_r > 0.0) || !(l_m > 0.0) || r_s < 0.0 || r_r < 0.0) {
    throw ConfigError("DFIG inductances must be positive and resistances nonnegative");
  }
  if (!(k1() > 0.0)) throw ConfigError("DFIG needs L_s L_r > L_m^2");
}

void WindPlantModel::validate() const {
  turbine.validate();
  dfig.validate();
  if (!(gamma > 0.0)) throw ConfigError("wind penetration gamma must be positive");
  if (pi.kappa_p < 0.0 || pi.kappa_i < 0.0) throw ConfigError("PI gains must be nonnegative");
}

DfigMatrices dfig_matrices(const DfigParams& p, double omega_g) {
  const double k1 = p.k1(), k2 = p.k2(), k3 = p.k3(), k4 = p.k4(), k5 = p.k5();
  const double w = omega_g;
  DfigMatrices m;
  m.a << -p.r_r * p.l_s / k1, 1.0 - w * k4 / k1, p.r_s * p.l_m / k1, -w * k3 / k1,
         -1.0 + w * k4 / k1, -p.r_r * p.l_s / k1, w * k3 / k1, p.r_s * p.l_m / k1,
         p.r_r * p.l_m / k1, w * k5 / k1, -p.r_s * p.l_r / k1, 1.0 + w * k2 / k1,
         -w * k5 / k1, p.r_r * p.l_m / k1, -1.0 - w * k2 / k1, -p.r_s * p.l_r / k1;
  m.r << 0.0, p.l_m / k1, 0.0, -p.l_r / k1;
  m.b << -p.l_s / k1, 0.0,
         0.0, -p.l_s / k1,
         p.l_m / k1, 0.0,
         0.0, p.l_m / k1;
  return m;
}

Eigen::Matrix3d turbine_matrix(const TurbineParams& p) {
  Eigen::Matrix3d a;
  a << -(p.d_c + p.d_r) / p.m_r, p.d_c / (p.m_r * p.n_g), -p.k_c / p.m_r,
       p.d_c / (p.m_g * p.n_g), -(p.d_c / (p.n_g * p.n_g) + p.d_g) / p.m_g, p.k_c / (p.m_g * p.n_g),
       p.omega_bar / 2.0, -p.omega_bar / (2.0 * p.n_g), 0.0;
  return a;
}

double dfig_torque(const DfigParams& p, const WindVec& x) {
  return p.l_m * (x(wi::i_qs) * x(wi::i_dr) - x(wi::i_ds) * x(wi::i_qr));
}

WindDerivative wind_vector_field(const WindPlantModel& m, const WindVec& x, double v1_mag,
                                 const Eigen::Vector2d& u) {
  const TurbineParams& t = m.turbine;
  const DfigParams& g = m.dfig;
  const PiController& pi = m.pi;
  const double omega_r = x(wi::omega_r);
  const double omega_g = x(wi::omega_g);

  WindDerivative out;
  out.torque = dfig_torque(g, x);

  Eigen::Vector3d eta_dot = turbine_matrix(t) * x.head<3>();
  eta_dot(1) += -2.0 / (t.omega_bar * t.m_g) * out.torque;
  if (t.p_a != 0.0) {
    if (!(omega_r > 0.0)) {
      throw NonphysicalState("wind rotor speed is not positive (omega_r = " +
                             std::to_string(omega_r) + ")");
    }
    eta_dot(0) += 2.0 / (t.omega_bar * omega_r * t.m_r) * t.p_a;
  }

  const double i_dr = x(wi::i_dr), i_qr = x(wi::i_qr), i_ds = x(wi::i_ds), i_qs = x(wi::i_qs);
  const double slip = omega_g - pi.omega_g_star;
  const double z_d = -slip * (g.l_m * i_qs + g.l_r * i_qr);
  const double z_q = slip * (g.l_m * i_ds + g.l_r * i_dr);
  const double e_d = i_dr - pi.i_dr_star;
  const double e_q = i_qr - pi.i_qr_star;
  const Eigen::Vector2d w(pi.kappa_p * e_d + x(wi::xi_d) + z_d,
                          pi.kappa_p * e_q + x(wi::xi_q) + z_q);

  const DfigMatrices dm = dfig_matrices(g, omega_g);
  const Eigen::Vector4d i_dot = dm.a * x.segment<4>(wi::i_dr) + dm.r * v1_mag + dm.b * (w + u);

  out.dx.head<3>() = eta_dot;
  out.dx.segment<4>(wi::i_dr) = i_dot;
  out.dx(wi::xi_d) = pi.kappa_i * e_d;
  out.dx(wi::xi_q) = pi.kappa_i * e_q;
  out.injection = wind_output(m, x, v1_mag);
  return out;
}

Complex wind_output(const WindPlantModel& m, const WindVec& x, double v1_mag) {
  return {m.gamma * v1_mag * x(wi::i_qs), m.gamma * v1_mag * x(wi::i_ds)};
}

Eigen::Matrix<double, kWindStates, 2> wind_input_matrix(const DfigParams& p) {
  Eigen::Matrix<double, kWindStates, 2> b = Eigen::Matrix<double, kWindStates, 2>::Zero();
  b.block<4, 2>(wi::i_dr, 0) = dfig_matrices(p, 0.0).b;
  return b;
}

WindVec wind_voltage_column(const DfigParams& p) {
  WindVec r = WindVec::Zero();
  r.segment<4>(wi::i_dr) = dfig_matrices(p, 0.0).r;
  return r;
}

Eigen::Matrix<double, kWindOutputs, kWindStates> wind_output_selector() {
  Eigen::Matrix<double, kWindOutputs, kWindStates> c =
      Eigen::Matrix<double, kWindOutputs, kWindStates>::Zero();
  c(0, wi::omega_r) = 1.0;
  c(1, wi::omega_g) = 1.0;
  for (int k = 0; k < 4; ++k) c(2 + k, wi::i_dr + k) = 1.0;
  return c;
}

WindEquilibrium wind_equilibrium(const WindPlantModel& m, double v1_mag, Complex order) {
  const TurbineParams& t = m.turbine;
  const DfigParams& g = m.dfig;
  const double i_qs = order.real();
  const double i_ds = order.imag();
  // Mechanical balance with omega_g = n_g omega_r reduces to
  // c omega_r^2 + tau omega_r - p_a / n_g = 0.
  const double c = 0.5 * t.omega_bar * (t.d_g * t.n_g + t.d_r / t.n_g);

  double omega_g = 0.0;
  Eigen::Vector4d sol = Eigen::Vector4d::Zero();
  bool converged = false;
  for (int iter = 0; iter < 100; ++iter) {
    const DfigMatrices dm = dfig_matrices(g, omega_g);
    Eigen::Matrix4d lhs;
    lhs.col(0) = dm.a.col(0);
    lhs.col(1) = dm.a.col(1);
    lhs.col(2) = dm.b.col(0);
    lhs.col(3) = dm.b.col(1);
    const Eigen::Vector4d rhs = -(dm.a.col(2) * i_ds + dm.a.col(3) * i_qs + dm.r * v1_mag);
    Eigen::FullPivLU<Eigen::Matrix4d> lu(lhs);
    if (!lu.isInvertible()) throw NoConvergence("wind equilibrium: singular current balance");
    sol = lu.solve(rhs);

    const double tau = g.l_m * (i_qs * sol(0) - i_ds * sol(1));
    const double disc = tau * tau + 4.0 * c * t.p_a / t.n_g;
    const double omega_r = (-tau + std::sqrt(std::max(disc, 0.0))) / (2.0 * c);
    const double next = t.n_g * omega_r;
    const double change = std::abs(next - omega_g);
    omega_g = next;
    if (change <= 1e-13 * std::max(1.0, std::abs(omega_g))) {
      converged = true;
      break;
    }
  }
  if (!converged) throw NoConvergence("wind equilibrium: speed iteration did not settle");

  const double omega_r = omega_g / t.n_g;
  if (t.p_a != 0.0 && !(omega_r > 0.0)) {
    throw NoConvergence("wind equilibrium: no positive rotor speed for this order");
  }

  WindEquilibrium eq;
  eq.x(wi::omega_r) = omega_r;
  eq.x(wi::omega_g) = omega_g;
  eq.x(wi::theta) =
      (t.p_a != 0.0 ? 2.0 * t.p_a / (t.omega_bar * omega_r) : 0.0) / t.k_c - t.d_r * omega_r / t.k_c;
  eq.x(wi::i_dr) = sol(0);
  eq.x(wi::i_qr) = sol(1);
  eq.x(wi::i_ds) = i_ds;
  eq.x(wi::i_qs) = i_qs;
  eq.x(wi::xi_d) = sol(2);
  eq.x(wi::xi_q) = sol(3);
  eq.pi = m.pi;
  eq.pi.omega_g_star = omega_g;
  eq.pi.i_dr_star = sol(0);
  eq.pi.i_qr_star = sol(1);
  return eq;
}

}  // namespace windgrid
