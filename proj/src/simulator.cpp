#include "windgrid/simulator.hpp"

#include <cmath>

#include "windgrid/errors.hpp"
#include "windgrid/retrofit.hpp"

namespace windgrid {

namespace wi = wind_index;

void SystemModel::validate() const {
  wind.validate();
  if (static_cast<int>(syncs.size()) != net.n_units() - 1) {
    throw ConfigError("network has " + std::to_string(net.n_units()) + " units but " +
                      std::to_string(syncs.size()) + " synchronous machines are configured");
  }
  for (const SyncUnit& s : syncs) {
    s.params.validate();
    s.pss.validate();
  }
}

void Scenario::validate() const {
  if (!(dt > 0.0) || dt > 0.01) throw ConfigError("scenario dt must lie in (0, 0.01]");
  if (!(t_end > 0.0)) throw ConfigError("scenario t_end must be positive");
  if (fault_enabled && !(t_fault + t_clear < t_end)) {
    throw ConfigError("scenario needs t_fault + t_clear < t_end");
  }
  if (t_clear < 0.0 || t_fault < 0.0) throw ConfigError("fault times must be nonnegative");
  if (record_every < 1) throw ConfigError("record_every must be at least 1");
  if (gamma_override && !(*gamma_override > 0.0)) throw ConfigError("gamma must be positive");
  if (kappa_i_override && *kappa_i_override < 0.0) throw ConfigError("kappa_i must be >= 0");
}

SystemModel apply_overrides(SystemModel m, const Scenario& sc) {
  if (sc.gamma_override) m.wind.gamma = *sc.gamma_override;
  if (sc.kappa_i_override) m.wind.pi.kappa_i = *sc.kappa_i_override;
  return m;
}

SystemModel apply_setpoints(SystemModel m, const Setpoints& sp) {
  m.wind.pi.omega_g_star = sp.wind_pi.omega_g_star;
  m.wind.pi.i_dr_star = sp.wind_pi.i_dr_star;
  m.wind.pi.i_qr_star = sp.wind_pi.i_qr_star;
  for (std::size_t k = 0; k < m.syncs.size() && k < sp.p_m.size(); ++k) {
    m.syncs[k].params.p_m = sp.p_m[k];
    m.syncs[k].pss.v_setpoint = sp.v_setpoint[k];
  }
  return m;
}

namespace {

// Power flow with the wind bus as a voltage-dependent PQ bus, machine 0 as
// slack and the remaining machines as PV buses.
BusVoltages power_flow(const SystemModel& m, const Dispatch& d) {
  const int n = m.net.n_units();
  const CMat& y = m.net.y_nominal();
  auto residual = [&](const Vec& z) {
    BusVoltages v(n);
    for (int k = 0; k < n; ++k) v(k) = Complex(z(k), z(n + k));
    const CVec s = (v.array() * (y * v).conjugate().array()).matrix();
    Vec r(2 * n);
    const Complex e1 = m.wind.gamma * std::abs(v(0)) * d.wind_order;
    r(0) = s(0).real() - e1.real();
    r(1) = s(0).imag() - e1.imag();
    r(2) = std::abs(v(1)) - d.v_mag[0];
    r(3) = v(1).imag();
    for (int k = 2; k < n; ++k) {
      r(2 * k) = s(k).real() - d.p[k - 1];
      r(2 * k + 1) = std::abs(v(k)) - d.v_mag[k - 1];
    }
    return r;
  };

  Vec z = Vec::Zero(2 * n);
  z.head(n).setOnes();
  for (int iter = 0; iter < 50; ++iter) {
    const Vec r = residual(z);
    if (!r.allFinite()) break;
    if (r.cwiseAbs().maxCoeff() < 1e-12) {
      BusVoltages v(n);
      for (int k = 0; k < n; ++k) v(k) = Complex(z(k), z(n + k));
      return v;
    }
    Mat jac(2 * n, 2 * n);
    for (int j = 0; j < 2 * n; ++j) {
      Vec zp = z, zm = z;
      zp(j) += 1e-7;
      zm(j) -= 1e-7;
      jac.col(j) = (residual(zp) - residual(zm)) / 2e-7;
    }
    Eigen::FullPivLU<Mat> lu(jac);
    if (!lu.isInvertible()) break;
    z -= lu.solve(r);
  }
  throw NoConvergence("power flow did not converge; the dispatch is infeasible at gamma = " +
                      std::to_string(m.wind.gamma));
}

// Internal voltage and angle reproducing the injection s at terminal v.
SyncState back_solve(const SyncParams& p, Complex v, Complex s, PowerForm form) {
  const double vm = std::abs(v);
  const double a = s.real() * p.chi / vm;
  const double disc = vm * vm - 4.0 * (a * a - s.imag() * p.chi);
  if (disc < 0.0) throw NoConvergence("machine operating point has no internal voltage");
  const double b = 0.5 * (vm + std::sqrt(disc));
  SyncState st;
  st.rho = std::hypot(a, b);
  st.delta = std::arg(v) + std::atan2(a, b);

  if (form != PowerForm::DifferenceAngle) {
    for (int iter = 0; iter < 50; ++iter) {
      const Complex r = sync_power(st, p, v, form) - s;
      if (std::abs(r) < 1e-14) break;
      Eigen::Matrix2d jac;
      for (int j = 0; j < 2; ++j) {
        SyncState sp = st, sm = st;
        const double h = 1e-7;
        (j == 0 ? sp.rho : sp.delta) += h;
        (j == 0 ? sm.rho : sm.delta) -= h;
        const Complex dd = (sync_power(sp, p, v, form) - sync_power(sm, p, v, form)) / (2.0 * h);
        jac(0, j) = dd.real();
        jac(1, j) = dd.imag();
      }
      const Eigen::Vector2d step = jac.fullPivLu().solve(Eigen::Vector2d(r.real(), r.imag()));
      st.rho -= step(0);
      st.delta -= step(1);
    }
  }
  const double phi = st.delta - std::arg(v);
  st.omega = 0.0;
  st.nu = p.alpha * st.rho - p.beta * vm * std::cos(phi);
  return st;
}

}  // namespace

EquilibriumPoint find_equilibrium(const SystemModel& m, const Dispatch& dispatch) {
  m.validate();
  const int n = m.net.n_units();
  if (static_cast<int>(dispatch.p.size()) != n - 1 ||
      static_cast<int>(dispatch.v_mag.size()) != n - 1) {
    throw ConfigError("dispatch needs one power and one voltage entry per machine");
  }

  EquilibriumPoint eq;
  eq.v_star = power_flow(m, dispatch);
  const CVec s = (eq.v_star.array() * (m.net.y_nominal() * eq.v_star).conjugate().array()).matrix();

  eq.v1_star = std::abs(eq.v_star(0));
  const WindEquilibrium weq = wind_equilibrium(m.wind, eq.v1_star, dispatch.wind_order);
  eq.x_star = weq.x;
  eq.setpoints.wind_pi = weq.pi;

  for (int k = 1; k < n; ++k) {
    const SyncParams& p = m.syncs[k - 1].params;
    const Complex v = eq.v_star(k);
    const SyncState st = back_solve(p, v, s(k), m.power_form);
    eq.sync_stars.push_back(st);
    const double phi = st.delta - std::arg(v);
    eq.setpoints.p_m.push_back(std::abs(v) * st.rho * std::sin(phi) / p.chi);
    eq.setpoints.v_setpoint.push_back(p.kappa > 0.0 ? std::abs(v) + st.nu / p.kappa
                                                    : std::abs(v));
  }
  eq.y_star = wind_output_selector() * eq.x_star;

  const SystemModel tuned = apply_setpoints(m, eq.setpoints);
  const SystemDynamics dyn(tuned, eq);
  const Vec x0 = dyn.initial_state();
  eq.e_star = dyn.injections(x0, eq.v_star);
  eq.balance_residual = balance_residual(eq.v_star, eq.e_star, m.net.y_nominal()).cwiseAbs().maxCoeff();
  const SystemDynamics::Eval ev = dyn.evaluate(x0, false, eq.v_star);
  eq.derivative_residual = ev.dx.cwiseAbs().maxCoeff();
  if (!(eq.derivative_residual < 1e-9) || !(eq.balance_residual < m.net_opts.tol)) {
    throw NoConvergence("equilibrium check failed (derivative residual " +
                        std::to_string(eq.derivative_residual) + ", balance residual " +
                        std::to_string(eq.balance_residual) + ")");
  }
  return eq;
}

SystemDynamics::SystemDynamics(const SystemModel& m, const EquilibriumPoint& eq,
                               const RetrofitController* rc)
    : model_(apply_setpoints(m, eq.setpoints)), eq_(eq), rc_(rc) {
  layout_.n_sync = static_cast<int>(model_.syncs.size());
  layout_.retrofit = rc != nullptr;
}

Vec SystemDynamics::initial_state() const {
  Vec x = Vec::Zero(layout_.size());
  x.head<kWindStates>() = eq_.x_star;
  for (int k = 0; k < layout_.n_sync; ++k) {
    const SyncState& s = eq_.sync_stars[k];
    const int o = layout_.sync(k);
    x(o) = s.delta;
    x(o + 1) = s.omega;
    x(o + 2) = s.rho;
    x(o + 3) = s.nu;
  }
  if (rc_ != nullptr) {
    x.segment(layout_.x_hat(), kWindStates) = rc_->x_hat;
    x.segment(layout_.x_obs(), kWindStates) = rc_->x_obs;
  }
  return x;
}

namespace {

SyncState sync_state_at(const Vec& x, int offset) {
  return {x(offset), x(offset + 1), x(offset + 2), x(offset + 3)};
}

}  // namespace

PowerInjections SystemDynamics::injections(const Vec& x, const BusVoltages& v) const {
  const WindVec xw = x.head<kWindStates>();
  PowerInjections e(v.size());
  e(0) = wind_output(model_.wind, xw, std::abs(v(0)));
  for (int k = 0; k < layout_.n_sync; ++k) {
    e(k + 1) = sync_power(sync_state_at(x, layout_.sync(k)), model_.syncs[k].params, v(k + 1),
                          model_.power_form);
  }
  return e;
}

BusVoltages SystemDynamics::solve_voltages(const Vec& x, bool faulted,
                                           const BusVoltages& v_guess) const {
  const WindVec xw = x.head<kWindStates>();
  const UnitInjection inj = [&](int k, Complex vk) -> Complex {
    if (k == 0) return wind_output(model_.wind, xw, std::abs(vk));
    return sync_power(sync_state_at(x, layout_.sync(k - 1)), model_.syncs[k - 1].params, vk,
                      model_.power_form);
  };
  return solve_network(inj, model_.net, v_guess, faulted, model_.net_opts).v;
}

SystemDynamics::Eval SystemDynamics::evaluate(const Vec& x, bool faulted,
                                              const BusVoltages& v_guess) const {
  if (x.size() != layout_.size()) throw DimensionMismatch("state vector has wrong length");
  Eval out;
  out.v = solve_voltages(x, faulted, v_guess);
  out.e = injections(x, out.v);
  out.dx = Vec::Zero(x.size());

  const WindVec xw = x.head<kWindStates>();
  const double v1 = std::abs(out.v(0));
  if (rc_ != nullptr) {
    const Vec y = wind_output_selector() * xw;
    const Vec x_hat = x.segment(layout_.x_hat(), kWindStates);
    const Vec x_obs = x.segment(layout_.x_obs(), kWindStates);
    const CompensatorOutput comp = compensator_step(*rc_, x_hat, y, v1);
    const ControlOutput ctl = control_output(*rc_, x_obs, y, comp.y_hat);
    out.u = ctl.u;
    out.dx.segment(layout_.x_hat(), kWindStates) = comp.dx_hat;
    out.dx.segment(layout_.x_obs(), kWindStates) = ctl.dx_obs;
  }
  out.dx.head<kWindStates>() = wind_vector_field(model_.wind, xw, v1, out.u).dx;

  for (int k = 0; k < layout_.n_sync; ++k) {
    const SyncUnit& unit = model_.syncs[k];
    const int o = layout_.sync(k);
    PssBlock pss = unit.pss;
    pss.state = {x(o + 4), x(o + 5), x(o + 6)};
    const PssOutput po = pss_output(pss, x(o + 1), pss.v_setpoint);
    const SyncState d = sync_derivative(sync_state_at(x, o), unit.params, out.v(k + 1), po.mu);
    out.dx(o) = d.delta;
    out.dx(o + 1) = d.omega;
    out.dx(o + 2) = d.rho;
    out.dx(o + 3) = d.nu;
    out.dx(o + 4) = po.d_state[0];
    out.dx(o + 5) = po.d_state[1];
    out.dx(o + 6) = po.d_state[2];
  }
  return out;
}

namespace {

Trajectory integrate(const SystemModel& m, const EquilibriumPoint& eq, const Scenario& sc,
                     const RetrofitController* rc, bool guarded) {
  sc.validate();
  const SystemModel model = apply_overrides(m, sc);
  const SystemDynamics dyn(model, eq, rc);

  Trajectory tr;
  tr.layout = dyn.layout();
  const long n_steps = std::lround(sc.t_end / sc.dt);
  const long fault_start = std::lround(sc.t_fault / sc.dt);
  const long fault_end = std::lround((sc.t_fault + sc.t_clear) / sc.dt);
  const CMat& y_nom = model.net.y_nominal();
  const CMat& y_flt = model.net.y_faulted();

  Vec x = dyn.initial_state();
  BusVoltages v = eq.v_star;
  double t = 0.0;

  auto record = [&](double time, const Vec& state, const SystemDynamics::Eval& ev, bool faulted) {
    tr.times.push_back(time);
    tr.states.push_back(state);
    tr.voltages.push_back(ev.v);
    tr.injections.push_back(ev.e);
    tr.controls.push_back(ev.u);
    const double res =
        balance_residual(ev.v, ev.e, faulted ? y_flt : y_nom).cwiseAbs().maxCoeff();
    tr.max_balance_residual = std::max(tr.max_balance_residual, res);
  };

  long step = 0;
  try {
    for (step = 0; step < n_steps; ++step) {
      t = static_cast<double>(step) * sc.dt;
      const bool faulted = sc.fault_enabled && step >= fault_start && step < fault_end;
      if (sc.fault_enabled && step == fault_start) x.head<kWindStates>() += sc.wind_kick;

      const SystemDynamics::Eval k1 = dyn.evaluate(x, faulted, v);
      if (step % sc.record_every == 0) record(t, x, k1, faulted);
      const SystemDynamics::Eval k2 = dyn.evaluate(x + 0.5 * sc.dt * k1.dx, faulted, k1.v);
      const SystemDynamics::Eval k3 = dyn.evaluate(x + 0.5 * sc.dt * k2.dx, faulted, k2.v);
      const SystemDynamics::Eval k4 = dyn.evaluate(x + sc.dt * k3.dx, faulted, k3.v);
      x += sc.dt / 6.0 * (k1.dx + 2.0 * k2.dx + 2.0 * k3.dx + k4.dx);
      v = k1.v;
      if (!x.allFinite()) throw NonphysicalState("state is no longer finite");
    }
    t = static_cast<double>(n_steps) * sc.dt;
    const bool faulted = sc.fault_enabled && n_steps >= fault_start && n_steps < fault_end;
    record(t, x, dyn.evaluate(x, faulted, v), faulted);
  } catch (const Error& err) {
    if (!guarded) throw SimulationError(t, err.what());
    tr.aborted = true;
    tr.abort_time = t;
    tr.abort_reason = err.what();
  }
  return tr;
}

}  // namespace

Trajectory simulate(const SystemModel& m, const EquilibriumPoint& eq, const Scenario& sc,
                    const RetrofitController* rc) {
  return integrate(m, eq, sc, rc, false);
}

Trajectory simulate_guarded(const SystemModel& m, const EquilibriumPoint& eq, const Scenario& sc,
                            const RetrofitController* rc) {
  return integrate(m, eq, sc, rc, true);
}

}  // namespace windgrid
